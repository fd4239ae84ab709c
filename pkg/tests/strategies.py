"""Hypothesis strategies for source expressions and programs."""

from hypothesis import strategies as st

from rbrefine.syntax import ast as A

PARAMS = ("a", "b")
FIELDS = ("f", "g")
BINOPS = ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=")

leaves = st.one_of(
    st.integers(-1000, 1000).map(A.int_const),
    st.sampled_from([A.Const("true", True), A.Const("false", False), A.Const("nil")]),
    st.sampled_from(PARAMS).map(A.Var),
    st.sampled_from(FIELDS).map(A.FieldRead),
    st.just(A.Self()),
)


def _extend(children):
    return st.one_of(
        st.builds(lambda op, l, r: A.Call(l, op, (r,)), st.sampled_from(BINOPS), children,
                  children),
        st.builds(lambda c, t, e: A.If(c, t, e), children, children, children),
        st.builds(lambda r, m, args: A.Call(r, m, tuple(args)), children,
                  st.sampled_from(["foo", "bar?", "size"]), st.lists(children, max_size=2)),
        st.builds(lambda f, v: A.FieldAssign(f, v), st.sampled_from(FIELDS), children),
        st.builds(lambda v: A.Return(v), children),
        st.builds(lambda x, y: A.Seq(x, y), children, children),
        st.builds(lambda n, v: A.Assign(n, v), st.sampled_from(PARAMS), children),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


def method_source(body: A.Expr) -> A.Program:
    m = A.MethodDef("m", False, PARAMS, None, A.EXACT, body)
    return A.Program((A.ClassDecl("K", None, (m,)),))
