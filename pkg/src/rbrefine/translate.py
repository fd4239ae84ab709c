"""Lowering of typed source methods to the intermediate verification language.

Calls are lowered by label: exact callees become function calls that the
evaluator inlines, pure callees become uninterpreted functions wrapped in
assert(pre)/assume(post), and ``modifies`` callees havoc the listed fields
and return a fresh symbolic result.  Arguments of calls inside signatures are bound
once in a ``let`` so their translation is never duplicated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from rbrefine import ir as I
from rbrefine.errors import MissingImplementation, RbRefineError, TranslationError
from rbrefine.expand import Obligation, find_implementation
from rbrefine.syntax import ast as A
from rbrefine.typesys import (
    ClassT, ClassTable, MethodEntry, TypedExpr, check_method, check_refinements,
    resolve_type_name,
)

FUEL = 100_000


@dataclass
class TranslationState:
    """Fields, uninterpreted functions and inlined methods a translation needs."""

    fields: dict = field(default_factory=dict)  # used as ordered sets
    uninterpreted: dict = field(default_factory=dict)
    exact: dict = field(default_factory=dict)

    def merge(self, other: "TranslationState") -> None:
        self.fields.update(other.fields)
        self.uninterpreted.update(other.uninterpreted)
        self.exact.update(other.exact)


def _is_true(e: A.Expr) -> bool:
    return isinstance(e, A.Const) and e.kind == "true"


class Translator:
    """Translates one verification query; owns its fresh-name and object-id counters."""

    def __init__(self, table: ClassTable, state: Optional[TranslationState] = None):
        self.table = table
        self.state = state if state is not None else TranslationState()
        for f in table.all_fields():
            self.state.fields[f] = None
        self.defs: dict[str, I.FuncDef] = {}
        self._names = 0
        self._objects = 0
        self._fuel = FUEL
        self._refinements: dict = {}

    # -- helpers ----------------------------------------------------------

    def fresh(self, base: str) -> str:
        self._names += 1
        return f"{base}${self._names}"

    def next_object_id(self) -> int:
        self._objects += 1
        return self._objects

    def refinements(self, entry: MethodEntry):
        key = id(entry)
        if key not in self._refinements:
            self._refinements[key] = check_refinements(
                entry.owner, entry.singleton, entry.signature, self.table)
        return self._refinements[key]

    def _burn(self) -> None:
        self._fuel -= 1
        if self._fuel < 0:
            raise TranslationError("Unsupported", "translation fuel exhausted")

    # -- expressions ------------------------------------------------------

    def expr(self, te: TypedExpr, self_name: str = "self", subst: Optional[dict] = None):
        self._burn()
        subst = subst or {}
        e = te.expr
        ch = te.children
        if isinstance(e, A.Const):
            return I.IVal(e)
        if isinstance(e, A.Var):
            return I.IVar(subst.get(e.name, e.name))
        if isinstance(e, A.Self):
            return I.IVar(self_name)
        if isinstance(e, A.Assign):
            return I.IAssign(e.name, self.expr(ch[0], self_name, subst))
        if isinstance(e, A.If):
            c, t, f = (self.expr(x, self_name, subst) for x in ch)
            return I.IIf(c, t, f)
        if isinstance(e, A.Seq):
            return I.ISeq(self.expr(ch[0], self_name, subst), self.expr(ch[1], self_name, subst))
        if isinstance(e, A.FieldRead):
            self.state.fields[e.field] = None
            return I.IFieldRead(self_name, e.field)
        if isinstance(e, A.FieldAssign):
            self.state.fields[e.field] = None
            return I.IFieldAssign(self_name, e.field, self.expr(ch[0], self_name, subst))
        if isinstance(e, A.Return):
            return I.IReturn(self.expr(ch[0], self_name, subst))
        if isinstance(e, A.Raise):
            return I.IFail(e.message)
        if isinstance(e, A.New):
            nil = I.IVal(A.NIL)
            fields = tuple((f, nil) for f in self.state.fields)
            return I.IObj(self.table.class_id(e.class_name), self.next_object_id(), fields)
        if isinstance(e, A.ArrayLit):
            return I.IArrayLit(tuple(self.expr(x, self_name, subst) for x in ch))
        if isinstance(e, A.Call):
            return self.call(te, self_name, subst)
        raise TranslationError("Unsupported", f"cannot translate {type(e).__name__}", e.span)

    # -- calls ------------------------------------------------------------

    def call(self, te: TypedExpr, self_name: str, subst: dict):
        e: A.Call = te.expr
        recv, *args = te.children
        if te.dispatch is None:
            raise TranslationError(
                "UntypedReceiver", f"receiver of `{e.method}' has type {recv.type}", e.span)
        r_ir = self.expr(recv, self_name, subst)
        a_ir = [self.expr(a, self_name, subst) for a in args]
        if len(te.dispatch) == 1:
            return self.call_one(te.dispatch[0][1], r_ir, a_ir, e)
        # union receiver: evaluate receiver and arguments once, branch on class id
        s = self.fresh("recv")
        names = [self.fresh("arg") for _ in a_ir]
        branches = [self.call_one(entry, I.IVar(s), [I.IVar(n) for n in names], e)
                    for _cid, entry in te.dispatch]
        body = branches[-1]
        for (cid, _entry), br in reversed(list(zip(te.dispatch[:-1], branches[:-1]))):
            body = I.IIf(I.IClassIs(I.IVar(s), cid), br, body)
        return I.ILet(((s, r_ir),) + tuple(zip(names, a_ir)), body)

    def call_one(self, entry: MethodEntry, recv, args: list, e: A.Call):
        if entry.is_builtin:
            return self.builtin_call(entry, recv, args)
        if entry.label.kind == "exact":
            if entry.body is None:
                raise TranslationError("NoLabel", f"`{entry.qualified}' has neither body nor label",
                                       e.span)
            self.ensure_def(entry)
            self.state.exact[entry.mangled] = None
            return I.IFuncall(entry.mangled, (recv, *args), "exact")
        if entry.signature is None:
            raise TranslationError("NoLabel", f"`{entry.qualified}' has no signature", e.span)
        if entry.label.kind == "pure":
            return self.pure_call(entry, recv, args)
        return self.impure_call(entry, recv, args)

    def builtin_call(self, entry: MethodEntry, recv, args: list):
        call = I.IFuncall(entry.mangled, (recv, *args), "builtin")
        if entry.method not in ("/", "%"):
            return call
        s, d = self.fresh("x"), self.fresh("d")
        check = I.IAssert(I.IFuncall("Numeric_nonzero", (I.IVar(d),), "builtin"),
                          f"{entry.owner}#{entry.method}")
        return I.ILet(((s, recv), (d, args[0])),
                      I.seq(check, I.IFuncall(entry.mangled, (I.IVar(s), I.IVar(d)), "builtin")))

    def _bind_args(self, entry: MethodEntry, recv, args: list):
        """ANF: each argument bound exactly once; signature binders renamed to the bound names."""
        bindings = []
        s = self._bind(bindings, "self", recv)
        subst = {}
        for p, a in zip(entry.signature.params, args):
            subst[p.binder] = self._bind(bindings, p.binder, a)
        return bindings, s, subst

    def _bind(self, bindings: list, base: str, value) -> str:
        if isinstance(value, I.IVar) and "$" in value.name:
            return value.name
        name = self.fresh(base)
        bindings.append((name, value))
        return name

    def _pre(self, entry: MethodEntry, s: str, subst: dict) -> list:
        pre, _post = self.refinements(entry)
        out = []
        for p, typed in zip(entry.signature.params, pre):
            if not _is_true(p.predicate):
                out.append(I.IAssert(self.expr(typed, s, subst), entry.qualified))
        return out

    def _post(self, entry: MethodEntry, s: str, subst: dict) -> list:
        _pre, post = self.refinements(entry)
        if _is_true(entry.signature.result.predicate):
            return []
        return [I.IAssume(self.expr(post, s, subst))]

    def pure_call(self, entry: MethodEntry, recv, args: list):
        self.state.uninterpreted[entry.mangled] = None
        bindings, s, subst = self._bind_args(entry, recv, args)
        rname = self.fresh(entry.signature.result.binder or "r")
        if entry.signature.result.binder:
            subst = dict(subst, **{entry.signature.result.binder: rname})
        arg_vars = tuple(I.IVar(subst[p.binder]) for p in entry.signature.params)
        bindings.append((rname, I.IFuncall(entry.mangled, (I.IVar(s), *arg_vars), "uf")))
        body = I.seq(*self._pre(entry, s, subst), *self._post(entry, s, subst), I.IVar(rname))
        return I.ILet(tuple(bindings), body)

    def impure_call(self, entry: MethodEntry, recv, args: list):
        bindings, s, subst = self._bind_args(entry, recv, args)
        rname = self.fresh(entry.signature.result.binder or "r")
        post_subst = dict(subst)
        if entry.signature.result.binder:
            post_subst[entry.signature.result.binder] = rname
        havocs = []
        for target, fname in entry.label.modifies:
            self.state.fields[fname] = None
            havocs.append(I.IHavoc(s if target == "self" else subst[target], fname))
        rtype = resolve_type_name(entry.signature.result.base, self.table)
        inner = I.ILet(((rname, I.ISym(rtype)),),
                       I.seq(*havocs, *self._post(entry, s, post_subst), I.IVar(rname)))
        return I.ILet(tuple(bindings), I.seq(*self._pre(entry, s, subst), inner))

    # -- definitions ------------------------------------------------------

    def ensure_def(self, entry: MethodEntry, signature: Optional[A.MethodSignature] = None):
        name = entry.mangled
        if name in self.defs:
            return self.defs[name]
        self.defs[name] = None  # placeholder; recursion is bounded by the evaluator
        typed = check_method(entry, self.table, signature)
        fdef = I.FuncDef(name, ("self", *entry.params), self.expr(typed, "self", {}))
        self.defs[name] = fdef
        return fdef

    def definition(self, entry: MethodEntry, signature: Optional[A.MethodSignature] = None,
                   subject_owner: Optional[str] = None,
                   obligation: Optional[str] = None) -> I.VerificationQuery:
        sig = signature or entry.signature
        if len(sig.params) != len(entry.params):
            raise TranslationError(
                "Unsupported", f"signature of `{entry.qualified}' has {len(sig.params)} "
                f"parameter(s), definition has {len(entry.params)}", entry.span)
        fdef = self.ensure_def(entry, sig)
        # refinements are stated over the signature's binders; the body uses its own names
        subst = {p.binder: name for p, name in zip(sig.params, entry.params)}
        syms = [I.SymDef("self", ClassT(entry.owner, meta=entry.singleton))]
        for p, name in zip(sig.params, entry.params):
            syms.append(I.SymDef(name, resolve_type_name(p.base, self.table)))
        pre, post = check_refinements(entry.owner, entry.singleton, sig, self.table)
        assumptions = [self.expr(t, "self", subst) for p, t in zip(sig.params, pre)
                       if not _is_true(p.predicate)]
        rb = sig.result.binder or "result"
        if rb in entry.params or rb == "self":
            rb = self.fresh(rb)
        if sig.result.binder:
            subst = dict(subst, **{sig.result.binder: rb})
        call = I.IFuncall(fdef.name, (I.IVar("self"), *(I.IVar(n) for n in entry.params)),
                          "exact")
        guarantee = I.ILet(((rb, call),), self.expr(post, "self", subst))
        defs = {k: v for k, v in self.defs.items() if v is not None}
        return I.VerificationQuery((subject_owner or entry.owner, entry.method), entry, syms,
                                   assumptions, guarantee, defs, entry.singleton, obligation,
                                   sig)


def translate_expr(te: TypedExpr, state: TranslationState, self_name: str,
                   table: ClassTable) -> I.IExpr:
    return Translator(table, state).expr(te, self_name)


def translate_def(entry: MethodEntry, state: TranslationState, table: ClassTable,
                  signature: Optional[A.MethodSignature] = None):
    """Returns the method's FuncDef and its verification query."""
    q = Translator(table, state).definition(entry, signature)
    return q.defs[entry.mangled], q


@dataclass
class Failure:
    """A method that could not be translated; reported as TRANSLATION_ERROR."""

    subject: tuple
    singleton: bool
    error: RbRefineError

    @property
    def label(self) -> str:
        owner, method = self.subject
        kind = "class" if self.singleton else "instance"
        return f"{owner} {kind} method {method}"


def selected(entry: MethodEntry, label: Optional[str]) -> bool:
    return label is None or entry.verify == label


def translate_program(p: A.Program, table: ClassTable, obligations: list,
                      label: Optional[str] = None, state: Optional[TranslationState] = None):
    """One query per annotated method body, plus one per include obligation.

    Returns ``(defs, items)`` where items are VerificationQuery or Failure
    rows in declaration order.
    """
    state = state if state is not None else TranslationState()
    items: list = []
    defs: dict = {}

    def run(entry, sig=None, owner=None, obligation=None):
        tr = Translator(table, state)
        try:
            q = tr.definition(entry, sig, owner, obligation)
        except RbRefineError as exc:
            items.append(Failure((owner or entry.owner, entry.method), entry.singleton, exc))
            return
        for k, v in q.defs.items():
            defs.setdefault(k, v)
        items.append(q)

    for entry in table.entries():
        if entry.body is None or entry.signature is None or entry.origin != "userDef":
            continue
        if not selected(entry, label):
            continue
        run(entry, obligation=entry.obligation)

    for ob in obligations:
        impl = find_implementation(table, ob.class_name, ob.method)
        annot = table[ob.module].instance_methods[ob.method]
        if not selected(impl or annot, label) and not selected(annot, label):
            continue
        if impl is None:
            err = MissingImplementation(
                f"`{ob.class_name}' includes `{ob.module}' but never defines `{ob.method}'",
                annot.span)
            items.append(Failure((ob.class_name, ob.method), False, err))
        elif impl.obligation != ob.module:
            # the class has its own signature; it must also meet the module's
            run(impl, ob.signature, ob.class_name, ob.module)
    return list(defs.values()), items


def infer_state(p: A.Program, table: ClassTable, obligations: Optional[list] = None,
                label: Optional[str] = None) -> TranslationState:
    """The smallest field/function sets for which every selected method translates."""
    state = TranslationState()
    translate_program(p, table, obligations or [], label, state)
    return state
