"""The intermediate verification language: assert/assume/havoc over object literals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from rbrefine.syntax import ast as A
from rbrefine.syntax.printer import print_expr


@dataclass(frozen=True)
class IVal:
    const: A.Const


@dataclass(frozen=True)
class IObj:
    """Object literal: class id, object id and initial field bindings."""

    class_id: int
    object_id: int
    fields: tuple  # of (field, IExpr)


@dataclass(frozen=True)
class IArrayLit:
    elems: tuple


@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class IAssign:
    name: str
    value: "IExpr"


@dataclass(frozen=True)
class IIf:
    cond: "IExpr"
    then: "IExpr"
    else_: "IExpr"


@dataclass(frozen=True)
class ISeq:
    first: "IExpr"
    second: "IExpr"


@dataclass(frozen=True)
class ILet:
    bindings: tuple  # of (name, IExpr), scoped left to right
    body: "IExpr"


@dataclass(frozen=True)
class IFuncall:
    name: str
    args: tuple
    kind: str = "exact"  # exact | uf | builtin


@dataclass(frozen=True)
class IAssert:
    cond: "IExpr"
    tag: str = ""  # callee whose precondition this is, if any


@dataclass(frozen=True)
class IAssume:
    cond: "IExpr"


@dataclass(frozen=True)
class IReturn:
    value: "IExpr"


@dataclass(frozen=True)
class IHavoc:
    target: str
    field: str


@dataclass(frozen=True)
class IFieldAssign:
    target: str
    field: str
    value: "IExpr"


@dataclass(frozen=True)
class IFieldRead:
    target: str
    field: str


@dataclass(frozen=True)
class IFail:
    message: str = ""


@dataclass(frozen=True)
class IClassIs:
    """``classid(target) == class_id``; used for union-receiver dispatch."""

    target: "IExpr"
    class_id: int


@dataclass(frozen=True)
class ISym:
    """A fresh symbolic value of the given base type (result of an impure call)."""

    type: object


IExpr = Union[IVal, IObj, IArrayLit, IVar, IAssign, IIf, ISeq, ILet, IFuncall, IAssert,
              IAssume, IReturn, IHavoc, IFieldAssign, IFieldRead, IFail, IClassIs, ISym]


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple  # leading "self"
    body: IExpr


@dataclass(frozen=True)
class SymDef:
    name: str
    type: object  # typesys BaseType


IDef = Union[FuncDef, SymDef]


@dataclass
class VerificationQuery:
    subject: tuple  # (owner, method) as displayed
    entry: object  # the MethodEntry whose body is verified
    sym_inputs: list  # of SymDef
    assumptions: list  # of IExpr
    guarantee: IExpr
    defs: dict  # mangled name -> FuncDef reachable from this query
    singleton: bool = False
    obligation: Optional[str] = None
    signature: Optional[A.MethodSignature] = None

    @property
    def label(self) -> str:
        owner, method = self.subject
        kind = "class" if self.singleton else "instance"
        return f"{owner} {kind} method {method}"

    @property
    def file_stem(self) -> str:
        owner, method = self.subject
        return f"{owner}_{'cls_' if self.singleton else ''}{_file_safe(method)}"


_OPNAMES = {"+": "plus", "-": "minus", "*": "times", "/": "div", "%": "mod", "<": "lt",
            "<=": "le", ">": "gt", ">=": "ge", "==": "eq", "!=": "ne", "<<": "shl",
            "[]": "aref", "[]=": "aset", "!": "not", "-@": "neg"}


def _file_safe(name: str) -> str:
    if name in _OPNAMES:
        return _OPNAMES[name]
    return (name.replace("?", "_p").replace("!", "_bang").replace("=", "_set"))


# --------------------------------------------------------------------------
# Rendering, for --dump-ir and golden tests
# --------------------------------------------------------------------------


def render(e: IExpr) -> str:
    if isinstance(e, IVal):
        return print_expr(e.const)
    if isinstance(e, IObj):
        fields = ", ".join(f"@{f}: {render(v)}" for f, v in e.fields)
        return f"obj(class={e.class_id}, id={e.object_id}{', ' + fields if fields else ''})"
    if isinstance(e, IArrayLit):
        return "[" + ", ".join(render(x) for x in e.elems) + "]"
    if isinstance(e, IVar):
        return e.name
    if isinstance(e, IAssign):
        return f"{e.name} := {render(e.value)}"
    if isinstance(e, IIf):
        return f"if {render(e.cond)} then {render(e.then)} else {render(e.else_)} end"
    if isinstance(e, ISeq):
        return f"{render(e.first)}; {render(e.second)}"
    if isinstance(e, ILet):
        binds = ", ".join(f"{n} = {render(v)}" for n, v in e.bindings)
        return f"let {binds} in ({render(e.body)})"
    if isinstance(e, IFuncall):
        mark = {"exact": "", "uf": "uf:", "builtin": ""}[e.kind]
        return f"{mark}{e.name}(" + ", ".join(render(a) for a in e.args) + ")"
    if isinstance(e, IAssert):
        return f"assert({render(e.cond)})"
    if isinstance(e, IAssume):
        return f"assume({render(e.cond)})"
    if isinstance(e, IReturn):
        return f"return({render(e.value)})"
    if isinstance(e, IHavoc):
        return f"havoc({e.target}.@{e.field})"
    if isinstance(e, IFieldAssign):
        return f"{e.target}.@{e.field} := {render(e.value)}"
    if isinstance(e, IFieldRead):
        return f"{e.target}.@{e.field}"
    if isinstance(e, IFail):
        return "fail"
    if isinstance(e, IClassIs):
        return f"classid({render(e.target)}) == {e.class_id}"
    if isinstance(e, ISym):
        return f"sym({e.type})"
    raise TypeError(f"not an IR expression: {e!r}")


def render_def(d: IDef) -> str:
    if isinstance(d, FuncDef):
        return f"define {d.name}({', '.join(d.params)}) = {render(d.body)}"
    return f"symbolic {d.name} : {d.type}"


def render_query(q: VerificationQuery) -> str:
    lines = [f"query {q.label}"]
    for s in q.sym_inputs:
        lines.append("  " + render_def(s))
    for a in q.assumptions:
        lines.append("  assume " + render(a))
    lines.append("  verify " + render(q.guarantee))
    return "\n".join(lines)


def children(e: IExpr) -> tuple:
    if isinstance(e, IObj):
        return tuple(v for _f, v in e.fields)
    if isinstance(e, IArrayLit):
        return tuple(e.elems)
    if isinstance(e, (IAssign, IReturn, IFieldAssign)):
        return (e.value,)
    if isinstance(e, IIf):
        return (e.cond, e.then, e.else_)
    if isinstance(e, ISeq):
        return (e.first, e.second)
    if isinstance(e, ILet):
        return tuple(v for _n, v in e.bindings) + (e.body,)
    if isinstance(e, IFuncall):
        return tuple(e.args)
    if isinstance(e, (IAssert, IAssume)):
        return (e.cond,)
    if isinstance(e, IClassIs):
        return (e.target,)
    return ()


def walk(e: IExpr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def seq(*items: IExpr) -> IExpr:
    items = [i for i in items if i is not None]
    out = items[-1]
    for i in reversed(items[:-1]):
        out = ISeq(i, out)
    return out
