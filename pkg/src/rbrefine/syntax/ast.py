"""Source-level AST for the Ruby subset.

Nodes are frozen dataclasses.  Spans are excluded from equality so that
``parse(print(p)) == p`` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional, Union

from rbrefine.errors import NO_SPAN, Span


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    kind: str  # nil | true | false | int | float
    value: Union[None, bool, int, Decimal] = None
    span: Span = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    name: str
    value: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    else_: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Seq:
    first: "Expr"
    second: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Self:
    span: Span = _span()


@dataclass(frozen=True)
class FieldRead:
    field: str  # stored without the '@'
    span: Span = _span()


@dataclass(frozen=True)
class FieldAssign:
    field: str
    value: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    receiver: "Expr"
    method: str
    args: tuple = ()
    span: Span = _span()


@dataclass(frozen=True)
class New:
    class_name: str
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    value: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Raise:
    message: str
    span: Span = _span()


@dataclass(frozen=True)
class ArrayLit:
    elems: tuple = ()
    span: Span = _span()


Expr = Union[Const, Var, Assign, If, Seq, Self, FieldRead, FieldAssign, Call,
             New, Return, Raise, ArrayLit]

NIL = Const("nil")
TRUE = Const("true", True)
FALSE = Const("false", False)


def int_const(v: int, span: Span = NO_SPAN) -> Const:
    return Const("int", v, span)


def children(e: Expr) -> tuple:
    if isinstance(e, (Assign, FieldAssign, Return)):
        return (e.value,)
    if isinstance(e, If):
        return (e.cond, e.then, e.else_)
    if isinstance(e, Seq):
        return (e.first, e.second)
    if isinstance(e, Call):
        return (e.receiver,) + tuple(e.args)
    if isinstance(e, ArrayLit):
        return tuple(e.elems)
    return ()


def walk(e: Expr):
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


# --------------------------------------------------------------------------
# Types and signatures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeName:
    """A base type as written: ``Integer``, ``Time``, ``Array<Integer>``, ``nil``."""

    name: str
    elem: Optional["TypeName"] = None
    span: Span = _span()

    def __str__(self) -> str:
        if self.elem is not None:
            return f"{self.name}<{self.elem}>"
        return self.name


@dataclass(frozen=True)
class UnionTypeName:
    members: tuple
    span: Span = _span()

    def __str__(self) -> str:
        return " or ".join(str(m) for m in self.members)


BaseTypeName = Union[TypeName, UnionTypeName]


@dataclass(frozen=True)
class RefinedType:
    binder: Optional[str]
    base: BaseTypeName
    predicate: Expr = TRUE
    span: Span = _span()


@dataclass(frozen=True)
class MethodSignature:
    params: tuple  # of RefinedType
    result: RefinedType
    span: Span = _span()

    @property
    def param_names(self) -> list[str]:
        return [p.binder for p in self.params]


@dataclass(frozen=True)
class Label:
    kind: str  # exact | pure | modifies
    modifies: tuple = ()  # of (target, field)

    def __str__(self) -> str:
        if self.kind == "modifies":
            inner = ", ".join(f"{t}: @{f}" for t, f in self.modifies)
            return f"modifies: {{ {inner} }}"
        return self.kind


EXACT = Label("exact")
PURE = Label("pure")


# --------------------------------------------------------------------------
# Declarations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: Optional[str]
    members: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    members: tuple
    span: Span = _span()


@dataclass(frozen=True)
class VarType:
    field: str
    base: BaseTypeName
    span: Span = _span()


@dataclass(frozen=True)
class MethodDef:
    name: str
    singleton: bool
    params: tuple  # parameter names
    signature: Optional[MethodSignature]
    label: Label
    body: Expr
    verify: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class MethodAnnot:
    owner: str
    name: str
    singleton: bool
    signature: MethodSignature
    label: Label
    verify: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class Include:
    module: str
    span: Span = _span()


@dataclass(frozen=True)
class AttrAccessor:
    fields: tuple
    span: Span = _span()


@dataclass(frozen=True)
class Generator:
    kind: str
    args: tuple
    span: Span = _span()


Decl = Union[ClassDecl, ModuleDecl, VarType, MethodDef, MethodAnnot, Include,
             AttrAccessor, Generator]


@dataclass(frozen=True)
class Program:
    decls: tuple = ()

    def classes(self):
        for d in self.decls:
            if isinstance(d, (ClassDecl, ModuleDecl)):
                yield d
