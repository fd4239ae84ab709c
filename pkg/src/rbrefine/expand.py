"""Static accessor generation and include-site obligations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from rbrefine.errors import MissingFieldType, UnknownClass
from rbrefine.syntax import ast as A
from rbrefine.typesys import ClassT, ClassTable, MethodEntry, members_of


@dataclass(frozen=True)
class Obligation:
    class_name: str
    method: str
    signature: A.MethodSignature
    label: A.Label
    module: str


def _type_name(t) -> A.BaseTypeName:
    parts = members_of(t)
    names = []
    for c in parts:
        if c.name == "Array":
            names.append(A.TypeName("Array", _type_name(c.elem) if c.elem is not None else None))
        else:
            names.append(A.TypeName(c.name))
    if not names:
        return A.TypeName("nil")
    return names[0] if len(names) == 1 else A.UnionTypeName(tuple(names))


def _eq(a: A.Expr, b: A.Expr) -> A.Expr:
    return A.Call(a, "==", (b,))


def _bare(name: str) -> A.Expr:
    return A.Call(A.Self(), name, ())


def _add(table: ClassTable, entry: MethodEntry) -> None:
    # explicit user annotations and definitions win over generated ones
    info = table[entry.owner]
    if entry.method not in info.instance_methods:
        table.register(entry)


def accessor_entries(owner: str, fname: str, base: A.BaseTypeName) -> list[MethodEntry]:
    getter = A.MethodSignature((), A.RefinedType("v", base, _eq(A.Var("v"), A.FieldRead(fname))))
    setter = A.MethodSignature(
        (A.RefinedType("i", base),),
        A.RefinedType("o", base, _eq(A.FieldRead(fname), A.Var("i"))))
    return [
        MethodEntry(owner, fname, getter, A.PURE, origin="generated"),
        MethodEntry(owner, fname + "=", setter, A.Label("modifies", (("self", fname),)),
                    params=("i",), origin="generated"),
    ]


def association_entries(owner: str, name: str, target: str) -> list[MethodEntry]:
    base = A.TypeName(target)
    getter = A.MethodSignature((), A.RefinedType("c", base))
    setter = A.MethodSignature(
        (A.RefinedType("i", base),),
        A.RefinedType("o", base, _eq(_bare(name), A.Var("i"))))
    return [
        MethodEntry(owner, name, getter, A.PURE, origin="generated"),
        MethodEntry(owner, name + "=", setter, A.Label("modifies", (("self", name),)),
                    params=("i",), origin="generated"),
    ]


def _camel(name: str) -> str:
    return "".join(part[:1].upper() + part[1:] for part in name.split("_"))


def expand_generators(p: A.Program, table: ClassTable) -> ClassTable:
    """Registers the annotations that ``attr_accessor`` and ``belongs_to`` would generate."""
    for d in p.classes():
        info = table[d.name]
        for m in d.members:
            if isinstance(m, A.AttrAccessor):
                for f in m.fields:
                    t = table.field_type(d.name, f)
                    if t is None:
                        raise MissingFieldType(
                            f"attr_accessor :{f} needs var_type :@{f}", m.span)
                    for e in accessor_entries(d.name, f, _type_name(t)):
                        _add(table, e)
            elif isinstance(m, A.Generator) and m.kind == "belongs_to":
                for n in m.args:
                    target = _camel(n)
                    if target not in table or table[target].kind != "class":
                        raise UnknownClass(f"belongs_to :{n}: unknown class `{target}'", m.span)
                    info.field_types.setdefault(n, ClassT(target))
                    for e in association_entries(d.name, n, target):
                        _add(table, e)
    return table


def find_implementation(table: ClassTable, cls: str, method: str) -> Optional[MethodEntry]:
    for anc in table.ancestors(cls):
        e = table[anc].instance_methods.get(method)
        if e is not None and e.body is not None:
            return e
    return None


def collect_obligations(p: A.Program, table: ClassTable) -> list[Obligation]:
    """One obligation per (including class, module annotation without a body).

    When the class supplies an implementation that carries no signature of its
    own, the module's annotation becomes its signature so that callers and the
    obligation query agree on it.
    """
    out = []
    for d in p.classes():
        if not isinstance(d, A.ClassDecl):
            continue
        for mod in table[d.name].included:
            for name, entry in table[mod].instance_methods.items():
                if entry.body is not None or entry.origin != "annotation":
                    continue
                ob = Obligation(d.name, name, entry.signature, entry.label, mod)
                out.append(ob)
                impl = find_implementation(table, d.name, name)
                if impl is not None and impl.signature is None:
                    impl.signature = entry.signature
                    impl.label = entry.label
                    impl.obligation = mod
    return out
