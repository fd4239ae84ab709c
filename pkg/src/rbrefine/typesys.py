"""Class table and flow-insensitive base type checking.

The checker tags every expression with a base type and records, at each
call site, the list of ``(class_id, MethodEntry)`` callees that the
translation dispatches over.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from rbrefine.errors import (
    ArityMismatch, ConflictingFieldType, DuplicateDefinition, LabelError, NoSignature,
    NoTypeForField, PurityError, Span, TypeMismatch, UnknownClass, UnknownSuperclass,
)
from rbrefine.syntax import ast as A

BUILTIN_CLASSES = ("Integer", "Float", "Bool", "NilClass", "Array")
NUMERIC = ("Integer", "Float")


# --------------------------------------------------------------------------
# Base types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassT:
    name: str
    elem: Optional["BaseType"] = None  # Array element type
    meta: bool = False  # the class object itself (receiver of singleton methods)

    def __str__(self) -> str:
        if self.meta:
            return f"singleton({self.name})"
        if self.name == "Array":
            return f"Array<{self.elem if self.elem is not None else 'untyped'}>"
        return self.name


@dataclass(frozen=True)
class UnionT:
    members: tuple  # of ClassT, sorted by name, size >= 2

    def __str__(self) -> str:
        return " or ".join(str(m) for m in self.members)


@dataclass(frozen=True)
class NilT:
    def __str__(self) -> str:
        return "nil"


@dataclass(frozen=True)
class UntypedT:
    def __str__(self) -> str:
        return "untyped"


@dataclass(frozen=True)
class BottomT:
    """Type of ``return`` and ``raise``: control never continues."""

    def __str__(self) -> str:
        return "bottom"


BaseType = Union[ClassT, UnionT, NilT, UntypedT, BottomT]

NIL_T = NilT()
UNTYPED = UntypedT()
BOTTOM = BottomT()
INT_T = ClassT("Integer")
FLOAT_T = ClassT("Float")
BOOL_T = ClassT("Bool")


def union_of(types) -> BaseType:
    """Join for flow merges: nil and bottom are absorbed, unions flattened."""
    members: dict = {}
    saw_nil = saw_untyped = False
    for t in types:
        if isinstance(t, UnionT):
            for m in t.members:
                members[m] = None
        elif isinstance(t, ClassT):
            members[t] = None
        elif isinstance(t, NilT):
            saw_nil = True
        elif isinstance(t, UntypedT):
            saw_untyped = True
    if saw_untyped:
        return UNTYPED
    # Array<Integer> joined with Array<untyped> keeps the informative one
    arrays = [m for m in members if m.name == "Array" and not m.meta]
    if len(arrays) > 1:
        typed = [a for a in arrays if a.elem is not None]
        for a in arrays:
            if a.elem is None and typed:
                del members[a]
    if not members:
        return NIL_T if saw_nil else BOTTOM
    if len(members) == 1:
        return next(iter(members))
    return UnionT(tuple(sorted(members, key=str)))


def members_of(t: BaseType) -> tuple:
    if isinstance(t, UnionT):
        return t.members
    if isinstance(t, ClassT):
        return (t,)
    return ()


# --------------------------------------------------------------------------
# Class table
# --------------------------------------------------------------------------


@dataclass
class MethodEntry:
    owner: str
    method: str
    signature: Optional[A.MethodSignature]
    label: A.Label
    body: Optional[A.Expr] = None
    params: tuple = ()
    singleton: bool = False
    origin: str = "userDef"  # userDef | annotation | generated | builtin
    verify: Optional[str] = None
    obligation: Optional[str] = None  # module whose annotation this def must meet
    span: Span = field(default_factory=lambda: Span(0, 0))

    @property
    def mangled(self) -> str:
        if self.origin == "builtin":
            return f"{self.owner}_{self.method}"
        sep = "_cls_" if self.singleton else "_"
        return f"{self.owner}{sep}{self.method}"

    @property
    def qualified(self) -> str:
        return f"{self.owner}{'.' if self.singleton else '#'}{self.method}"

    @property
    def is_builtin(self) -> bool:
        return self.origin == "builtin"


@dataclass
class ClassInfo:
    name: str
    class_id: int
    kind: str  # builtin | class | module
    superclass: Optional[str] = None
    field_types: dict = field(default_factory=dict)
    instance_methods: dict = field(default_factory=dict)
    singleton_methods: dict = field(default_factory=dict)
    included: list = field(default_factory=list)
    generators: list = field(default_factory=list)
    accessors: list = field(default_factory=list)


class ClassTable:
    def __init__(self):
        self.classes: dict[str, ClassInfo] = {}
        self.order: list[MethodEntry] = []  # methods in declaration order
        self._by_id: dict[int, str] = {}
        for i, name in enumerate(BUILTIN_CLASSES, start=1):
            self._add(ClassInfo(name, i, "builtin"))

    def _add(self, info: ClassInfo) -> None:
        self.classes[info.name] = info
        self._by_id[info.class_id] = info.name

    def class_id(self, name: str) -> int:
        return self.classes[name].class_id

    def name_of(self, class_id: int) -> str:
        return self._by_id[class_id]

    def __contains__(self, name: str) -> bool:
        return name in self.classes

    def __getitem__(self, name: str) -> ClassInfo:
        return self.classes[name]

    def user_classes(self):
        return [c for c in self.classes.values() if c.kind != "builtin"]

    def ancestors(self, name: str) -> list[str]:
        """Method resolution order: class, its modules in include order, then superclass."""
        out: list[str] = []
        cur: Optional[str] = name
        while cur is not None and cur in self.classes and cur not in out:
            info = self.classes[cur]
            out.append(cur)
            for m in info.included:
                if m not in out:
                    out.append(m)
            cur = info.superclass
        return out

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def field_type(self, owner: str, fname: str) -> Optional[BaseType]:
        for anc in self.ancestors(owner):
            t = self.classes[anc].field_types.get(fname)
            if t is not None:
                return t
        return None

    def all_fields(self) -> list[str]:
        seen: dict = {}
        for info in self.classes.values():
            for f in info.field_types:
                seen[f] = None
        return list(seen)

    def lookup(self, cls: str, method: str, singleton: bool = False) -> Optional[MethodEntry]:
        for anc in self.ancestors(cls):
            info = self.classes[anc]
            table = info.singleton_methods if singleton else info.instance_methods
            if method in table:
                return table[method]
        return None

    def register(self, entry: MethodEntry) -> None:
        info = self.classes[entry.owner]
        table = info.singleton_methods if entry.singleton else info.instance_methods
        if entry.method in table:
            raise DuplicateDefinition(f"method `{entry.qualified}' declared twice", entry.span)
        table[entry.method] = entry
        self.order.append(entry)

    def entries(self):
        return list(self.order)


def resolve_type_name(t: A.BaseTypeName, table: ClassTable) -> BaseType:
    if isinstance(t, A.UnionTypeName):
        return union_of(resolve_type_name(m, table) for m in t.members)
    if t.name == "nil":
        return NIL_T
    if t.name == "Array":
        elem = resolve_type_name(t.elem, table) if t.elem is not None else None
        return ClassT("Array", elem)
    if t.name not in table:
        raise UnknownClass(f"unknown class `{t.name}'", t.span)
    return ClassT(t.name)


def build_class_table(p: A.Program) -> ClassTable:
    """Registers every class, module, field type and method; ids in declaration order."""
    table = ClassTable()
    next_id = len(BUILTIN_CLASSES) + 1
    for d in p.classes():
        if d.name in table:
            raise DuplicateDefinition(f"class or module `{d.name}' defined twice", d.span)
        kind = "module" if isinstance(d, A.ModuleDecl) else "class"
        sup = d.superclass if isinstance(d, A.ClassDecl) else None
        table._add(ClassInfo(d.name, next_id, kind, sup))
        next_id += 1

    for d in p.classes():
        info = table[d.name]
        if info.superclass is not None and (info.superclass not in table
                                            or table[info.superclass].kind == "module"):
            raise UnknownSuperclass(f"unknown superclass `{info.superclass}'", d.span)
        for m in d.members:
            if isinstance(m, A.VarType):
                t = resolve_type_name(m.base, table)
                old = info.field_types.get(m.field)
                if old is not None and old != t:
                    raise ConflictingFieldType(
                        f"conflicting types for @{m.field}: {old} and {t}", m.span)
                info.field_types[m.field] = t
            elif isinstance(m, A.Include):
                if isinstance(d, A.ModuleDecl):
                    raise LabelError("include is only allowed inside a class", m.span)
                if m.module not in table or table[m.module].kind != "module":
                    raise UnknownClass(f"unknown module `{m.module}'", m.span)
                info.included.append(m.module)
            elif isinstance(m, A.AttrAccessor):
                info.accessors.extend(m.fields)
            elif isinstance(m, A.Generator):
                info.generators.append(m)
            elif isinstance(m, A.MethodDef):
                if m.signature is not None:
                    _resolve_signature(m.signature, table)
                table.register(MethodEntry(
                    d.name, m.name, m.signature, m.label, m.body, m.params, m.singleton,
                    "userDef", m.verify, span=m.span))
            elif isinstance(m, A.MethodAnnot):
                _resolve_signature(m.signature, table)
                if m.label.kind == "exact":
                    raise LabelError(f"annotation `{m.name}' cannot be exact", m.span)
                table.register(MethodEntry(
                    d.name, m.name, m.signature, m.label, None, tuple(m.signature.param_names),
                    m.singleton, "annotation", m.verify, span=m.span))
    return table


def _resolve_signature(sig: A.MethodSignature, table: ClassTable) -> None:
    for rt in list(sig.params) + [sig.result]:
        resolve_type_name(rt.base, table)


# --------------------------------------------------------------------------
# Built-in methods
# --------------------------------------------------------------------------

_ARITH = ("+", "-", "*", "/", "%")
_CMP = ("<", "<=", ">", ">=")


def _numeric_result(recv: ClassT, arg: BaseType, span) -> BaseType:
    if isinstance(arg, (NilT, BottomT)):
        return recv
    names = {m.name for m in members_of(arg)}
    if not names or not names <= set(NUMERIC):
        raise TypeMismatch("Integer or Float", str(arg), span)
    if recv.name == "Float" or "Float" in names:
        return FLOAT_T
    return INT_T


def _builtin_rule(cls: ClassT, method: str) -> Optional[tuple[int, Callable]]:
    """(arity, result-type function) for built-in methods, or None."""
    name = cls.name
    if method in ("==", "!="):
        return 1, lambda args, span: BOOL_T
    if method in ("!", "nil?"):
        return 0, lambda args, span: BOOL_T
    if cls.meta:
        return None
    if name in NUMERIC:
        if method in _ARITH:
            return 1, lambda args, span: _numeric_result(cls, args[0], span)
        if method in _CMP:
            def cmp(args, span):
                _numeric_result(cls, args[0], span)
                return BOOL_T
            return 1, cmp
        if method in ("-@", "abs"):
            return 0, lambda args, span: cls
        if method == "to_f":
            return 0, lambda args, span: FLOAT_T
        if method in ("zero?", "positive?", "negative?"):
            return 0, lambda args, span: BOOL_T
        if method == "to_i" and name == "Integer":
            return 0, lambda args, span: INT_T
    if name == "Array":
        elem = cls.elem if cls.elem is not None else UNTYPED

        def expect_elem(t, span):
            if cls.elem is not None and not compatible(t, cls.elem, None):
                raise TypeMismatch(str(cls.elem), str(t), span)

        def expect_int(t, span):
            if not compatible(t, INT_T, None):
                raise TypeMismatch("Integer", str(t), span)

        if method in ("push", "<<"):
            def push(args, span):
                expect_elem(args[0], span)
                return cls
            return 1, push
        if method in ("get", "[]"):
            def get(args, span):
                expect_int(args[0], span)
                return elem
            return 1, get
        if method in ("set", "[]="):
            def set_(args, span):
                expect_int(args[0], span)
                expect_elem(args[1], span)
                return elem
            return 2, set_
        if method in ("size", "length"):
            return 0, lambda args, span: INT_T
        if method == "include?":
            def inc(args, span):
                expect_elem(args[0], span)
                return BOOL_T
            return 1, inc
        if method == "empty?":
            return 0, lambda args, span: BOOL_T
    return None


# canonical builtin names
_ALIASES = {("Array", "<<"): "push", ("Array", "[]"): "get", ("Array", "[]="): "set",
            ("Array", "length"): "size"}


def builtin_entry(cls: ClassT, method: str) -> Optional[MethodEntry]:
    if _builtin_rule(cls, method) is None:
        return None
    owner = cls.name if cls.name in BUILTIN_CLASSES and not cls.meta else "Object"
    canon = _ALIASES.get((owner, method), method)
    return MethodEntry(owner, canon, None, A.PURE, origin="builtin")


# --------------------------------------------------------------------------
# Compatibility
# --------------------------------------------------------------------------


def compatible(found: BaseType, expected: BaseType, table: Optional[ClassTable]) -> bool:
    if isinstance(found, (NilT, BottomT)) or isinstance(expected, UntypedT):
        return True
    if isinstance(found, UntypedT):
        return True
    if isinstance(expected, NilT):
        return False
    if isinstance(found, UnionT):
        return all(compatible(m, expected, table) for m in found.members)
    if isinstance(expected, UnionT):
        return any(compatible(found, m, table) for m in expected.members)
    assert isinstance(found, ClassT) and isinstance(expected, ClassT)
    if found.meta != expected.meta:
        return False
    if found.name == expected.name:
        if found.name == "Array":
            return found.elem is None or expected.elem is None or compatible(
                found.elem, expected.elem, table)
        return True
    if found.name == "Integer" and expected.name == "Float":
        return True
    if table is not None and found.name in table:
        return table.is_subclass(found.name, expected.name)
    return False


# --------------------------------------------------------------------------
# Typed expressions
# --------------------------------------------------------------------------


@dataclass
class TypedExpr:
    expr: A.Expr
    type: BaseType
    children: tuple = ()
    dispatch: Optional[tuple] = None  # call sites: ((class_id, MethodEntry), ...)

    def walk(self):
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))


def receiver_dispatch(recv_type: BaseType, method: str, table: ClassTable,
                      span: Optional[Span] = None) -> tuple:
    """Callees for ``recv.method``: one per class in the receiver type, by class id."""
    if isinstance(recv_type, NilT):
        entry = builtin_entry(ClassT("NilClass"), method)
        if entry is None:
            raise NoSignature("NilClass", method, span)
        return ((table.class_id("NilClass"), entry),)
    out = []
    members = sorted(members_of(recv_type), key=lambda c: table.class_id(c.name))
    for cls in members:
        entry = None
        if cls.name not in BUILTIN_CLASSES or cls.meta:
            entry = table.lookup(cls.name, method, singleton=cls.meta)
        if entry is None:
            entry = builtin_entry(cls, method)
        if entry is None:
            raise NoSignature(str(cls), method, span)
        out.append((table.class_id(cls.name), entry))
    return tuple(out)


class Checker:
    """Types one method body (or one refinement) under a variable environment."""

    def __init__(self, table: ClassTable, owner: str, singleton: bool = False):
        self.table = table
        self.owner = owner
        self.singleton = singleton
        self.returns: list[BaseType] = []

    @property
    def self_type(self) -> ClassT:
        return ClassT(self.owner, meta=self.singleton)

    def check(self, e: A.Expr, env: dict) -> TypedExpr:
        method = getattr(self, "_" + type(e).__name__)
        return method(e, env)

    def _Const(self, e, env):
        t = {"nil": NIL_T, "true": BOOL_T, "false": BOOL_T, "int": INT_T, "float": FLOAT_T}[e.kind]
        return TypedExpr(e, t)

    def _Var(self, e, env):
        if e.name not in env:
            raise TypeMismatch("a bound variable", f"unbound `{e.name}'", e.span)
        return TypedExpr(e, env[e.name])

    def _Self(self, e, env):
        return TypedExpr(e, self.self_type)

    def _Assign(self, e, env):
        v = self.check(e.value, env)
        old = env.get(e.name)
        env[e.name] = v.type if old is None else union_of([old, v.type])
        return TypedExpr(e, v.type, (v,))

    def _If(self, e, env):
        c = self.check(e.cond, env)
        env_t = dict(env)
        env_e = dict(env)
        t = self.check(e.then, env_t)
        f = self.check(e.else_, env_e)
        for name in set(env_t) | set(env_e):
            env[name] = union_of([env_t.get(name, NIL_T), env_e.get(name, NIL_T)])
        return TypedExpr(e, union_of([t.type, f.type]), (c, t, f))

    def _Seq(self, e, env):
        a = self.check(e.first, env)
        b = self.check(e.second, env)
        t = BOTTOM if isinstance(a.type, BottomT) else b.type
        return TypedExpr(e, t, (a, b))

    def _field(self, name: str, span) -> BaseType:
        t = self.table.field_type(self.owner, name)
        if t is None:
            raise NoTypeForField(name, span)
        return t

    def _FieldRead(self, e, env):
        return TypedExpr(e, self._field(e.field, e.span))

    def _FieldAssign(self, e, env):
        ft = self._field(e.field, e.span)
        v = self.check(e.value, env)
        if not compatible(v.type, ft, self.table):
            raise TypeMismatch(str(ft), str(v.type), e.span)
        return TypedExpr(e, v.type, (v,))

    def _New(self, e, env):
        if e.class_name not in self.table or self.table[e.class_name].kind != "class":
            raise UnknownClass(f"cannot instantiate `{e.class_name}'", e.span)
        return TypedExpr(e, ClassT(e.class_name))

    def _Return(self, e, env):
        v = self.check(e.value, env)
        self.returns.append(v.type)
        return TypedExpr(e, BOTTOM, (v,))

    def _Raise(self, e, env):
        return TypedExpr(e, BOTTOM)

    def _ArrayLit(self, e, env):
        elems = [self.check(x, env) for x in e.elems]
        et = union_of([x.type for x in elems]) if elems else None
        if isinstance(et, (NilT, BottomT)):
            et = None
        return TypedExpr(e, ClassT("Array", et), tuple(elems))

    def _Call(self, e, env):
        recv = self.check(e.receiver, env)
        args = [self.check(a, env) for a in e.args]
        if isinstance(recv.type, (UntypedT, BottomT)):
            # no callee can be resolved; translation reports UntypedReceiver
            return TypedExpr(e, UNTYPED, (recv, *args), None)
        dispatch = receiver_dispatch(recv.type, e.method, self.table, e.span)
        results = []
        for cid, entry in dispatch:
            results.append(self._call_result(recv.type, cid, entry, args, e))
        return TypedExpr(e, union_of(results), (recv, *args), dispatch)

    def _call_result(self, recv_t, cid, entry: MethodEntry, args, e) -> BaseType:
        arg_types = [a.type for a in args]
        if entry.is_builtin:
            cls = next((m for m in members_of(recv_t)
                        if self.table.class_id(m.name) == cid), ClassT("NilClass"))
            arity, rule = _builtin_rule(cls, e.method)
            if len(args) != arity:
                raise ArityMismatch(f"`{e.method}' expects {arity} argument(s), got {len(args)}",
                                    e.span)
            return rule(arg_types, e.span)
        if entry.signature is None:
            raise NoSignature(entry.owner, entry.method, e.span)
        params = entry.signature.params
        if len(params) != len(args):
            raise ArityMismatch(
                f"`{entry.qualified}' expects {len(params)} argument(s), got {len(args)}", e.span)
        for p, a in zip(params, args):
            pt = resolve_type_name(p.base, self.table)
            if not compatible(a.type, pt, self.table):
                raise TypeMismatch(str(pt), str(a.type), a.expr.span or e.span)
        return resolve_type_name(entry.signature.result.base, self.table)


def signature_env(sig: A.MethodSignature, table: ClassTable) -> dict:
    return {p.binder: resolve_type_name(p.base, table) for p in sig.params}


def check_method(entry: MethodEntry, table: ClassTable,
                 signature: Optional[A.MethodSignature] = None) -> TypedExpr:
    """Types ``entry.body`` under its signature (or an explicit override)."""
    sig = signature or entry.signature
    if sig is None:
        raise NoSignature(entry.owner, entry.method, entry.span)
    if entry.body is None:
        raise NoSignature(entry.owner, entry.method, entry.span)
    checker = Checker(table, entry.owner, entry.singleton)
    env = signature_env(sig, table)
    typed = checker.check(entry.body, env)
    declared = resolve_type_name(sig.result.base, table)
    for t in [typed.type] + checker.returns:
        if not compatible(t, declared, table):
            raise TypeMismatch(str(declared), str(t), entry.span)
    return typed


def check_refinements(entry_owner: str, singleton: bool, sig: A.MethodSignature,
                      table: ClassTable) -> tuple[list[TypedExpr], Optional[TypedExpr]]:
    """Types each parameter predicate and the result predicate."""
    checker = Checker(table, entry_owner, singleton)
    env = signature_env(sig, table)
    params = []
    for p in sig.params:
        params.append(_check_predicate(checker, p.predicate, dict(env)))
    renv = dict(env)
    if sig.result.binder is not None:
        renv[sig.result.binder] = resolve_type_name(sig.result.base, table)
    result = _check_predicate(checker, sig.result.predicate, renv)
    return params, result


def _check_predicate(checker: Checker, pred: A.Expr, env: dict) -> TypedExpr:
    typed = checker.check(pred, env)
    t = typed.type
    if not (isinstance(t, (NilT, BottomT)) or t == BOOL_T):
        raise TypeMismatch("Bool", str(t), pred.span)
    check_purity(typed, checker.table)
    return typed


_MUTATORS = {"push", "set"}


def check_purity(typed: TypedExpr, table: ClassTable, _seen: Optional[set] = None) -> None:
    """Refinements may call builtins, pure-labeled methods, and exact methods
    whose bodies are themselves pure."""
    seen = set() if _seen is None else _seen
    for node in typed.walk():
        e = node.expr
        if isinstance(e, (A.Assign, A.FieldAssign, A.New, A.Raise, A.Return)):
            raise PurityError(f"refinement is not pure: contains {type(e).__name__}", e.span)
        if node.dispatch is None:
            continue
        for _cid, entry in node.dispatch:
            if entry.is_builtin:
                if entry.method in _MUTATORS:
                    raise PurityError(f"refinement calls mutator `{entry.method}'", e.span)
                continue
            if entry.label.kind == "pure":
                continue
            if entry.label.kind == "exact" and entry.body is not None:
                key = entry.mangled
                if key in seen:
                    continue
                seen.add(key)
                try:
                    body = check_method(entry, table)
                    check_purity(body, table, seen)
                except PurityError as exc:
                    raise PurityError(
                        f"refinement calls `{entry.qualified}', which is not pure: "
                        f"{exc.message}", e.span) from exc
                continue
            raise PurityError(
                f"refinement calls `{entry.qualified}', which is not labeled pure", e.span)
