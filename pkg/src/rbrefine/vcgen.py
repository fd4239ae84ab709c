"""Symbolic evaluation of the intermediate language into SMT goals.

Values are guarded unions of atoms (nil, bool, int, real, object handle,
array handle).  Objects and arrays live in a functional heap that is copied at
branches and merged with ``ite`` afterwards.  A path that returns, raises, or
fails an assumption is killed by setting its path condition to false, so every
later step on that path is skipped.

Each reachable failure becomes a goal: a formula that is satisfiable exactly
when that failure can happen under the query's assumptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from rbrefine import ir as I
from rbrefine import smt as S
from rbrefine.config import Config
from rbrefine.errors import DepthLimitExceeded, InternalError
from rbrefine.syntax import ast as A
from rbrefine.typesys import (
    BottomT, ClassT, ClassTable, MethodEntry, NilT, UnionT, UntypedT, resolve_type_name,
)

MAX_OBJECT_DEPTH = 3


@dataclass(frozen=True)
class Atom:
    kind: str  # nil | bool | int | real | obj | arr
    term: Optional[S.Term] = None
    handle: Optional[int] = None

    @property
    def key(self):
        return (self.kind, self.handle) if self.kind in ("obj", "arr") else self.kind


NIL_ATOM = Atom("nil")
NIL_V = ((S.TRUE, NIL_ATOM),)


def single(atom: Atom):
    return ((S.TRUE, atom),)


@dataclass(frozen=True)
class ObjRec:
    class_id: int
    oid: S.Term
    fields: dict

    def with_field(self, name, value) -> "ObjRec":
        f = dict(self.fields)
        f[name] = value
        return ObjRec(self.class_id, self.oid, f)


@dataclass(frozen=True)
class ArrRec:
    cells: tuple  # of Value, length == capacity
    length: S.Term
    oid: S.Term


@dataclass
class State:
    pc: S.Term
    env: dict
    heap: dict

    def copy(self, pc=None) -> "State":
        return State(self.pc if pc is None else pc, dict(self.env), dict(self.heap))


@dataclass
class Goal:
    kind: str  # post | callee | raise | bound
    tag: str
    term: S.Term

    @property
    def trigger(self) -> str:
        if self.kind == "post":
            return "postconditionViolated"
        if self.kind == "raise":
            return f"exceptionRaised({self.tag})"
        if self.kind == "bound":
            return f"boundExceeded({self.tag})"
        return f"calleePreconditionViolated({self.tag})"


@dataclass
class Layout:
    """How a symbolic input was built, so a model can be turned back into a value."""

    kind: str  # scalar | nil | obj | arr | union
    name: str = ""
    scalar: str = ""  # int | real | bool
    class_name: str = ""
    oid: int = 0
    fields: list = field(default_factory=list)  # (field, Layout)
    length: str = ""
    cells: list = field(default_factory=list)
    choices: list = field(default_factory=list)  # (selector const or "", Layout)


@dataclass
class QueryEncoding:
    goals: list
    background: list
    inputs: list  # (name, Layout)
    consts: dict  # const name -> sort
    uf_types: dict  # uf name -> (param types, result type)
    int_sort: str
    config: Config


# --------------------------------------------------------------------------
# Value combinators
# --------------------------------------------------------------------------


def combine(pairs):
    """Union of values under mutually exclusive guards."""
    groups: dict = {}
    for g, v in pairs:
        if g is S.FALSE:
            continue
        for g2, a in v:
            gg = S.and_(g, g2)
            if gg is S.FALSE:
                continue
            groups.setdefault(a.key, []).append((gg, a))
    out = []
    for items in groups.values():
        if len(items) == 1:
            out.append(items[0])
            continue
        guard = S.or_(*(g for g, _a in items))
        a0 = items[-1][1]
        if a0.term is None:
            out.append((guard, a0))
            continue
        term = a0.term
        for g, a in reversed(items[:-1]):
            term = S.ite(g, a.term, term)
        out.append((guard, Atom(a0.kind, term, a0.handle)))
    if not out:
        return NIL_V
    if len(out) == 1:
        return ((S.TRUE, out[0][1]),)
    return tuple(out)


def merge_values(c: S.Term, v1, v2):
    if c is S.TRUE or v1 is v2:
        return v1
    if c is S.FALSE:
        return v2
    return combine([(c, v1), (S.not_(c), v2)])


def truthy(v) -> S.Term:
    parts = []
    for g, a in v:
        if a.kind == "nil":
            continue
        if a.kind == "bool":
            parts.append(S.and_(g, a.term))
        else:
            parts.append(g)
    return S.or_(*parts)


def guard_of(v, kind: str) -> S.Term:
    return S.or_(*(g for g, a in v if a.kind == kind))


class Encoder:
    """Evaluates one VerificationQuery; owns its heap, names and goals."""

    def __init__(self, table: ClassTable, config: Config = Config()):
        self.table = table
        self.config = config
        self.isort = S.bv_sort(config.bv_width) if config.bitvector else S.INT
        self.cap = config.array_bound
        self.goals: list[Goal] = []
        self.background: list = []
        self.defs: dict = {}
        self.frames: list = []
        self.chain: list[str] = []
        self.phase = "verify"
        self._handles = 0
        self._sym_ids = 0
        self._used_oids: set = set()
        self._names: set = set()
        self._fresh = 0
        self.consts: dict = {}
        self.uf_types: dict = {}
        self.entries: dict[str, MethodEntry] = {}
        for info in table.classes.values():
            for e in list(info.instance_methods.values()) + list(info.singleton_methods.values()):
                self.entries.setdefault(e.mangled, e)

    # -- names and handles -------------------------------------------------

    def const(self, name: str, sort: str) -> S.Term:
        base, k = name, 1
        while name in self._names:
            k += 1
            name = f"{base}!{k}"
        self._names.add(name)
        self.consts[name] = sort
        return S.const(name, sort)

    def fresh_name(self, base: str) -> str:
        self._fresh += 1
        return f"{base}!{self._fresh}"

    def new_handle(self) -> int:
        self._handles += 1
        return self._handles

    def literal_oid(self, wanted: int) -> S.Term:
        oid = wanted
        while oid in self._used_oids:
            oid = max(self._used_oids) + 1
        self._used_oids.add(oid)
        return S.lit(oid, S.INT)

    def symbolic_oid(self) -> tuple[int, S.Term]:
        self._sym_ids += 1
        return -self._sym_ids, S.lit(-self._sym_ids, S.INT)

    def int_lit(self, v: int) -> S.Term:
        return S.lit(v, self.isort)

    # -- failures ----------------------------------------------------------

    def add_goal(self, st: State, bad: S.Term, kind: str, tag: str) -> None:
        cond = S.and_(st.pc, bad)
        if self.phase == "verify" and cond is not S.FALSE:
            self.goals.append(Goal(kind, tag, cond))
        st.pc = S.and_(st.pc, S.not_(bad))

    def raise_(self, st: State, cond: S.Term, message: str) -> None:
        self.add_goal(st, cond, "raise", message)

    def check(self, st: State, ok: S.Term, tag: str, kind: str = "callee") -> None:
        if self.phase == "assume":
            st.pc = S.and_(st.pc, ok)
            return
        self.add_goal(st, S.not_(ok), kind, tag)

    # -- fresh symbolic values ---------------------------------------------

    def fresh(self, typ, name: str, st: State, depth: int = 0):
        """A fresh symbolic value of base type ``typ`` and its layout."""
        if isinstance(typ, (NilT, UntypedT, BottomT)) or typ is None:
            return NIL_V, Layout("nil", name)
        if isinstance(typ, UnionT):
            members = typ.members
            pairs, choices, rest = [], [], S.TRUE
            for i, m in enumerate(members):
                if i < len(members) - 1:
                    sel_name = f"{name}?{m}"
                    sel = self.const(sel_name, S.BOOL)
                    g = S.and_(rest, sel)
                    rest = S.and_(rest, S.not_(sel))
                else:
                    sel_name, g = "", rest
                v, lay = self.fresh(m, name, st, depth)
                pairs.append((g, v))
                choices.append((sel_name, lay))
            return combine(pairs), Layout("union", name, choices=choices)
        assert isinstance(typ, ClassT)
        if typ.name == "Integer" and not typ.meta:
            return single(Atom("int", self.const(name, self.isort))), Layout("scalar", name, "int")
        if typ.name == "Float" and not typ.meta:
            return single(Atom("real", self.const(name, S.REAL))), Layout("scalar", name, "real")
        if typ.name == "Bool" and not typ.meta:
            return single(Atom("bool", self.const(name, S.BOOL))), Layout("scalar", name, "bool")
        if typ.name == "NilClass":
            return NIL_V, Layout("nil", name)
        if typ.name == "Array" and not typ.meta:
            length = self.const(f"{name}.size", self.isort)
            self.background.append(S.and_(S.le(self.int_lit(0), length),
                                          S.le(length, self.int_lit(self.cap))))
            cells, lays = [], []
            for k in range(self.cap):
                if depth < MAX_OBJECT_DEPTH:
                    v, lay = self.fresh(typ.elem, f"{name}[{k}]", st, depth + 1)
                else:
                    v, lay = NIL_V, Layout("nil", f"{name}[{k}]")
                cells.append(v)
                lays.append(lay)
            h = self.new_handle()
            _oid, oid = self.symbolic_oid()
            st.heap[h] = ArrRec(tuple(cells), length, oid)
            return single(Atom("arr", handle=h)), Layout("arr", name, length=f"{name}.size",
                                                         cells=lays)
        # user class or module (or the class object for singleton methods)
        oid_int, oid = self.symbolic_oid()
        fields = {}
        lays = []
        for f in self.table.all_fields():
            ft = self.table.field_type(typ.name, f)
            fname = f"{name}.@{f}"
            if ft is None or depth >= MAX_OBJECT_DEPTH:
                fields[f] = NIL_V
                continue
            v, lay = self.fresh(ft, fname, st, depth + 1)
            fields[f] = v
            lays.append((f, lay))
        h = self.new_handle()
        st.heap[h] = ObjRec(self.table.class_id(typ.name), oid, fields)
        return single(Atom("obj", handle=h)), Layout("obj", name, class_name=typ.name,
                                                     oid=oid_int, fields=lays)

    # -- heap --------------------------------------------------------------

    def merge_heaps(self, c: S.Term, h1: dict, h2: dict) -> dict:
        out = dict(h1)
        for h, r2 in h2.items():
            r1 = h1.get(h)
            if r1 is None or r1 is r2:
                out[h] = r2
                continue
            if isinstance(r1, ObjRec):
                fields = dict(r1.fields)
                for f, v2 in r2.fields.items():
                    v1 = r1.fields.get(f, NIL_V)
                    if v1 is not v2:
                        fields[f] = merge_values(c, v1, v2)
                out[h] = ObjRec(r1.class_id, r1.oid, fields)
            else:
                cells = tuple(merge_values(c, a, b) for a, b in zip(r1.cells, r2.cells))
                out[h] = ArrRec(cells, S.ite(c, r1.length, r2.length), r1.oid)
        return out

    def class_id_of(self, a: Atom, st: State) -> int:
        if a.kind == "obj":
            return st.heap[a.handle].class_id
        return self.table.class_id({"nil": "NilClass", "bool": "Bool", "int": "Integer",
                                    "real": "Float", "arr": "Array"}[a.kind])

    def field_read(self, v, f: str, st: State):
        pairs, bad = [], []
        for g, a in v:
            if a.kind == "obj":
                pairs.append((g, st.heap[a.handle].fields.get(f, NIL_V)))
            else:
                bad.append(g)
        if bad:
            self.raise_(st, S.or_(*bad), "NoMethodError")
        return combine(pairs)

    def field_write(self, v, f: str, newv, st: State) -> None:
        bad = []
        for g, a in v:
            if a.kind != "obj":
                bad.append(g)
                continue
            rec = st.heap[a.handle]
            old = rec.fields.get(f, NIL_V)
            st.heap[a.handle] = rec.with_field(f, merge_values(g, newv, old))
        if bad:
            self.raise_(st, S.or_(*bad), "NoMethodError")

    def field_type(self, class_id: int, f: str):
        return self.table.field_type(self.table.name_of(class_id), f)

    # -- evaluation --------------------------------------------------------

    def eval(self, e: I.IExpr, st: State):
        if st.pc is S.FALSE:
            return NIL_V
        method = getattr(self, "_" + type(e).__name__)
        return method(e, st)

    def _IVal(self, e: I.IVal, st):
        c = e.const
        if c.kind == "nil":
            return NIL_V
        if c.kind in ("true", "false"):
            return single(Atom("bool", S.TRUE if c.kind == "true" else S.FALSE))
        if c.kind == "int":
            return single(Atom("int", self.int_lit(c.value)))
        from fractions import Fraction
        return single(Atom("real", S.lit(Fraction(c.value), S.REAL)))

    def _IObj(self, e: I.IObj, st):
        fields = {}
        for f, x in e.fields:
            fields[f] = self.eval(x, st)
        h = self.new_handle()
        st.heap[h] = ObjRec(e.class_id, self.literal_oid(e.object_id), fields)
        return single(Atom("obj", handle=h))

    def _IArrayLit(self, e: I.IArrayLit, st):
        elems = [self.eval(x, st) for x in e.elems]
        if len(elems) > self.cap:
            self.check(st, S.FALSE, "Array literal", "bound")
            return NIL_V
        cells = tuple(elems) + (NIL_V,) * (self.cap - len(elems))
        h = self.new_handle()
        st.heap[h] = ArrRec(cells, self.int_lit(len(elems)), self.literal_oid(1000 + h))
        return single(Atom("arr", handle=h))

    def _IVar(self, e: I.IVar, st):
        try:
            return st.env[e.name]
        except KeyError:
            raise InternalError(f"unbound name `{e.name}'") from None

    def _IAssign(self, e: I.IAssign, st):
        v = self.eval(e.value, st)
        st.env[e.name] = v
        return v

    def _ISeq(self, e: I.ISeq, st):
        self.eval(e.first, st)
        return self.eval(e.second, st)

    def _IIf(self, e: I.IIf, st):
        cv = self.eval(e.cond, st)
        if st.pc is S.FALSE:
            return NIL_V
        c = truthy(cv)
        st_t = st.copy(S.and_(st.pc, c))
        st_e = st.copy(S.and_(st.pc, S.not_(c)))
        vt = self.eval(e.then, st_t)
        ve = self.eval(e.else_, st_e)
        if st_t.pc is S.FALSE:
            st.pc, st.env, st.heap = st_e.pc, st_e.env, st_e.heap
            return ve
        if st_e.pc is S.FALSE:
            st.pc, st.env, st.heap = st_t.pc, st_t.env, st_t.heap
            return vt
        st.pc = S.or_(st_t.pc, st_e.pc)
        env = {}
        for name in list(st_t.env) + [n for n in st_e.env if n not in st_t.env]:
            env[name] = merge_values(c, st_t.env.get(name, NIL_V), st_e.env.get(name, NIL_V))
        st.env = env
        st.heap = self.merge_heaps(c, st_t.heap, st_e.heap)
        return merge_values(c, vt, ve)

    def _ILet(self, e: I.ILet, st):
        saved = {}
        for name, x in e.bindings:
            v = self.eval(x, st)
            if name not in saved:
                saved[name] = st.env.get(name)
            st.env[name] = v
        out = self.eval(e.body, st)
        for name, old in saved.items():
            if old is None:
                st.env.pop(name, None)
            else:
                st.env[name] = old
        return out

    def _IReturn(self, e: I.IReturn, st):
        v = self.eval(e.value, st)
        if st.pc is S.FALSE:
            return NIL_V
        if not self.frames:
            raise InternalError("return outside of a method body")
        self.frames[-1].append((st.pc, v, dict(st.heap)))
        st.pc = S.FALSE
        return NIL_V

    def _IFail(self, e: I.IFail, st):
        self.raise_(st, S.TRUE, e.message or "RuntimeError")
        return NIL_V

    def _IAssert(self, e: I.IAssert, st):
        v = self.eval(e.cond, st)
        if st.pc is not S.FALSE:
            self.check(st, truthy(v), e.tag or "assert")
        return NIL_V

    def _IAssume(self, e: I.IAssume, st):
        v = self.eval(e.cond, st)
        st.pc = S.and_(st.pc, truthy(v))
        return NIL_V

    def _IHavoc(self, e: I.IHavoc, st):
        target = self._IVar(I.IVar(e.target), st)
        bad = []
        for g, a in target:
            if a.kind != "obj":
                bad.append(g)
                continue
            rec = st.heap[a.handle]
            ft = self.field_type(rec.class_id, e.field)
            v, _lay = self.fresh(ft, self.fresh_name(f"havoc.@{e.field}"), st, 1)
            st.heap[a.handle] = rec.with_field(
                e.field, merge_values(g, v, rec.fields.get(e.field, NIL_V)))
        if bad:
            self.raise_(st, S.or_(*bad), "NoMethodError")
        return NIL_V

    def _IFieldRead(self, e: I.IFieldRead, st):
        return self.field_read(self._IVar(I.IVar(e.target), st), e.field, st)

    def _IFieldAssign(self, e: I.IFieldAssign, st):
        v = self.eval(e.value, st)
        if st.pc is S.FALSE:
            return NIL_V
        self.field_write(self._IVar(I.IVar(e.target), st), e.field, v, st)
        return v

    def _IClassIs(self, e: I.IClassIs, st):
        v = self.eval(e.target, st)
        return single(Atom("bool", S.or_(*(g for g, a in v
                                            if self.class_id_of(a, st) == e.class_id))))

    def _ISym(self, e: I.ISym, st):
        v, _lay = self.fresh(e.type, self.fresh_name("result"), st, 1)
        return v

    def _IFuncall(self, e: I.IFuncall, st):
        args = []
        for a in e.args:
            args.append(self.eval(a, st))
            if st.pc is S.FALSE:
                return NIL_V
        if e.kind == "builtin":
            return self.builtin(e.name, args, st)
        if e.kind == "uf":
            return self.uf_call(e.name, args, st)
        return self.call_exact(e.name, args, st)

    # -- calls -------------------------------------------------------------

    def require_object(self, recv, st: State) -> None:
        bad = [g for g, a in recv if a.kind != "obj"]
        if bad:
            self.raise_(st, S.or_(*bad), "NoMethodError")

    def call_exact(self, name: str, args: list, st: State):
        fdef = self.defs.get(name)
        if fdef is None:
            raise InternalError(f"no definition for `{name}'")
        self.require_object(args[0], st)
        if st.pc is S.FALSE:
            return NIL_V
        if len(self.chain) >= self.config.depth_limit:
            raise DepthLimitExceeded(self.chain + [name])
        saved_env = st.env
        st.env = dict(zip(fdef.params, args))
        self.frames.append([])
        self.chain.append(name)
        try:
            v = self.eval(fdef.body, st)
        finally:
            self.chain.pop()
            returns = self.frames.pop()
            st.env = saved_env
        heap = st.heap
        pcs = [st.pc]
        for pc_r, v_r, heap_r in returns:
            v = merge_values(pc_r, v_r, v)
            heap = self.merge_heaps(pc_r, heap_r, heap)
            pcs.append(pc_r)
        st.heap = heap
        st.pc = S.or_(*pcs)
        return v

    def _sort_of(self, typ) -> str:
        if isinstance(typ, ClassT) and not typ.meta:
            if typ.name == "Integer":
                return self.isort
            if typ.name == "Float":
                return S.REAL
            if typ.name == "Bool":
                return S.BOOL
        return S.INT  # object ids

    def uf_arg(self, v, sort: str, st: State) -> S.Term:
        pieces = []
        for g, a in v:
            t = None
            if a.kind in ("obj", "arr"):
                if sort == S.INT:
                    t = st.heap[a.handle].oid
            elif a.kind == "nil":
                if sort == S.INT:
                    t = S.lit(0, S.INT)
            elif a.kind == "int":
                if sort == self.isort:
                    t = a.term
                elif sort == S.REAL:
                    t = S.to_real(a.term)
            elif a.kind == "real" and sort == S.REAL:
                t = a.term
            elif a.kind == "bool" and sort == S.BOOL:
                t = a.term
            if t is None:
                t = self.const(self.fresh_name("arg"), sort)
            pieces.append((g, t))
        term = pieces[-1][1]
        for g, t in reversed(pieces[:-1]):
            term = S.ite(g, t, term)
        return term

    def uf_call(self, name: str, args: list, st: State):
        entry = self.entries.get(name)
        if entry is None or entry.signature is None:
            raise InternalError(f"no signature for uninterpreted `{name}'")
        self.require_object(args[0], st)
        if st.pc is S.FALSE:
            return NIL_V
        ptypes = [resolve_type_name(p.base, self.table) for p in entry.signature.params]
        rtype = resolve_type_name(entry.signature.result.base, self.table)
        self.uf_types[name] = (ptypes, rtype)
        terms = [self.uf_arg(args[0], S.INT, st)]
        for v, t in zip(args[1:], ptypes):
            terms.append(self.uf_arg(v, self._sort_of(t), st))
        return self.uf_result(name, tuple(terms), rtype, st)

    def uf_result(self, name: str, terms: tuple, rtype, st: State):
        if isinstance(rtype, UnionT):
            sel = S.apply(name + "!class", terms, S.INT)
            pairs = []
            for i, m in enumerate(rtype.members):
                g = S.eq(sel, S.lit(i, S.INT)) if i < len(rtype.members) - 1 else S.TRUE
                pairs.append((g, self.uf_result(name, terms, m, st)))
            # later members only when the earlier selectors are false
            guarded, rest = [], S.TRUE
            for g, v in pairs:
                guarded.append((S.and_(rest, g), v))
                rest = S.and_(rest, S.not_(g))
            return combine(guarded)
        if isinstance(rtype, (NilT, UntypedT, BottomT)):
            return NIL_V
        sort = self._sort_of(rtype)
        if isinstance(rtype, ClassT) and rtype.name in ("Integer", "Float", "Bool") \
                and not rtype.meta:
            kind = {"Integer": "int", "Float": "real", "Bool": "bool"}[rtype.name]
            return single(Atom(kind, S.apply(name, terms, sort)))
        # object or array result: identity from the function, contents fresh
        v, _lay = self.fresh(rtype, self.fresh_name(name), st, 1)
        (_g, a), = v
        rec = st.heap[a.handle]
        oid = S.apply(name, terms, S.INT)
        st.heap[a.handle] = replace(rec, oid=oid)
        return v

    # -- built-in methods --------------------------------------------------

    def builtin(self, name: str, args: list, st: State):
        owner, method = name.split("_", 1)
        if method == "nonzero":
            return single(Atom("bool", self.nonzero(args[0])))
        if method in ("==", "!="):
            t = self.equality(args[0], args[1], st)
            return single(Atom("bool", t if method == "==" else S.not_(t)))
        if method == "!":
            return single(Atom("bool", S.not_(truthy(args[0]))))
        if method == "nil?":
            return single(Atom("bool", guard_of(args[0], "nil")))
        if owner == "Array":
            return self.array_op(method, args, st)
        if len(args) == 2:
            return self.numeric_binop(method, args[0], args[1], st)
        return self.numeric_unop(method, args[0], st)

    def nonzero(self, v) -> S.Term:
        parts = []
        for g, a in v:
            if a.kind == "int":
                parts.append(S.and_(g, S.not_(S.eq(a.term, self.int_lit(0)))))
            elif a.kind == "real":
                parts.append(S.and_(g, S.not_(S.eq(a.term, S.lit(0, S.REAL)))))
            else:
                parts.append(g)
        return S.or_(*parts)

    def numeric_binop(self, op: str, x, y, st: State):
        pairs, bad = [], []
        for g1, a in x:
            for g2, b in y:
                g = S.and_(g1, g2)
                if g is S.FALSE:
                    continue
                r = self.num_atom(op, a, b)
                if r is None:
                    bad.append(g)
                else:
                    pairs.append((g, single(r)))
        if bad:
            self.raise_(st, S.or_(*bad), f"TypeError in `{op}'")
        return combine(pairs)

    def num_atom(self, op: str, a: Atom, b: Atom) -> Optional[Atom]:
        if a.kind not in ("int", "real") or b.kind not in ("int", "real"):
            return None
        if a.kind == "int" and b.kind == "int":
            x, y = a.term, b.term
            bv = self.config.bitvector
            arith = {
                "+": S.add, "-": S.sub, "*": S.mul,
                "/": S.bv_floordiv if bv else S.int_floordiv,
                "%": S.bv_mod if bv else S.int_mod,
            }
            if op in arith:
                return Atom("int", arith[op](x, y))
        else:
            x, y = S.to_real(a.term), S.to_real(b.term)
            if op in ("+", "-", "*"):
                return Atom("real", {"+": S.add, "-": S.sub, "*": S.mul}[op](x, y))
            if op == "/":
                return Atom("real", S.real_div(x, y))
            if op == "%":
                q = S.to_real(S.real_floor(S.real_div(x, y)))
                return Atom("real", S.sub(x, S.mul(y, q)))
        cmp = {"<": S.lt, "<=": S.le, ">": S.gt, ">=": S.ge}
        if op in cmp:
            return Atom("bool", cmp[op](x, y))
        return None

    def numeric_unop(self, op: str, x, st: State):
        pairs, bad = [], []
        for g, a in x:
            if a.kind not in ("int", "real"):
                bad.append(g)
                continue
            sort = a.term.sort
            zero = S.lit(0, sort)
            t = a.term
            if op == "-@":
                r = Atom(a.kind, S.neg(t))
            elif op == "abs":
                r = Atom(a.kind, S.ite(S.lt(t, zero), S.neg(t), t))
            elif op == "to_f":
                r = Atom("real", S.to_real(t))
            elif op == "to_i":
                r = a if a.kind == "int" else Atom("int", S.real_floor(t))
            elif op == "zero?":
                r = Atom("bool", S.eq(t, zero))
            elif op == "positive?":
                r = Atom("bool", S.gt(t, zero))
            elif op == "negative?":
                r = Atom("bool", S.lt(t, zero))
            else:
                raise InternalError(f"unknown built-in `{op}'")
            pairs.append((g, single(r)))
        if bad:
            self.raise_(st, S.or_(*bad), f"NoMethodError: `{op}'")
        return combine(pairs)

    def equality(self, x, y, st: State) -> S.Term:
        parts = []
        for g1, a in x:
            for g2, b in y:
                g = S.and_(g1, g2)
                if g is S.FALSE:
                    continue
                parts.append(S.and_(g, self.atom_eq(a, b, st)))
        return S.or_(*parts)

    def atom_eq(self, a: Atom, b: Atom, st: State) -> S.Term:
        if a.kind != b.kind:
            return S.FALSE
        if a.kind == "nil":
            return S.TRUE
        if a.kind in ("bool", "int", "real"):
            return S.eq(a.term, b.term)
        if a.handle == b.handle:
            return S.TRUE
        ra, rb = st.heap[a.handle], st.heap[b.handle]
        if a.kind == "obj":
            return S.eq(ra.oid, rb.oid)
        # arrays compare by contents
        parts = [S.eq(ra.length, rb.length)]
        for k in range(self.cap):
            inside = S.lt(self.int_lit(k), ra.length)
            parts.append(S.implies(inside, self.equality(ra.cells[k], rb.cells[k], st)))
        return S.and_(*parts)

    def array_op(self, method: str, args: list, st: State):
        recv = args[0]
        bad = [g for g, a in recv if a.kind != "arr"]
        if bad:
            self.raise_(st, S.or_(*bad), f"NoMethodError: `{method}'")
        arrays = [(g, a) for g, a in recv if a.kind == "arr"]
        if method == "size":
            return combine([(g, single(Atom("int", st.heap[a.handle].length)))
                            for g, a in arrays])
        if method == "empty?":
            return single(Atom("bool", S.or_(*(S.and_(g, S.eq(st.heap[a.handle].length,
                                                              self.int_lit(0))) for g, a in arrays))))
        if method == "include?":
            parts = []
            for g, a in arrays:
                rec = st.heap[a.handle]
                for k in range(self.cap):
                    hit = S.and_(S.lt(self.int_lit(k), rec.length),
                                 self.equality(rec.cells[k], args[1], st))
                    parts.append(S.and_(g, hit))
            return single(Atom("bool", S.or_(*parts)))
        if method == "push":
            for g, a in arrays:
                rec = st.heap[a.handle]
                self.check(st, S.implies(g, S.lt(rec.length, self.int_lit(self.cap))),
                           "Array#push", "bound")
                if st.pc is S.FALSE:
                    return NIL_V
                cells = tuple(merge_values(S.and_(g, S.eq(rec.length, self.int_lit(k))),
                                           args[1], c) for k, c in enumerate(rec.cells))
                length = S.ite(g, S.add(rec.length, self.int_lit(1)), rec.length)
                st.heap[a.handle] = ArrRec(cells, length, rec.oid)
            return recv
        if method in ("get", "set"):
            idx = args[1]
            ibad = [g for g, a in idx if a.kind != "int"]
            if ibad:
                self.raise_(st, S.or_(*ibad), "TypeError: no implicit conversion into Integer")
            ints = [(g, a.term) for g, a in idx if a.kind == "int"]
            if not ints or st.pc is S.FALSE:
                return NIL_V
            i = ints[-1][1]
            for g, t in reversed(ints[:-1]):
                i = S.ite(g, t, i)
            results = []
            for g, a in arrays:
                rec = st.heap[a.handle]
                ok = S.and_(S.le(self.int_lit(0), i), S.lt(i, rec.length))
                self.check(st, S.implies(g, ok), f"Array#{method}")
                if st.pc is S.FALSE:
                    return NIL_V
                if method == "get":
                    results.append((g, combine([(S.eq(i, self.int_lit(k)), c)
                                                for k, c in enumerate(rec.cells)])))
                else:
                    cells = tuple(merge_values(S.and_(g, S.eq(i, self.int_lit(k))), args[2], c)
                                  for k, c in enumerate(rec.cells))
                    st.heap[a.handle] = ArrRec(cells, rec.length, rec.oid)
            return combine(results) if method == "get" else args[2]
        raise InternalError(f"unknown array operation `{method}'")

    # -- queries -----------------------------------------------------------

    def encode(self, q: I.VerificationQuery) -> QueryEncoding:
        self.defs = dict(q.defs)
        st = State(S.TRUE, {}, {})
        inputs = []
        for sd in q.sym_inputs:
            v, lay = self.fresh(sd.type, sd.name, st)
            st.env[sd.name] = v
            inputs.append((sd.name, lay))
        self.phase = "assume"
        for a in q.assumptions:
            v = self.eval(a, st)
            st.pc = S.and_(st.pc, truthy(v))
        self.phase = "verify"
        v = self.eval(q.guarantee, st)
        post_bad = S.and_(st.pc, S.not_(truthy(v)))
        if post_bad is not S.FALSE:
            self.goals.append(Goal("post", "", post_bad))
        return QueryEncoding(self.goals, self.background, inputs, dict(self.consts),
                             dict(self.uf_types), self.isort, self.config)


def sym_eval(e: I.IExpr, env: dict, table: ClassTable, config: Config = Config(),
             defs: Optional[dict] = None, pc: S.Term = S.TRUE):
    """Evaluates ``e`` from the given environment; returns (value, state, encoder)."""
    enc = Encoder(table, config)
    enc.defs = dict(defs or {})
    st = State(pc, dict(env), {})
    v = enc.eval(e, st)
    return v, st, enc


def encode_equality(a, b, table: ClassTable, heap: Optional[dict] = None,
                    config: Config = Config()) -> S.Term:
    enc = Encoder(table, config)
    return enc.equality(a, b, State(S.TRUE, {}, heap or {}))


def encode_query(q: I.VerificationQuery, table: ClassTable,
                 config: Config = Config()) -> QueryEncoding:
    return Encoder(table, config).encode(q)
