"""Hash-consed SMT terms with light constant folding, and SMT-LIB printing."""

from __future__ import annotations

import re
import weakref
from fractions import Fraction
from typing import Optional

from rbrefine.errors import UnsupportedTerm

BOOL = "Bool"
INT = "Int"
REAL = "Real"


def bv_sort(width: int) -> str:
    return f"(_ BitVec {width})"


def bv_width(sort: str) -> Optional[int]:
    m = re.fullmatch(r"\(_ BitVec (\d+)\)", sort)
    return int(m.group(1)) if m else None


class Term:
    """Immutable term; structurally equal terms are the same object."""

    __slots__ = ("op", "args", "sort", "payload", "__weakref__")

    def __init__(self, op, args, sort, payload):
        self.op = op
        self.args = args
        self.sort = sort
        self.payload = payload

    def __repr__(self) -> str:
        return to_smt(self)

    @property
    def is_lit(self) -> bool:
        return self.op == "lit"


_table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


def mk(op: str, args: tuple, sort: str, payload=None) -> Term:
    key = (op, tuple(id(a) for a in args), sort, payload)
    t = _table.get(key)
    if t is None or t.args != args:
        t = Term(op, args, sort, payload)
        _table[key] = t
    return t


# keep the boolean literals alive
TRUE = mk("lit", (), BOOL, True)
FALSE = mk("lit", (), BOOL, False)


def lit(value, sort: str) -> Term:
    if sort == BOOL:
        return TRUE if value else FALSE
    w = bv_width(sort)
    if w is not None:
        return mk("lit", (), sort, int(value) % (1 << w))
    if sort == INT:
        return mk("lit", (), sort, int(value))
    return mk("lit", (), sort, Fraction(value))


def const(name: str, sort: str) -> Term:
    return mk("const", (), sort, name)


def signed(t: Term) -> int:
    """Literal value, read as two's complement for bitvectors."""
    w = bv_width(t.sort)
    v = t.payload
    if w is not None and v >= 1 << (w - 1):
        return v - (1 << w)
    return v


# --------------------------------------------------------------------------
# Boolean connectives
# --------------------------------------------------------------------------


def not_(a: Term) -> Term:
    if a is TRUE:
        return FALSE
    if a is FALSE:
        return TRUE
    if a.op == "not":
        return a.args[0]
    return mk("not", (a,), BOOL)


def and_(*xs: Term) -> Term:
    out: list = []
    seen = set()
    for x in xs:
        parts = x.args if x.op == "and" else (x,)
        for p in parts:
            if p is FALSE:
                return FALSE
            if p is TRUE or id(p) in seen:
                continue
            if p.op == "not" and id(p.args[0]) in seen:
                return FALSE
            if id(not_(p)) in seen:
                return FALSE
            seen.add(id(p))
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return mk("and", tuple(out), BOOL)


def or_(*xs: Term) -> Term:
    out: list = []
    seen = set()
    for x in xs:
        parts = x.args if x.op == "or" else (x,)
        for p in parts:
            if p is TRUE:
                return TRUE
            if p is FALSE or id(p) in seen:
                continue
            if id(not_(p)) in seen:
                return TRUE
            seen.add(id(p))
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return mk("or", tuple(out), BOOL)


def implies(a: Term, b: Term) -> Term:
    return or_(not_(a), b)


def ite(c: Term, a: Term, b: Term) -> Term:
    if c is TRUE or a is b:
        return a
    if c is FALSE:
        return b
    if a.sort == BOOL:
        if a is TRUE and b is FALSE:
            return c
        if a is FALSE and b is TRUE:
            return not_(c)
        if b is FALSE:
            return and_(c, a)
        if a is TRUE:
            return or_(c, b)
    if c.op == "not":
        return ite(c.args[0], b, a)
    return mk("ite", (c, a, b), a.sort)


def eq(a: Term, b: Term) -> Term:
    if a is b:
        return TRUE
    if a.is_lit and b.is_lit:
        return TRUE if a.payload == b.payload else FALSE
    if a.sort == BOOL:
        if b is TRUE:
            return a
        if b is FALSE:
            return not_(a)
        if a is TRUE:
            return b
        if a is FALSE:
            return not_(b)
    return mk("=", (a, b), BOOL)


# --------------------------------------------------------------------------
# Arithmetic (Int / Real / BitVec)
# --------------------------------------------------------------------------


def _fold(op, a, b, sort):
    x, y = a.payload, b.payload
    w = bv_width(sort)
    if w is not None:
        x, y = signed(a), signed(b)
    if op == "+":
        return lit(x + y, sort)
    if op == "-":
        return lit(x - y, sort)
    if op == "*":
        return lit(x * y, sort)
    return None


def add(a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit:
        return _fold("+", a, b, a.sort)
    if b.is_lit and b.payload == 0:
        return a
    if a.is_lit and a.payload == 0:
        return b
    return mk("bvadd" if bv_width(a.sort) else "+", (a, b), a.sort)


def sub(a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit:
        return _fold("-", a, b, a.sort)
    if b.is_lit and b.payload == 0:
        return a
    return mk("bvsub" if bv_width(a.sort) else "-", (a, b), a.sort)


def mul(a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit:
        return _fold("*", a, b, a.sort)
    for x, y in ((a, b), (b, a)):
        if x.is_lit and x.payload == 1:
            return y
        if x.is_lit and x.payload == 0:
            return x
    return mk("bvmul" if bv_width(a.sort) else "*", (a, b), a.sort)


def neg(a: Term) -> Term:
    if a.is_lit:
        return lit(-signed(a) if bv_width(a.sort) else -a.payload, a.sort)
    return mk("bvneg" if bv_width(a.sort) else "-", (a,), a.sort)


def _cmp(op: str, a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit:
        x, y = (signed(a), signed(b)) if bv_width(a.sort) else (a.payload, b.payload)
        return TRUE if {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op] else FALSE
    if bv_width(a.sort):
        name = {"<": "bvslt", "<=": "bvsle", ">": "bvsgt", ">=": "bvsge"}[op]
        return mk(name, (a, b), BOOL)
    return mk(op, (a, b), BOOL)


def lt(a, b):
    return _cmp("<", a, b)


def le(a, b):
    return _cmp("<=", a, b)


def gt(a, b):
    return _cmp(">", a, b)


def ge(a, b):
    return _cmp(">=", a, b)


def int_floordiv(a: Term, b: Term) -> Term:
    """Ruby's floor division over mathematical integers (b assumed nonzero)."""
    if a.is_lit and b.is_lit and b.payload != 0:
        return lit(a.payload // b.payload, INT)
    pos = mk("div", (a, b), INT)
    negd = mk("div", (neg(a), neg(b)), INT)
    return ite(gt(b, lit(0, INT)), pos, negd)


def int_mod(a: Term, b: Term) -> Term:
    """Ruby's modulo: result takes the sign of the divisor."""
    if a.is_lit and b.is_lit and b.payload != 0:
        return lit(a.payload % b.payload, INT)
    return sub(a, mul(b, int_floordiv(a, b)))


def bv_floordiv(a: Term, b: Term) -> Term:
    sort = a.sort
    if a.is_lit and b.is_lit and b.payload != 0:
        return lit(signed(a) // signed(b), sort)
    q = mk("bvsdiv", (a, b), sort)
    r = mk("bvsrem", (a, b), sort)
    zero = lit(0, sort)
    adjust = and_(not_(eq(r, zero)), not_(eq(lt(r, zero), lt(b, zero))))
    return ite(adjust, sub(q, lit(1, sort)), q)


def bv_mod(a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit and b.payload != 0:
        return lit(signed(a) % signed(b), a.sort)
    return mk("bvsmod", (a, b), a.sort)


def real_div(a: Term, b: Term) -> Term:
    if a.is_lit and b.is_lit and b.payload != 0:
        return lit(a.payload / b.payload, REAL)
    return mk("/", (a, b), REAL)


def real_floor(a: Term) -> Term:
    """floor as an Int term."""
    if a.is_lit:
        return lit(a.payload.numerator // a.payload.denominator, INT)
    return mk("to_int", (a,), INT)


def to_real(a: Term) -> Term:
    if a.sort == REAL:
        return a
    w = bv_width(a.sort)
    if a.is_lit:
        return lit(signed(a) if w else a.payload, REAL)
    if w is None:
        return mk("to_real", (a,), REAL)
    unsigned = mk("to_real", (mk("bv2nat", (a,), INT),), REAL)
    return ite(lt(a, lit(0, a.sort)), sub(unsigned, lit(1 << w, REAL)), unsigned)


def apply(name: str, args: tuple, sort: str) -> Term:
    return mk("uf", tuple(args), sort, name)


# --------------------------------------------------------------------------
# SMT-LIB printing
# --------------------------------------------------------------------------

_SIMPLE = re.compile(r"[A-Za-z_~!@$%^&*+=<>.?/-][0-9A-Za-z_~!@$%^&*+=<>.?/-]*\Z")
_RESERVED = {"let", "forall", "exists", "match", "par", "_", "!", "as", "true", "false",
             "and", "or", "not", "ite", "=", "distinct"}


def sanitize(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED and not name[0].isdigit():
        return name
    if "|" in name or "\\" in name:
        raise UnsupportedTerm(f"identifier cannot be quoted: {name!r}")
    return f"|{name}|"


def desanitize(sym: str) -> str:
    if len(sym) >= 2 and sym[0] == "|" and sym[-1] == "|":
        return sym[1:-1]
    return sym


def _lit_smt(t: Term) -> str:
    if t.sort == BOOL:
        return "true" if t.payload else "false"
    w = bv_width(t.sort)
    if w is not None:
        return f"(_ bv{t.payload} {w})"
    if t.sort == INT:
        return str(t.payload) if t.payload >= 0 else f"(- {-t.payload})"
    v: Fraction = t.payload
    num = f"{abs(v.numerator)}.0"
    body = num if v.denominator == 1 else f"(/ {num} {v.denominator}.0)"
    return body if v >= 0 else f"(- {body})"


def _head(t: Term) -> str:
    if t.op == "uf":
        return sanitize(t.payload)
    if t.op == "bv2nat":
        return "bv2nat"
    return t.op


def to_smt(t: Term, names: Optional[dict] = None) -> str:
    """Renders ``t``; subterms found in ``names`` print as their shared name."""
    names = names or {}
    out: list[str] = []

    def go(x: Term, top: bool):
        if not top and id(x) in names:
            out.append(names[id(x)])
            return
        if x.op == "lit":
            out.append(_lit_smt(x))
        elif x.op == "const":
            out.append(sanitize(x.payload))
        elif not x.args:
            out.append(_head(x))
        else:
            out.append("(" + _head(x))
            for a in x.args:
                out.append(" ")
                go(a, False)
            out.append(")")

    go(t, True)
    return "".join(out)


def iter_dag(roots):
    """Post-order over distinct subterms."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(list(roots))]
    while stack:
        t, done = stack.pop()
        if done:
            order.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for a in reversed(t.args):
            if id(a) not in seen:
                stack.append((a, False))
    return order


def free_symbols(roots) -> tuple[dict, dict]:
    """(constants name -> sort, functions name -> (arg sorts, sort)) in first-use order."""
    consts: dict = {}
    funs: dict = {}
    for t in iter_dag(roots):
        if t.op == "const":
            consts.setdefault(t.payload, t.sort)
        elif t.op == "uf":
            funs.setdefault(t.payload, (tuple(a.sort for a in t.args), t.sort))
    return consts, funs


def choose_logic(roots) -> str:
    sorts = set()
    nonlinear = uf = False
    for t in iter_dag(roots):
        sorts.add(t.sort)
        for a in t.args:
            sorts.add(a.sort)
        if t.op == "uf":
            uf = True
        if t.op in ("*", "div", "mod", "/") and sum(not a.is_lit for a in t.args) > 1:
            nonlinear = True
        if t.op in ("div", "mod", "/", "to_int") and not t.args[-1].is_lit:
            nonlinear = True
    has_bv = any(bv_width(s) for s in sorts)
    has_int = INT in sorts
    has_real = REAL in sorts
    if has_bv and (has_int or has_real):
        return "ALL"
    if has_bv:
        return "QF_UFBV" if uf else "QF_BV"
    arith = ("N" if nonlinear else "L") + ("IRA" if has_int and has_real else
                                          "RA" if has_real else "IA")
    if not (has_int or has_real):
        return "QF_UF"
    return "QF_" + ("UF" if uf else "") + arith
