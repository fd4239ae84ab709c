import itertools
import subprocess

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbrefine import smt as S
from rbrefine.config import Config

X = S.const("x", S.INT)
Y = S.const("y", S.INT)
B8 = S.bv_sort(8)


def test_boolean_folding():
    p = S.lt(X, Y)
    assert S.and_(S.TRUE, p) is p
    assert S.and_(S.FALSE, p) is S.FALSE
    assert S.or_(S.TRUE, p) is S.TRUE
    assert S.not_(S.not_(p)) is p
    assert S.ite(S.TRUE, X, Y) is X
    assert S.eq(X, X) is S.TRUE


def test_literal_arithmetic_folds():
    assert S.add(S.lit(2, S.INT), S.lit(3, S.INT)) is S.lit(5, S.INT)


def test_bitvector_literals_store_unsigned_and_read_signed():
    t = S.lit(-1, B8)
    assert S.to_smt(t) == "(_ bv255 8)"
    assert S.signed(t) == -1


def test_terms_are_hash_consed():
    assert S.add(X, Y) is S.add(X, Y)


def test_integer_floor_division_encoding():
    assert S.to_smt(S.int_floordiv(X, Y)) == "(ite (> y 0) (div x y) (div (- x) (- y)))"


@pytest.mark.parametrize("roots,logic", [
    (lambda: [S.lt(X, Y)], "QF_LIA"),
    (lambda: [S.lt(S.const("b", B8), S.const("c", B8))], "QF_BV"),
    (lambda: [S.eq(S.apply("f", (X,), S.INT), Y)], "QF_UFLIA"),
    (lambda: [S.lt(S.mul(X, Y), X)], "QF_NIA"),
])
def test_logic_selection(roots, logic):
    assert S.choose_logic(roots()) == logic


@given(st.text(alphabet=st.characters(blacklist_characters="|\\", blacklist_categories=("Cs",)),
               min_size=1, max_size=12))
def test_sanitize_round_trips(name):
    assert S.desanitize(S.sanitize(name)) == name


@pytest.mark.parametrize("name", ["x", "x$1", "Integer_+", "@f", "Aggregate_<<", "real_t.@sec",
                                  "Time_cls_log", "$goal0"])
def test_fixture_identifiers_are_simple_symbols(name):
    assert S.sanitize(name) == name


def _z3_agrees(sort, pairs, encode, oracle):
    """Asks the solver whether encode(a, b) == oracle(a, b) for every pair at once."""
    a, b = S.const("a", sort), S.const("b", sort)
    lines = [f"(declare-const a {sort})", f"(declare-const b {sort})"]
    checks = []
    for x, y in pairs:
        env = S.and_(S.eq(a, S.lit(x, sort)), S.eq(b, S.lit(y, sort)))
        checks.append(S.and_(env, S.not_(S.eq(encode(a, b), S.lit(oracle(x, y), sort)))))
    lines.append(f"(assert {S.to_smt(S.or_(*checks))})")
    lines.append("(check-sat)")
    out = subprocess.run([Config().solver(), "-in"], input="\n".join(lines) + "\n",
                         capture_output=True, text=True, timeout=60).stdout
    return out.strip() == "unsat"


def _wrap8(v):
    v %= 256
    return v - 256 if v >= 128 else v


VALUES = [-128, -127, -7, -3, -2, -1, 1, 2, 3, 7, 100, 127]


def test_int_floor_division_and_modulo_match_python():
    pairs = list(itertools.product([-9, -7, -1, 0, 1, 6, 7, 13], [-4, -3, -1, 1, 3, 4]))
    assert _z3_agrees(S.INT, pairs, S.int_floordiv, lambda x, y: x // y)
    assert _z3_agrees(S.INT, pairs, S.int_mod, lambda x, y: x % y)


def test_bv_floor_division_and_modulo_match_wrapped_python():
    pairs = list(itertools.product(VALUES + [0], VALUES))
    assert _z3_agrees(B8, pairs, S.bv_floordiv, lambda x, y: _wrap8(x // y))
    assert _z3_agrees(B8, pairs, S.bv_mod, lambda x, y: _wrap8(x % y))
