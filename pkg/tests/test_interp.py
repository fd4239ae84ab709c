import os
from fractions import Fraction

import pytest

from rbrefine.config import Config
from rbrefine.errors import OracleUnsupported
from rbrefine.interp import Arr, Obj, interpret_concrete, replay_counterexample, ruby_eq
from rbrefine.pipeline import prepare
from rbrefine.solver import Counterexample
from rbrefine.syntax.parser import parse_program

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def load(name):
    with open(os.path.join(FIXTURES, name)) as fh:
        return prepare(parse_program(fh.read())).table


def run(table, cls, method, config=Config(), **inputs):
    entry = table.lookup(cls, method)
    inputs.setdefault("self", Obj(cls, 1, {}))
    return interpret_concrete(table, entry, inputs, config)


@pytest.fixture(scope="module")
def time_table():
    return load("time.rbl")


def test_incr_sec_wraps_at_59(time_table):
    out = run(time_table, "Time", "incr_sec", x=59)
    assert out.kind == "normal" and out.value == 0 and out.post_holds


def test_incr_sec_of_zero(time_table):
    out = run(time_table, "Time", "incr_sec", x=0)
    assert out.value == 1


def test_input_outside_refinement_is_assumption_unmet(time_table):
    assert run(time_table, "Time", "incr_sec", x=60).kind == "assumptionUnmet"


def test_generated_accessors_run_natively(time_table):
    ts = [Obj("Time", k, {"sec": 10 * k, "min": 20 + k, "hour": k}) for k in (2, 3, 4)]
    me = Obj("Time", 1, {"sec": 99, "min": 99, "hour": 99})
    out = run(time_table, "Time", "mix", self=me, t1=ts[0], t2=ts[1], t3=ts[2])
    assert out.kind == "normal" and out.post_holds
    assert me.fields == {"sec": 20, "min": 23, "hour": 4}


def test_pure_callee_needs_a_model(time_table):
    t = Obj("Time", 2, {"sec": 10, "min": 58, "hour": 3})
    with pytest.raises(OracleUnsupported, match="incr_sec"):
        run(time_table, "Time", "incr_min", t=t)


def test_withdraw_beyond_balance_raises():
    t = load("bank.rbl")
    c = Obj("Customer", 1, {"balance": 5, "log": None})
    out = run(t, "Customer", "withdraw", self=c, amount=6)
    assert out.kind == "exception" and out.message == "Insufficient funds."
    ok = run(t, "Customer", "withdraw", self=Obj("Customer", 1, {"balance": 5}), amount=5)
    assert ok.kind == "normal" and ok.value == 0


ARITH = """
class K
  type '(Integer x, Integer y) -> Integer r'
  def div(x, y) x / y end
  type '(Integer x, Integer y) -> Integer r'
  def mod(x, y) x % y end
  type '(Float x, Float y) -> Float r'
  def fdiv(x, y) x / y end
  type '(Integer x) -> Integer r'
  def early(x) return x; x + 1 end
  type '() -> Array<Integer> a'
  def grow() a = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]; a << 11 end
  type '() -> Integer r'
  def bump() poke end
  type :poke, '() -> Integer r', modifies: { self: @x }
  var_type :@x, 'Integer'
end
"""


@pytest.fixture(scope="module")
def arith():
    return prepare(parse_program(ARITH)).table


@pytest.mark.parametrize("x,y", [(-7, 2), (7, -2), (-7, -2), (7, 2), (0, 3)])
def test_integer_division_floors(arith, x, y):
    assert run(arith, "K", "div", x=x, y=y).value == x // y
    assert run(arith, "K", "mod", x=x, y=y).value == x % y


def test_division_by_zero_is_a_callee_failure(arith):
    out = run(arith, "K", "div", x=1, y=0)
    assert (out.kind, out.error_kind, out.tag) == ("exception", "callee", "Integer#/")
    assert run(arith, "K", "mod", x=1, y=0).tag == "Integer#%"


def test_float_division_is_exact(arith):
    assert run(arith, "K", "fdiv", x=Fraction(1), y=Fraction(3)).value == Fraction(1, 3)


def test_bitvector_wraparound(arith):
    out = run(arith, "K", "div", Config(int_mode="bv", bv_width=8), x=-128, y=-1)
    assert out.value == -128


def test_early_return(arith):
    assert run(arith, "K", "early", x=4).value == 4


def test_array_capacity(arith):
    out = run(arith, "K", "grow")
    assert (out.kind, out.error_kind, out.tag) == ("exception", "bound", "Array#push")


def test_modifies_callee_is_not_executed(arith):
    with pytest.raises(OracleUnsupported):
        run(arith, "K", "bump")


def test_equality_keeps_kinds_apart():
    assert not ruby_eq(3, Fraction(3))
    assert not ruby_eq(1, True)
    assert ruby_eq(Arr([1, 2]), Arr([1, 2], 7))
    assert not ruby_eq(Obj("A", 1), Obj("A", 2))


def test_fabricated_counterexample_that_violates_nothing_does_not_replay(time_table):
    cex = Counterexample({"real_x": 3}, "postconditionViolated",
                         inputs={"self": Obj("Time", 1, {}), "x": 3})
    assert replay_counterexample(time_table, time_table.lookup("Time", "incr_sec"), cex) is False


def test_real_counterexample_replays(time_table):
    cex = Counterexample({}, "calleePreconditionViolated(Integer#/)",
                         inputs={"self": Obj("K", 1, {}), "x": 1, "y": 0})
    t = prepare(parse_program(ARITH)).table
    assert replay_counterexample(t, t.lookup("K", "div"), cex) is True
