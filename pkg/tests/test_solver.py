import os
import stat
from fractions import Fraction

from rbrefine.config import Config
from rbrefine.pipeline import UNSAFE, verify_source
from rbrefine.solver import BV, parse_model, parse_sexprs, run_solver

SOLVER = Config().solver()

KNOWN_MODEL = """
(declare-const a Int)
(declare-const r Real)
(declare-const v (_ BitVec 8))
(declare-const p Bool)
(declare-fun f (Int Int) Int)
(assert (= a (- 3)))
(assert (= r (/ 1.0 3.0)))
(assert (= v #xfe))
(assert p)
(assert (= (f 1 2) 7))
(assert (= (f 2 2) 9))
(check-sat)
(get-model)
"""


def test_unsat_text():
    v = run_solver("(declare-const a Int)\n(assert (< a a))\n(check-sat)\n(get-model)\n", 30,
                   SOLVER)
    assert v.kind == "unsat"


def test_sat_model_binds_every_declared_constant():
    v = run_solver(KNOWN_MODEL, 30, SOLVER)
    assert v.kind == "sat"
    m = v.model
    assert m.value("a") == -3
    assert m.value("r") == Fraction(1, 3)
    assert m.value("v") == BV(254, 8) and m.value("v").signed() == -2
    assert m.value("p") is True
    assert m.apply("f", [1, 2]) == 7 and m.apply("f", [2, 2]) == 9


def test_missing_executable_names_the_path():
    v = run_solver("(check-sat)\n", 5, "/no/such/solver")
    assert v.kind == "solverError" and "/no/such/solver" in v.detail


def test_timeout_is_reported(tmp_path):
    slow = tmp_path / "slow-solver"
    slow.write_text("#!/bin/sh\nsleep 10\n")
    slow.chmod(slow.stat().st_mode | stat.S_IEXEC)
    v = run_solver("(check-sat)\n", 0.5, str(slow))
    assert v.kind == "timeout"


def test_unknown_is_surfaced(tmp_path):
    fake = tmp_path / "fake-solver"
    fake.write_text("#!/bin/sh\ncat > /dev/null\necho unknown\n")
    fake.chmod(fake.stat().st_mode | stat.S_IEXEC)
    res = verify_source("class A\n type '(Integer x) -> Integer r { r > x }'\n"
                        " def m(x) x + 1 end\nend", Config(solver_path=str(fake))).results[0]
    assert res.verdict == "UNKNOWN" and "unknown" in res.detail


def test_parse_model_without_solver():
    text = """sat
(
  (define-fun x () Int (- 4))
  (define-fun |a b| () Bool false)
  (define-fun g ((x!0 Int)) Int (ite (= x!0 1) 10 (ite (= x!0 2) 20 30)))
)"""
    m = parse_model(text)
    assert m.value("x") == -4
    assert m.value("a b") is False
    assert [m.apply("g", [k]) for k in (1, 2, 3)] == [10, 20, 30]


def test_sexpr_reader_handles_quoted_symbols_and_decimals():
    (e,) = parse_sexprs("(f |x y| 2.5 #b101)")
    assert e[1] == "x y" and e[2] == Fraction(5, 2) and e[3] == BV(5, 3)


ARRAY_INPUT = """
class A
  type '(Array<Integer> a { a.size > 1 }) -> Integer r { r != 5 }'
  def second(a) a[1] end
end
"""


def test_array_counterexample_has_length_and_cells_within_capacity():
    res = verify_source(ARRAY_INPUT).results[0]
    assert res.verdict == UNSAFE
    b = res.counterexample.bindings
    assert 2 <= b["real_a.size"] <= 10
    assert b["real_a[1]"] == 5
    assert all(f"real_a[{k}]" in b for k in range(b["real_a.size"]))
    assert res.counterexample.replayed is True


def test_single_input_model_gives_single_binding():
    res = verify_source("class A\n type '(Integer x) -> Integer r { r > 0 }'\n"
                        " def m(x) x end\nend").results[0]
    assert list(res.counterexample.bindings) == ["real_x"]
    assert res.counterexample.bindings["real_x"] <= 0


def test_solver_path_from_environment(monkeypatch):
    monkeypatch.setenv("RBREFINE_SOLVER", "/custom/z3")
    assert Config().solver() == "/custom/z3"
    assert Config(solver_path="/explicit").solver() == "/explicit"
    monkeypatch.delenv("RBREFINE_SOLVER")
    assert os.path.basename(Config().solver()) == "z3"
