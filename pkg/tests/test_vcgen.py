import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbrefine.config import Config
from rbrefine.errors import DepthLimitExceeded
from rbrefine.pipeline import SAFE, UNKNOWN, UNSAFE, prepare, verify_source
from rbrefine.solver import emit_smtlib
from rbrefine.syntax.parser import parse_program
from rbrefine.vcgen import encode_query

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def queries(src, config=Config()):
    prep = prepare(parse_program(src), config)
    return prep, {q.entry.method: q for q in prep.items}


def verdicts(src, config=Config()):
    return {r.subject.split()[-1]: r for r in verify_source(src, config).results}


def test_contradictory_assumption_leaves_no_goals():
    with open(os.path.join(FIXTURES, "control.rbl")) as fh:
        prep, qs = queries(fh.read())
    enc = encode_query(qs["dead_end"], prep.table)
    assert enc.goals == []


def test_goal_kinds_for_raise_and_callee():
    src = ("class A\n type '(Integer x, Integer y) -> Integer r { r != 7 }'\n"
           " def m(x, y) raise \"neg\" if x < 0; x / y end\nend")
    prep, qs = queries(src)
    enc = encode_query(qs["m"], prep.table)
    assert [(g.kind, g.tag) for g in enc.goals] == \
        [("raise", "neg"), ("callee", "Integer#/"), ("post", "")]
    assert [g.trigger for g in enc.goals] == [
        "exceptionRaised(neg)", "calleePreconditionViolated(Integer#/)", "postconditionViolated"]


RECURSIVE = """
class R
  type '(Integer x) -> Integer r'
  def loop(x) loop(x) end
end
"""


def test_recursive_exact_call_hits_depth_limit():
    prep, qs = queries(RECURSIVE)
    with pytest.raises(DepthLimitExceeded) as exc:
        encode_query(qs["loop"], prep.table)
    assert "R_loop" in str(exc.value)


def test_depth_limit_is_reported_as_unknown():
    res = verdicts(RECURSIVE)["loop"]
    assert res.verdict == UNKNOWN and "R_loop" in res.detail


def test_depth_limit_is_configurable():
    src = """
class D
  type '(Integer x) -> Integer r'
  def a(x) b(x) end
  type '(Integer x) -> Integer r'
  def b(x) c(x) end
  type '(Integer x) -> Integer r'
  def c(x) x end
end
"""
    assert verdicts(src, Config(depth_limit=2))["a"].verdict == UNKNOWN
    assert verdicts(src, Config(depth_limit=3))["a"].verdict == SAFE


def test_call_on_nil_is_an_exception():
    src = """
class N
  var_type :@link, 'N'
  type '() -> N r'
  def link() @link end
  type '() -> Integer r'
  def v() 1 end
  type '() -> Integer r'
  def m() N.new.link.v end
end
"""
    res = verdicts(src)["m"]
    assert res.verdict == UNSAFE and res.trigger == "exceptionRaised(NoMethodError)"
    assert "possibly-nil receiver" in res.line()


def test_numeric_kinds_are_never_equal():
    src = ("class E\n type '() -> Bool b { b == false }'\n def m() 3 == 3.0 end\n"
           " type '() -> Bool b { b == true }'\n def n() 3.0 == 3.0 end\nend")
    v = verdicts(src)
    assert v["m"].verdict == SAFE and v["n"].verdict == SAFE


def test_objects_compare_by_identity_arrays_by_content():
    src = """
class O
  type '() -> Bool b { b == false }'
  def objs() O.new == O.new end
  type '() -> Bool b { b == true }'
  def same() o = O.new; o == o end
  type '() -> Bool b { b == true }'
  def arrs() [1, 2] == [1, 2] end
end
"""
    v = verdicts(src)
    assert {k: r.verdict for k, r in v.items()} == {"objs": SAFE, "same": SAFE, "arrs": SAFE}


def test_float_arithmetic_is_exact():
    src = "class F\n type '() -> Float r { r == 0.3 }'\n def m() 0.1 + 0.2 end\nend"
    assert verdicts(src)["m"].verdict == SAFE


def test_bitvector_mode_wraps():
    src = "class W\n type '(Integer x { x > 0 }) -> Integer r { r > 0 }'\n def m(x) x + 1 end\nend"
    assert verdicts(src)["m"].verdict == SAFE
    res = verdicts(src, Config(int_mode="bv", bv_width=8))["m"]
    assert res.verdict == UNSAFE
    assert res.counterexample.bindings == {"real_x": 127}


def test_emission_is_deterministic():
    with open(os.path.join(FIXTURES, "time.rbl")) as fh:
        src = fh.read()
    texts = []
    for _ in range(2):
        prep = prepare(parse_program(src))
        texts.append([emit_smtlib(encode_query(q, prep.table))[0] for q in prep.items])
    assert texts[0] == texts[1]


small_int = st.integers(-20, 20)
atoms = st.one_of(small_int.map(str), st.just("x"))
int_exprs = st.recursive(
    atoms,
    lambda c: st.builds(lambda a, op, b: f"({a} {op} {b})", c, st.sampled_from("+-*"), c),
    max_leaves=4)


@settings(max_examples=25, deadline=None)
@given(int_exprs, int_exprs, small_int)
def test_code_after_return_never_changes_the_verdict(ret, tail, k):
    def src(body):
        return (f"class S\n type '(Integer x) -> Integer r {{ r != {k} }}'\n"
                f" def m(x) {body} end\nend")
    base = verdicts(src(f"return {ret}"))["m"].verdict
    padded = verdicts(src(f"return {ret}; {tail}"))["m"].verdict
    assert base == padded
