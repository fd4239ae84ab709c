"""Golden IR renderings, one or more per lowering rule."""

import re

import pytest

from rbrefine import ir as I
from rbrefine.pipeline import prepare
from rbrefine.syntax.parser import parse_program
from rbrefine.translate import Failure

BOX = """
class Box
  var_type :@f, 'Integer'
  type :peek, '(Integer x { x > 0 && x < 100 && x != 50 }) -> Integer r { r == x }', :pure
  type :poke, '(Integer x) -> Integer r { @f == x }', modifies: { self: @f }
  type '(Integer x) -> Integer r'
  def helper(x) x; end
  type '() -> Integer r'
  def t_const; 42; end
  type '(Integer x) -> Integer r'
  def t_var(x) x; end
  type '() -> Integer r'
  def t_seq; 1; 2; end
  type '(Bool b) -> Integer r'
  def t_if(b) if b then 1 else 2 end; end
  type '() -> Box r'
  def t_self; self; end
  type '(Integer x) -> Integer r'
  def t_vass(x) y = x; y; end
  type '(Integer x) -> Integer r'
  def t_ret(x) return x; end
  type '() -> Integer r'
  def t_inst; @f; end
  type '(Integer x) -> Integer r'
  def t_iass(x) @f = x; end
  type '() -> Box r'
  def t_new; Box.new; end
  type '(Integer x) -> Integer r'
  def t_exact(x) helper(x); end
  type '(Integer y) -> Integer r'
  def t_pure(y) peek(y + 1); end
  type '(Integer x) -> Integer r'
  def t_impure(x) poke(x); end
  type '(Integer x, Integer d) -> Integer r'
  def t_div(x, d) x / d; end
end
"""


@pytest.fixture(scope="module")
def box():
    prep = prepare(parse_program(BOX))
    return {d.name: I.render_def(d) for d in prep.defs}


GOLDEN = {
    "T-Const": ("Box_t_const", "define Box_t_const(self) = 42"),
    "T-Var": ("Box_t_var", "define Box_t_var(self, x) = x"),
    "T-Seq": ("Box_t_seq", "define Box_t_seq(self) = 1; 2"),
    "T-If": ("Box_t_if", "define Box_t_if(self, b) = if b then 1 else 2 end"),
    "T-Self": ("Box_t_self", "define Box_t_self(self) = self"),
    "T-VAss": ("Box_t_vass", "define Box_t_vass(self, x) = y := x; y"),
    "T-Ret": ("Box_t_ret", "define Box_t_ret(self, x) = return(x)"),
    "T-Inst": ("Box_t_inst", "define Box_t_inst(self) = self.@f"),
    "T-IAss": ("Box_t_iass", "define Box_t_iass(self, x) = self.@f := x"),
    "T-New": ("Box_t_new", "define Box_t_new(self) = obj(class=6, id=1, @f: nil)"),
    "T-ExactCall": ("Box_t_exact", "define Box_t_exact(self, x) = Box_helper(self, x)"),
    "T-PureCall": (
        "Box_t_pure",
        "define Box_t_pure(self, y) = let self$1 = self, x$2 = Integer_+(y, 1), "
        "r$3 = uf:Box_peek(self$1, x$2) in (assert(if if Integer_>(x$2, 0) then "
        "Integer_<(x$2, 100) else false end then Integer_!=(x$2, 50) else false end); "
        "assume(Integer_==(r$3, x$2)); r$3)"),
    "T-ImpureCall": (
        "Box_t_impure",
        "define Box_t_impure(self, x) = let self$1 = self, x$2 = x in (let r$3 = sym(Integer) "
        "in (havoc(self$1.@f); assume(Integer_==(self$1.@f, x$2)); r$3))"),
}


@pytest.mark.parametrize("rule", sorted(GOLDEN))
def test_rule_golden(box, rule):
    name, expected = GOLDEN[rule]
    assert box[name] == expected


def test_T_Def_every_bodied_method_becomes_a_definition(box):
    assert "Box_helper" in box and box["Box_helper"] == "define Box_helper(self, x) = x"


def test_T_Annot_annotations_produce_no_definitions(box):
    assert "Box_peek" not in box and "Box_poke" not in box


def test_T_Annot_annotation_only_program_has_no_queries():
    prep = prepare(parse_program("class A\n type :m, '() -> Integer r', :pure\nend"))
    assert prep.defs == [] and prep.items == []


def test_T_Empty():
    prep = prepare(parse_program(""))
    assert prep.defs == [] and prep.items == []


def test_division_asserts_nonzero_divisor(box):
    assert box["Box_t_div"] == (
        "define Box_t_div(self, x, d) = let x$1 = x, d$2 = d in "
        "(assert(Numeric_nonzero(d$2)); Integer_/(x$1, d$2))")
    prep = prepare(parse_program(BOX))
    body = next(d.body for d in prep.defs if d.name == "Box_t_div")
    tags = [n.tag for n in I.walk(body) if isinstance(n, I.IAssert)]
    assert tags == ["Integer#/"]


def test_argument_is_evaluated_once_when_binder_occurs_three_times(box):
    text = box["Box_t_pure"]
    # the argument expression is bound once...
    assert text.count("Integer_+(y, 1)") == 1
    # ...and every occurrence of the binder in the precondition refers to the bound name
    pre = re.search(r"assert\((.*?)\); assume", text).group(1)
    assert pre.count("x$2") == 3
    assert "y" not in pre


def test_query_shape():
    prep = prepare(parse_program(BOX))
    q = next(i for i in prep.items if i.label == "Box instance method t_pure")
    assert I.render_query(q) == (
        "query Box instance method t_pure\n"
        "  symbolic self : Box\n"
        "  symbolic y : Integer\n"
        "  verify let r = Box_t_pure(self, y) in (true)")


def test_union_receiver_dispatches_on_class_id():
    src = """
class P
  type '() -> Integer r'
  def v() 1 end
end
class Q
  type '() -> Integer r'
  def v() 2 end
end
class U
  type '(Bool b, P p, Q q) -> Integer r'
  def pick(b, p, q)
    o = if b then p else q end
    o.v
  end
end
"""
    prep = prepare(parse_program(src))
    text = next(I.render_def(d) for d in prep.defs if d.name == "U_pick")
    assert "if classid(" in text and "== 6 then P_v(" in text and "Q_v(" in text


def test_untyped_receiver_is_reported_per_method():
    src = ("class A\n type '() -> Integer r'\n def bad() y = nil; y.foo end\n"
           " type '() -> Integer r'\n def good() 1 end\nend")
    prep = prepare(parse_program(src))
    bad, good = prep.items
    assert isinstance(bad, Failure) and "foo" in str(bad.error)
    assert not isinstance(good, Failure)


def test_override_with_own_signature_adds_obligation_query():
    src = """
module M
  type :v, '() -> Integer r { r > 0 }', :pure
end
class C
  include M
  type '() -> Integer r { r > 5 }'
  def v() 6 end
end
"""
    prep = prepare(parse_program(src))
    labels = [i.label for i in prep.items]
    assert labels.count("C instance method v") == 2
