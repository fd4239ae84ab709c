import os

import pytest
from hypothesis import given, settings

import strategies as S
from rbrefine.errors import LabelError, ParseError
from rbrefine.syntax import ast as A
from rbrefine.syntax.parser import parse_program, parse_signature
from rbrefine.syntax.printer import pretty_print, print_expr

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_text(name):
    with open(os.path.join(FIXTURES, name)) as fh:
        return fh.read()


def body_of(src, method):
    p = parse_program(src)
    for c in p.decls:
        for m in c.members:
            if isinstance(m, A.MethodDef) and m.name == method:
                return m.body
    raise KeyError(method)


@pytest.mark.parametrize("name", sorted(f for f in os.listdir(FIXTURES) if f.endswith(".rbl")))
def test_fixture_round_trips(name):
    p = parse_program(fixture_text(name))
    assert parse_program(pretty_print(p)) == p


@settings(max_examples=300, deadline=None)
@given(S.exprs)
def test_printed_program_reparses_to_same_ast(e):
    p = S.method_source(e)
    assert parse_program(pretty_print(p)) == p


def test_chained_comparison_desugars_to_conjunction():
    sig, _ = parse_signature("(Integer x { 0 <= x < 60 }) -> Integer r")
    pred = sig.params[0].predicate
    assert print_expr(pred) == "((0 <= x) && (x < 60))"


def test_triple_chain():
    sig, _ = parse_signature("(Integer x { 0 <= x < 60 <= 100 }) -> Integer r")
    assert print_expr(sig.params[0].predicate) == "(((0 <= x) && (x < 60)) && (60 <= 100))"


def test_signature_binders_and_types():
    sig, label = parse_signature("(Time t { t.is_valid }, Integer y) -> Array<Integer> log")
    assert [p.binder for p in sig.params] == ["t", "y"]
    assert sig.result.binder == "log"
    assert sig.result.base == A.TypeName("Array", A.TypeName("Integer"))
    assert label == A.EXACT


def test_bare_identifier_is_self_call_unless_local():
    body = body_of("class K\n def m(x) y; x end\nend", "m")
    assert body.first == A.Call(A.Self(), "y", ())
    assert body.second == A.Var("x")


def test_compound_assignment_on_field():
    body = body_of("class K\n def m() @n += 1 end\nend", "m")
    assert body == A.FieldAssign("n", A.Call(A.FieldRead("n"), "+", (A.int_const(1),)))


def test_modifier_if_and_unless():
    body = body_of("class K\n def m(x) raise \"no\" if x > 1; 3 unless x end\nend", "m")
    assert isinstance(body.first, A.If) and body.first.then == A.Raise("no")
    assert body.second == A.If(A.Var("x"), A.Const("nil"), A.int_const(3))


def test_index_compound_assignment_desugars_to_index_read_and_write():
    body = body_of("class K\n def m(i) @b[i] += 1 end\nend", "m")
    assert body.method == "[]="
    assert body.args[1].receiver.method == "[]"


def test_parse_error_reports_line_and_column():
    with pytest.raises(ParseError) as exc:
        parse_program("class A\n  def f(x) x +; end\nend")
    assert exc.value.span.line == 2 and exc.value.span.col == 15
    assert "expected an expression" in str(exc.value)


def test_parse_error_for_missing_end():
    with pytest.raises(ParseError, match="missing 'end'"):
        parse_program("class A")


def test_modifies_entry_must_name_self_or_parameter():
    src = "class K\n type :m, '(Integer x) -> Integer r', modifies: { z: @f }\nend"
    with pytest.raises(LabelError):
        parse_program(src)


def test_annotation_without_body_needs_label():
    with pytest.raises(LabelError):
        parse_program("class K\n type :m, '(Integer x) -> Integer r'\nend")


def test_float_literals_are_exact_decimals():
    body = body_of("class K\n def m() 0.01 end\nend", "m")
    assert body.kind == "float" and str(body.value) == "0.01"


def test_nested_module_path_names():
    p = parse_program("class ActiveRecord::Base\nend\nclass U < ActiveRecord::Base\nend")
    assert [c.name for c in p.decls] == ["ActiveRecord::Base", "U"]
    assert p.decls[1].superclass == "ActiveRecord::Base"
