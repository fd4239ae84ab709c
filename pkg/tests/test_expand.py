import pytest

from rbrefine.errors import MissingFieldType, MissingImplementation
from rbrefine.expand import collect_obligations, expand_generators
from rbrefine.pipeline import prepare
from rbrefine.syntax.parser import parse_program
from rbrefine.syntax.printer import print_signature
from rbrefine.translate import Failure
from rbrefine.typesys import build_class_table


def expanded(src):
    p = parse_program(src)
    t = build_class_table(p)
    expand_generators(p, t)
    return p, t


def test_attr_accessor_generates_getter_and_setter():
    _, t = expanded("class T\n attr_accessor :sec\n var_type :@sec, 'Integer'\nend")
    getter, setter = t.lookup("T", "sec"), t.lookup("T", "sec=")
    assert print_signature(getter.signature) == "() -> Integer v { (v == @sec) }"
    assert getter.label.kind == "pure"
    assert print_signature(setter.signature) == "(Integer i) -> Integer o { (@sec == i) }"
    assert setter.label.modifies == (("self", "sec"),)


def test_attr_accessor_needs_field_type():
    with pytest.raises(MissingFieldType):
        expanded("class T\n attr_accessor :sec\nend")


def test_belongs_to_generates_association_accessors():
    _, t = expanded("class Folder\nend\nclass UserFile\n belongs_to :folder\nend")
    getter, setter = t.lookup("UserFile", "folder"), t.lookup("UserFile", "folder=")
    assert print_signature(getter.signature) == "() -> Folder c"
    assert print_signature(setter.signature) == "(Folder i) -> Folder o { (self.folder() == i) }"
    assert t.field_type("UserFile", "folder").name == "Folder"


def test_user_annotation_wins_over_generated_one():
    _, t = expanded("class T\n attr_accessor :sec\n var_type :@sec, 'Integer'\n"
                    " type :sec, '() -> Integer v { v > 0 }', :pure\nend")
    assert print_signature(t.lookup("T", "sec").signature) == "() -> Integer v { (v > 0) }"


MIXIN = """
module Arithmetic
  type :value, '() -> Float v { 0 < v }', :pure
  type '(Integer x) -> Float r'
  def half(x) x / value; end
end
class Money
  include Arithmetic
  var_type :@val, 'Float'
  def value() @val end
end
class Broken
  include Arithmetic
end
"""


def test_obligations_are_collected_per_including_class():
    p, t = expanded(MIXIN)
    obs = collect_obligations(p, t)
    assert [(o.class_name, o.method, o.module) for o in obs] == \
        [("Money", "value", "Arithmetic"), ("Broken", "value", "Arithmetic")]


def test_unannotated_implementation_takes_module_signature():
    p, t = expanded(MIXIN)
    collect_obligations(p, t)
    impl = t.lookup("Money", "value")
    assert print_signature(impl.signature) == "() -> Float v { (0 < v) }"


def test_missing_implementation_is_a_per_method_failure():
    prep = prepare(parse_program(MIXIN))
    labels = {i.label: i for i in prep.items}
    assert "Money instance method value" in labels
    broken = labels["Broken instance method value"]
    assert isinstance(broken, Failure)
    assert isinstance(broken.error, MissingImplementation)
