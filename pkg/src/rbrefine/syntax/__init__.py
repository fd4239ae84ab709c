from rbrefine.syntax.ast import Program
from rbrefine.syntax.parser import parse_program, parse_signature
from rbrefine.syntax.printer import pretty_print

__all__ = ["Program", "parse_program", "parse_signature", "pretty_print"]
