"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from typing import Optional


class Span:
    """A half-open source region, 1-based lines and columns."""

    __slots__ = ("line", "col", "end_line", "end_col")

    def __init__(self, line: int, col: int, end_line: int = 0, end_col: int = 0):
        self.line = line
        self.col = col
        self.end_line = end_line or line
        self.end_col = end_col or col

    def to(self, other: "Span") -> "Span":
        return Span(self.line, self.col, other.end_line, other.end_col)

    def __repr__(self) -> str:
        return f"{self.line}:{self.col}"


NO_SPAN = Span(0, 0)


class RbRefineError(Exception):
    """Base class for user-facing errors."""

    def __init__(self, message: str, span: Optional[Span] = None):
        self.message = message
        self.span = span
        where = f"{span.line}:{span.col}: " if span is not None and span.line else ""
        super().__init__(where + message)


class ParseError(RbRefineError):
    """Malformed source or annotation text."""


class DuplicateDefinition(RbRefineError):
    pass


class LabelError(RbRefineError):
    pass


class PurityError(RbRefineError):
    """A refinement predicate that is not a pure boolean expression."""


class UnknownSuperclass(RbRefineError):
    pass


class UnknownClass(RbRefineError):
    pass


class ConflictingFieldType(RbRefineError):
    pass


class NoTypeForField(RbRefineError):
    def __init__(self, field: str, span: Optional[Span] = None):
        self.field = field
        super().__init__(f"no type for instance variable `@{field}'", span)


class NoSignature(RbRefineError):
    def __init__(self, owner: str, method: str, span: Optional[Span] = None):
        self.owner = owner
        self.method = method
        super().__init__(f"no type for method `{owner}#{method}'", span)


class ArityMismatch(RbRefineError):
    pass


class TypeMismatch(RbRefineError):
    def __init__(self, expected: str, found: str, span: Optional[Span] = None):
        self.expected = expected
        self.found = found
        super().__init__(f"type mismatch: expected {expected}, found {found}", span)


class MissingFieldType(RbRefineError):
    pass


class MissingImplementation(RbRefineError):
    pass


class TranslationError(RbRefineError):
    """Raised when a typed method cannot be lowered to the intermediate form.

    ``kind`` is one of ``UntypedReceiver``, ``NoLabel``, ``Unsupported``.
    """

    def __init__(self, kind: str, message: str, span: Optional[Span] = None):
        self.kind = kind
        super().__init__(f"{kind}: {message}", span)


class DepthLimitExceeded(RbRefineError):
    def __init__(self, chain: list[str]):
        self.chain = list(chain)
        super().__init__("inline depth limit exceeded: " + " -> ".join(chain))


class InternalError(RbRefineError):
    pass


class UnsupportedTerm(RbRefineError):
    pass


class OracleUnsupported(RbRefineError):
    """The concrete interpreter reached a callee it cannot execute."""


class SolverError(RbRefineError):
    pass
