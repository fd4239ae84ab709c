"""Tokenizer for `.rbl` sources and annotation strings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from rbrefine.errors import ParseError, Span

KEYWORDS = {
    "class", "module", "def", "end", "if", "elsif", "else", "unless", "then",
    "return", "raise", "self", "nil", "true", "false", "include", "and", "or",
    "not",
}

# longest first
OPERATORS = [
    "->", "**", "==", "!=", "<=", ">=", "&&", "||", "<<", "+=", "-=", "*=",
    "/=", "%=", "::",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "(", ")", "[", "]", "{", "}",
    ",", ".", ";", ":",
]

OPERATOR_METHODS = ["[]=", "[]", "<=", ">=", "==", "!=", "<<", "-@", "+@",
                    "+", "-", "*", "/", "%", "<", ">", "!"]

_OPEN = {"(": ")", "[": "]", "{": "}"}


@dataclass
class Token:
    kind: str  # ident const ivar symbol int float string op kw newline eof
    text: str
    span: Span
    spaced: bool = False  # whitespace before this token

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops

    def is_kw(self, *kws: str) -> bool:
        return self.kind == "kw" and self.text in kws

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text!r}@{self.span}"


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


class Lexer:
    """Tokenizes ``text[start:end]``; spans refer to positions in ``text``."""

    def __init__(self, text: str, start: int = 0, end: Optional[int] = None,
                 newlines: bool = True):
        self.text = text
        self.pos = start
        self.end = len(text) if end is None else end
        self.newlines = newlines
        self.depth: list[str] = []
        # line starts for position -> line/col
        self._line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    def location(self, pos: int) -> tuple[int, int]:
        lo, hi = 0, len(self._line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, pos - self._line_starts[lo] + 1

    def span(self, a: int, b: int) -> Span:
        l1, c1 = self.location(a)
        l2, c2 = self.location(b)
        return Span(l1, c1, l2, c2)

    def error(self, msg: str, pos: Optional[int] = None) -> ParseError:
        p = self.pos if pos is None else pos
        return ParseError(msg, self.span(p, p))

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        text = self.text
        while True:
            spaced = False
            while self.pos < self.end:
                c = text[self.pos]
                if c in " \t\r":
                    self.pos += 1
                    spaced = True
                elif c == "\\" and self.pos + 1 < self.end and text[self.pos + 1] == "\n":
                    self.pos += 2
                    spaced = True
                elif c == "#":
                    while self.pos < self.end and text[self.pos] != "\n":
                        self.pos += 1
                elif c == "\n":
                    if self.newlines and not self.depth:
                        if out and out[-1].kind != "newline":
                            out.append(Token("newline", "\n", self.span(self.pos, self.pos + 1)))
                    self.pos += 1
                    spaced = True
                else:
                    break
            if self.pos >= self.end:
                out.append(Token("eof", "", self.span(self.end, self.end), spaced))
                return out
            tok = self._next()
            tok.spaced = spaced
            out.append(tok)

    def _next(self) -> Token:
        text, start = self.text, self.pos
        c = text[start]

        if c.isdigit():
            p = start
            while p < self.end and (text[p].isdigit() or text[p] == "_"):
                p += 1
            kind = "int"
            if p + 1 < self.end and text[p] == "." and text[p + 1].isdigit():
                p += 1
                while p < self.end and text[p].isdigit():
                    p += 1
                kind = "float"
            self.pos = p
            return Token(kind, text[start:p].replace("_", ""), self.span(start, p))

        if _is_ident_start(c):
            p = start
            while p < self.end and _is_ident_char(text[p]):
                p += 1
            # method-name suffixes: include?, save!
            if (p < self.end and text[p] in "?!"
                    and not (p + 1 < self.end and text[p + 1] == "=")):
                p += 1
            word = text[start:p]
            self.pos = p
            if word in KEYWORDS:
                return Token("kw", word, self.span(start, p))
            kind = "const" if word[0].isupper() else "ident"
            return Token(kind, word, self.span(start, p))

        if c == "@":
            p = start + 1
            if p >= self.end or not _is_ident_start(text[p]):
                raise self.error("expected instance variable name after '@'")
            while p < self.end and _is_ident_char(text[p]):
                p += 1
            self.pos = p
            return Token("ivar", text[start + 1:p], self.span(start, p))

        if c in "'\"`":
            return self._string(c)

        if c == ":" and start + 1 < self.end and text[start + 1] != ":":
            sym = self._symbol(start + 1)
            if sym is not None:
                name, p = sym
                self.pos = p
                return Token("symbol", name, self.span(start, p))

        for op in OPERATORS:
            if text.startswith(op, start) and start + len(op) <= self.end:
                self.pos = start + len(op)
                if op in _OPEN:
                    self.depth.append(_OPEN[op])
                elif op in (")", "]", "}"):
                    if self.depth and self.depth[-1] == op:
                        self.depth.pop()
                return Token("op", op, self.span(start, self.pos))

        raise self.error(f"unexpected character {c!r}")

    def _symbol(self, p: int) -> Optional[tuple[str, int]]:
        text = self.text
        if p >= self.end:
            return None
        if text[p] == "@":
            q = p + 1
            while q < self.end and _is_ident_char(text[q]):
                q += 1
            return (text[p:q], q) if q > p + 1 else None
        if _is_ident_start(text[p]):
            q = p
            while q < self.end and _is_ident_char(text[q]):
                q += 1
            if q < self.end and text[q] in "?!=" and not text.startswith("==", q) \
                    and not text.startswith("=>", q):
                q += 1
            return text[p:q], q
        for op in OPERATOR_METHODS:
            if text.startswith(op, p):
                return op, p + len(op)
        return None

    def _string(self, quote: str) -> Token:
        text, start = self.text, self.pos
        # annotation strings in listings open with ` and close with '
        closers = "'`" if quote == "`" else quote
        p = start + 1
        buf = []
        while True:
            if p >= self.end:
                raise ParseError("unterminated string literal", self.span(start, start + 1))
            ch = text[p]
            if ch == "\\" and p + 1 < self.end:
                buf.append(text[p + 1])
                p += 2
                continue
            if ch in closers:
                break
            buf.append(ch)
            p += 1
        self.pos = p + 1
        tok = Token("string", "".join(buf), self.span(start, p + 1))
        # content region, used to re-lex annotation strings in place
        tok.content = (start + 1, p)  # type: ignore[attr-defined]
        return tok


def tokenize(text: str) -> list[Token]:
    return Lexer(text).tokens()
