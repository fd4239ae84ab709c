"""Recursive-descent parser for `.rbl` programs and annotation strings.

Sugar handled here and not visible in the AST:

* ``a <= b < c``   becomes ``a <= b && b < c``
* ``a && b``       becomes ``if a then b else false end``
* ``a || b``       becomes ``if a then true else b end``
* ``x += e``, ``@f += e``, ``r.f += e``, ``r[i] += e``
* ``s if c`` / ``s unless c`` / ``unless c ... end``
* ``r.f = e`` and ``r[i] = e`` become calls to ``f=`` and ``[]=``
"""

from __future__ import annotations

from decimal import Decimal
from typing import Optional

from rbrefine.errors import DuplicateDefinition, LabelError, ParseError, PurityError, Span
from rbrefine.syntax import ast as A
from rbrefine.syntax.lexer import Lexer, Token

COMPARISONS = ("<", "<=", ">", ">=")
COMPOUND = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%"}
STMT_END = ("end", "else", "elsif")


class Parser:
    def __init__(self, text: str, tokens: list[Token], lexer: Lexer):
        self.text = text
        self.toks = tokens
        self.lexer = lexer
        self.i = 0
        self.locals: list[set[str]] = [set()]
        self._bare: set[int] = set()

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"{msg} (found {found})", t.span)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(f"expected '{op}'")
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not self.tok.is_kw(kw):
            raise self.error(f"expected '{kw}'")
        return self.advance()

    def skip_newlines(self) -> None:
        while self.tok.kind == "newline":
            self.advance()

    def skip_seps(self) -> None:
        while self.tok.kind == "newline" or self.tok.is_op(";"):
            self.advance()

    def at_sep(self) -> bool:
        t = self.tok
        return t.kind in ("newline", "eof") or t.is_op(";")

    def is_local(self, name: str) -> bool:
        return name in self.locals[-1]

    # -- program -----------------------------------------------------------

    def program(self) -> A.Program:
        decls: list = []
        seen: dict[str, Span] = {}
        self.skip_seps()
        while self.tok.kind != "eof":
            if self.tok.is_kw("class"):
                d = self.class_decl()
            elif self.tok.is_kw("module"):
                d = self.module_decl()
            else:
                raise self.error("expected 'class' or 'module' at top level")
            if d.name in seen:
                raise DuplicateDefinition(f"class or module `{d.name}' defined twice", d.span)
            seen[d.name] = d.span
            decls.append(d)
            self.skip_seps()
        return A.Program(tuple(decls))

    def class_decl(self) -> A.ClassDecl:
        start = self.expect_kw("class")
        name = self.const_name()
        sup = None
        if self.tok.is_op("<"):
            self.advance()
            sup = self.const_name()
        members = self.members(name, "end")
        end = self.expect_kw("end")
        return A.ClassDecl(name, sup, members, start.span.to(end.span))

    def module_decl(self) -> A.ModuleDecl:
        start = self.expect_kw("module")
        name = self.const_name()
        members = self.members(name, "end")
        end = self.expect_kw("end")
        return A.ModuleDecl(name, members, start.span.to(end.span))

    def const_name(self) -> str:
        if self.tok.kind != "const":
            raise self.error("expected a class or module name")
        parts = [self.advance().text]
        while self.tok.is_op("::"):
            self.advance()
            if self.tok.kind != "const":
                raise self.error("expected a constant after '::'")
            parts.append(self.advance().text)
        return "::".join(parts)

    def members(self, owner: str, terminator: str) -> tuple:
        out: list = []
        pending_type = None  # unnamed `type` waiting for the next def
        named_types: list = []  # (name, singleton, sig, label, verify, span, explicit_label)
        self.skip_seps()
        while not self.tok.is_kw(terminator):
            t = self.tok
            if t.kind == "eof":
                raise self.error(f"missing 'end' for `{owner}'")
            if t.is_kw("def"):
                d = self.method_def(pending_type)
                pending_type = None
                out.append(d)
            elif pending_type is not None:
                raise ParseError("type annotation without a name must precede a def",
                                 pending_type[4])
            elif t.is_kw("include"):
                self.advance()
                name = self.const_name()
                out.append(A.Include(name, t.span))
            elif t.kind == "ident" and t.text == "attr_accessor":
                self.advance()
                names = self.symbol_list()
                out.append(A.AttrAccessor(tuple(names), t.span))
            elif t.kind == "ident" and t.text == "var_type":
                self.advance()
                out.extend(self.var_type(t))
            elif t.kind == "ident" and t.text == "belongs_to":
                self.advance()
                names = self.symbol_list()
                out.append(A.Generator("belongs_to", tuple(names), t.span))
            elif t.kind == "ident" and t.text == "type":
                self.advance()
                name, singleton, sig, label, verify, explicit = self.type_directive()
                if name is None:
                    pending_type = (sig, label, verify, explicit, t.span)
                else:
                    named_types.append((name, singleton, sig, label, verify, t.span, explicit))
            else:
                raise self.error(f"unexpected token in body of `{owner}'")
            if not (self.tok.is_kw(terminator) or self.at_sep()):
                raise self.error("expected end of line")
            self.skip_seps()
        if pending_type is not None:
            raise ParseError("type annotation without a name must precede a def", pending_type[4])
        return self._attach_named_types(owner, out, named_types)

    def _attach_named_types(self, owner: str, members: list, named_types: list) -> tuple:
        defs = {}
        for idx, m in enumerate(members):
            if isinstance(m, A.MethodDef):
                key = (m.name, m.singleton)
                if key in defs:
                    raise DuplicateDefinition(
                        f"method `{owner}#{m.name}' defined twice", m.span)
                defs[key] = idx
        seen = set()
        for name, singleton, sig, label, verify, span, explicit in named_types:
            key = (name, singleton)
            if key in seen:
                raise DuplicateDefinition(f"duplicate type annotation for `{owner}#{name}'", span)
            seen.add(key)
            if key in defs:
                d = members[defs[key]]
                if d.signature is not None:
                    raise DuplicateDefinition(
                        f"duplicate type annotation for `{owner}#{name}'", span)
                _check_binders(d.params, sig, span)
                members[defs[key]] = A.MethodDef(d.name, d.singleton, d.params, sig, label,
                                                 d.body, verify, d.span)
            else:
                if not explicit:
                    raise LabelError(
                        f"annotation for `{owner}#{name}' has no body and needs a label "
                        "(:pure or modifies:)", span)
                if label.kind == "exact":
                    raise LabelError(
                        f"annotation for `{owner}#{name}' has no body and cannot be exact", span)
                members.append(A.MethodAnnot(owner, name, singleton, sig, label, verify, span))
        return tuple(members)

    def symbol_list(self) -> list[str]:
        names = []
        while True:
            if self.tok.kind != "symbol":
                raise self.error("expected a symbol")
            names.append(self.advance().text)
            if not self.tok.is_op(","):
                return names
            self.advance()
            self.skip_newlines()

    def var_type(self, start: Token) -> list:
        fields = []
        while self.tok.kind == "symbol":
            sym = self.advance()
            if not sym.text.startswith("@"):
                raise ParseError("var_type expects instance variable symbols like :@count",
                                 sym.span)
            fields.append(sym.text[1:])
            self.expect_op(",")
            self.skip_newlines()
        if not fields:
            raise self.error("expected :@field")
        if self.tok.kind != "string":
            raise self.error("expected a type string")
        s = self.advance()
        sub = SignatureParser.for_token(self.text, s, self.lexer)
        base = sub.base_type()
        sub.expect_eof()
        return [A.VarType(f, base, start.span) for f in fields]

    def type_directive(self):
        name = None
        singleton = False
        if self.tok.kind == "symbol":
            name = self.advance().text
            self.expect_op(",")
            self.skip_newlines()
        if self.tok.kind != "string":
            raise self.error("expected a signature string")
        s = self.advance()
        if name is None and not s.text.lstrip().startswith("("):
            # `type 'folder=', '(...) -> ...'`
            name = s.text.strip()
            self.expect_op(",")
            self.skip_newlines()
            if self.tok.kind != "string":
                raise self.error("expected a signature string")
            s = self.advance()
        if name is not None and name.startswith("self."):
            singleton, name = True, name[5:]
        sig = SignatureParser.for_token(self.text, s, self.lexer).signature()
        label = A.EXACT
        explicit = False
        verify = None
        while self.tok.is_op(","):
            self.advance()
            self.skip_newlines()
            t = self.tok
            if t.kind == "symbol" and t.text in ("pure", "exact"):
                self.advance()
                label = A.PURE if t.text == "pure" else A.EXACT
                explicit = True
            elif t.kind == "ident" and t.text in ("modifies", "verify") and self.peek().is_op(":"):
                self.advance()
                self.advance()
                if t.text == "verify":
                    if self.tok.kind != "symbol":
                        raise self.error("expected a verification label symbol")
                    verify = self.advance().text
                else:
                    label = A.Label("modifies", tuple(self.modifies_list(sig)))
                    explicit = True
            else:
                raise self.error("expected :pure, :exact, modifies: or verify:")
        return name, singleton, sig, label, verify, explicit

    def modifies_list(self, sig: A.MethodSignature) -> list:
        self.expect_op("{")
        entries = []
        allowed = {"self"} | set(sig.param_names)
        while not self.tok.is_op("}"):
            t = self.tok
            if t.kind == "ident" or t.is_kw("self"):
                target = self.advance().text
            else:
                raise self.error("expected a parameter name or self")
            if target not in allowed:
                raise LabelError(f"modifies entry `{target}' is neither self nor a parameter",
                                 t.span)
            self.expect_op(":")
            if self.tok.kind != "ivar":
                raise self.error("expected an instance variable like @min")
            entries.append((target, self.advance().text))
            if self.tok.is_op(","):
                self.advance()
        self.expect_op("}")
        return entries

    # -- methods -----------------------------------------------------------

    def method_def(self, pending) -> A.MethodDef:
        start = self.expect_kw("def")
        singleton = False
        if self.tok.is_kw("self") and self.peek().is_op("."):
            self.advance()
            self.advance()
            singleton = True
        name = self.method_name()
        params: list[str] = []
        if self.tok.is_op("("):
            self.advance()
            while not self.tok.is_op(")"):
                if self.tok.kind != "ident":
                    raise self.error("expected a parameter name")
                params.append(self.advance().text)
                if self.tok.is_op(","):
                    self.advance()
                elif not self.tok.is_op(")"):
                    raise self.error("expected ',' or ')'")
            self.advance()
        elif self.tok.kind == "ident" and self._bare_param_line():
            while True:
                params.append(self.advance().text)
                if not self.tok.is_op(","):
                    break
                self.advance()
        if len(set(params)) != len(params):
            raise ParseError(f"duplicate parameter name in `{name}'", start.span)
        self.locals.append(set(params))
        body = self.stmts(("end",))
        self.locals.pop()
        end = self.expect_kw("end")
        sig, label, verify = None, A.EXACT, None
        if pending is not None:
            sig, label, verify, _explicit, tspan = pending
            _check_binders(tuple(params), sig, tspan)
        return A.MethodDef(name, singleton, tuple(params), sig, label, body, verify,
                           start.span.to(end.span))

    def _bare_param_line(self) -> bool:
        j = self.i
        while True:
            if self.toks[j].kind != "ident":
                return False
            j += 1
            t = self.toks[j]
            if t.kind in ("newline", "eof") or t.is_op(";"):
                return True
            if not t.is_op(","):
                return False
            j += 1

    def method_name(self) -> str:
        t = self.tok
        if t.kind in ("ident", "const"):
            self.advance()
            nxt = self.tok
            if nxt.is_op("=") and not nxt.spaced and self.peek().is_op("("):
                self.advance()
                return t.text + "="
            return t.text
        if t.kind == "kw" and t.text not in ("end",):
            self.advance()
            return t.text
        if t.is_op("["):
            self.advance()
            self.expect_op("]")
            if self.tok.is_op("=") and not self.tok.spaced:
                self.advance()
                return "[]="
            return "[]"
        if t.is_op("-", "+") and self.peek().kind == "ivar":
            raise self.error("unsupported method name")
        if t.kind == "op" and t.text in ("<<", "==", "!=", "<=", ">=", "<", ">", "+", "-",
                                         "*", "/", "%", "!"):
            self.advance()
            return t.text
        raise self.error("expected a method name")

    # -- statements --------------------------------------------------------

    def stmts(self, terminators=STMT_END, closer: Optional[str] = None) -> A.Expr:
        items = []
        self.skip_seps()
        while not self._at_terminator(terminators, closer):
            items.append(self.stmt())
            if self._at_terminator(terminators, closer):
                break
            if not self.at_sep():
                raise self.error("expected end of statement")
            self.skip_seps()
        if not items:
            return A.NIL
        out = items[-1]
        for e in reversed(items[:-1]):
            out = A.Seq(e, out, e.span)
        return out

    def _at_terminator(self, terminators, closer) -> bool:
        t = self.tok
        if t.kind == "eof":
            return True
        if closer is not None and t.is_op(closer):
            return True
        return t.kind == "kw" and t.text in terminators

    def stmt(self) -> A.Expr:
        t = self.tok
        if t.is_kw("return"):
            self.advance()
            if self.at_sep() or self.tok.is_kw(*STMT_END, "if", "unless") or self.tok.is_op(")"):
                e = A.Return(A.NIL, t.span)
            else:
                e = A.Return(self.expr_stmt(), t.span)
        elif t.is_kw("raise"):
            self.advance()
            if self.tok.kind == "string":
                e = A.Raise(self.advance().text, t.span)
            else:
                e = A.Raise("unhandled exception", t.span)
        else:
            e = self.expr_stmt()
        while self.tok.is_kw("if", "unless"):
            kw = self.advance()
            c = self.expr()
            if kw.text == "if":
                e = A.If(c, e, A.NIL, e.span)
            else:
                e = A.If(c, A.NIL, e, e.span)
        return e

    def expr_stmt(self) -> A.Expr:
        lhs = self.expr()
        t = self.tok
        if t.is_op("="):
            self.advance()
            self.skip_newlines()
            return self._assign(lhs, None, t)
        if t.kind == "op" and t.text in COMPOUND:
            self.advance()
            self.skip_newlines()
            return self._assign(lhs, COMPOUND[t.text], t)
        return lhs

    def _assign(self, lhs: A.Expr, op: Optional[str], t: Token) -> A.Expr:
        bare_call = isinstance(lhs, A.Call) and id(lhs) in self._bare
        if isinstance(lhs, A.Var) or bare_call:
            name = lhs.name if isinstance(lhs, A.Var) else lhs.method
            if op is not None and not self.is_local(name):
                raise ParseError(f"undefined local variable `{name}'", lhs.span)
            self.locals[-1].add(name)
            rhs = self.expr_stmt()
            if op is not None:
                rhs = A.Call(A.Var(name, lhs.span), op, (rhs,), t.span)
            return A.Assign(name, rhs, lhs.span)
        rhs = self.expr_stmt()
        if isinstance(lhs, A.FieldRead):
            if op is not None:
                rhs = A.Call(A.FieldRead(lhs.field, lhs.span), op, (rhs,), t.span)
            return A.FieldAssign(lhs.field, rhs, lhs.span)
        if isinstance(lhs, A.Call) and lhs.method == "[]" and len(lhs.args) == 1:
            if op is not None:
                rhs = A.Call(lhs, op, (rhs,), t.span)
            return A.Call(lhs.receiver, "[]=", (lhs.args[0], rhs), lhs.span)
        if (isinstance(lhs, A.Call) and not lhs.args and lhs.method[-1] not in "=?!"
                and (lhs.method[0].isalpha() or lhs.method[0] == "_")):
            if op is not None:
                rhs = A.Call(lhs, op, (rhs,), t.span)
            return A.Call(lhs.receiver, lhs.method + "=", (rhs,), lhs.span)
        raise ParseError("invalid assignment target", t.span)

    # -- expressions -------------------------------------------------------

    def expr(self) -> A.Expr:
        return self.or_expr()

    def or_expr(self) -> A.Expr:
        left = self.and_expr()
        while self.tok.is_op("||") or self.tok.is_kw("or"):
            self.advance()
            self.skip_newlines()
            right = self.and_expr()
            left = A.If(left, A.TRUE, right, left.span)
        return left

    def and_expr(self) -> A.Expr:
        left = self.not_expr()
        while self.tok.is_op("&&") or self.tok.is_kw("and"):
            self.advance()
            self.skip_newlines()
            right = self.not_expr()
            left = A.If(left, right, A.FALSE, left.span)
        return left

    def not_expr(self) -> A.Expr:
        if self.tok.is_kw("not"):
            t = self.advance()
            return A.Call(self.not_expr(), "!", (), t.span)
        return self.eq_expr()

    def eq_expr(self) -> A.Expr:
        left = self.cmp_expr()
        if self.tok.is_op("==", "!="):
            op = self.advance()
            self.skip_newlines()
            right = self.cmp_expr()
            left = A.Call(left, op.text, (right,), op.span)
        return left

    def cmp_expr(self) -> A.Expr:
        first = self.shift_expr()
        links = []
        prev = first
        while self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.advance()
            self.skip_newlines()
            nxt = self.shift_expr()
            links.append(A.Call(prev, op.text, (nxt,), op.span))
            prev = nxt
        if not links:
            return first
        out = links[0]
        for link in links[1:]:
            out = A.If(out, link, A.FALSE, out.span)
        return out

    def shift_expr(self) -> A.Expr:
        left = self.add_expr()
        while self.tok.is_op("<<"):
            op = self.advance()
            self.skip_newlines()
            right = self.add_expr()
            left = A.Call(left, "<<", (right,), op.span)
        return left

    def add_expr(self) -> A.Expr:
        left = self.mul_expr()
        while self.tok.is_op("+", "-"):
            op = self.advance()
            self.skip_newlines()
            right = self.mul_expr()
            left = A.Call(left, op.text, (right,), op.span)
        return left

    def mul_expr(self) -> A.Expr:
        left = self.unary()
        while self.tok.is_op("*", "/", "%"):
            op = self.advance()
            self.skip_newlines()
            right = self.unary()
            left = A.Call(left, op.text, (right,), op.span)
        return left

    def unary(self) -> A.Expr:
        t = self.tok
        if t.is_op("-"):
            self.advance()
            nxt = self.tok
            if nxt.kind in ("int", "float") and not nxt.spaced:
                self.advance()
                lit = self.number(nxt, negate=True)
                return self.postfix(lit)
            return A.Call(self.unary(), "-@", (), t.span)
        if t.is_op("!"):
            self.advance()
            return A.Call(self.unary(), "!", (), t.span)
        return self.postfix(self.primary())

    def number(self, t: Token, negate: bool = False) -> A.Const:
        if t.kind == "int":
            v = int(t.text)
            return A.Const("int", -v if negate else v, t.span)
        v = Decimal(t.text)
        return A.Const("float", -v if negate else v, t.span)

    def postfix(self, e: A.Expr) -> A.Expr:
        while True:
            t = self.tok
            if t.is_op("."):
                self.advance()
                self.skip_newlines()
                name_tok = self.tok
                if name_tok.kind in ("ident", "const") or (
                        name_tok.kind == "kw" and name_tok.text not in ("end",)):
                    self.advance()
                    name = name_tok.text
                else:
                    raise self.error("expected a method name after '.'")
                args: tuple = ()
                if self.tok.is_op("("):
                    args = self.call_args()
                e = A.Call(e, name, args, name_tok.span)
            elif t.is_op("[") and not t.spaced:
                self.advance()
                idx = self.expr()
                self.expect_op("]")
                e = A.Call(e, "[]", (idx,), t.span)
            else:
                return e

    def call_args(self) -> tuple:
        self.expect_op("(")
        args = []
        while not self.tok.is_op(")"):
            args.append(self.expr_stmt())
            if self.tok.is_op(","):
                self.advance()
            elif not self.tok.is_op(")"):
                raise self.error("expected ',' or ')' in argument list")
        self.advance()
        return tuple(args)

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind in ("int", "float"):
            self.advance()
            return self.number(t)
        if t.kind == "ivar":
            self.advance()
            return A.FieldRead(t.text, t.span)
        if t.kind == "kw":
            if t.text == "self":
                self.advance()
                return A.Self(t.span)
            if t.text == "nil":
                self.advance()
                return A.Const("nil", None, t.span)
            if t.text in ("true", "false"):
                self.advance()
                return A.Const(t.text, t.text == "true", t.span)
            if t.text == "if":
                return self.if_expr()
            if t.text == "unless":
                return self.unless_expr()
            if t.text in ("return", "raise"):
                return self.stmt()
        if t.kind == "ident":
            self.advance()
            if self.is_local(t.text) and not (self.tok.is_op("(") and not self.tok.spaced):
                return A.Var(t.text, t.span)
            if self.tok.is_op("(") and not self.tok.spaced:
                return A.Call(A.Self(t.span), t.text, self.call_args(), t.span)
            call = A.Call(A.Self(t.span), t.text, (), t.span)
            self._bare.add(id(call))
            return call
        if t.kind == "const":
            name = self.const_name()
            if self.tok.is_op(".") and self.peek().kind == "ident" and self.peek().text == "new":
                self.advance()
                self.advance()
                if self.tok.is_op("(") and not self.tok.spaced:
                    if self.call_args():
                        raise ParseError("constructor arguments are not supported", t.span)
                return A.New(name, t.span)
            raise ParseError(f"constant reference `{name}' is only supported as `{name}.new'",
                             t.span)
        if t.is_op("("):
            self.advance()
            e = self.stmts((), closer=")")
            self.expect_op(")")
            return e
        if t.is_op("["):
            self.advance()
            elems = []
            while not self.tok.is_op("]"):
                elems.append(self.expr())
                if self.tok.is_op(","):
                    self.advance()
                elif not self.tok.is_op("]"):
                    raise self.error("expected ',' or ']'")
            self.advance()
            return A.ArrayLit(tuple(elems), t.span)
        raise self.error("expected an expression")

    def if_expr(self) -> A.Expr:
        start = self.expect_kw("if")
        return self._if_rest(start)

    def _if_rest(self, start: Token) -> A.Expr:
        cond = self.expr()
        if self.tok.is_kw("then"):
            self.advance()
        then = self.stmts()
        if self.tok.is_kw("elsif"):
            t = self.advance()
            else_ = self._if_rest(t)
            return A.If(cond, then, else_, start.span)
        else_ = A.NIL
        if self.tok.is_kw("else"):
            self.advance()
            else_ = self.stmts()
        self.expect_kw("end")
        return A.If(cond, then, else_, start.span)

    def unless_expr(self) -> A.Expr:
        start = self.expect_kw("unless")
        cond = self.expr()
        if self.tok.is_kw("then"):
            self.advance()
        body = self.stmts()
        else_ = A.NIL
        if self.tok.is_kw("else"):
            self.advance()
            else_ = self.stmts()
        self.expect_kw("end")
        return A.If(cond, else_, body, start.span)


class SignatureParser(Parser):
    """Parses the contents of an annotation string in place."""

    @classmethod
    def for_token(cls, text: str, tok: Token, lexer: Optional[Lexer] = None) -> "SignatureParser":
        a, b = tok.content  # type: ignore[attr-defined]
        lx = Lexer(text, a, b, newlines=False)
        return cls(text, lx.tokens(), lx)

    @classmethod
    def for_text(cls, sig: str) -> "SignatureParser":
        lx = Lexer(sig, newlines=False)
        return cls(sig, lx.tokens(), lx)

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing text in annotation")

    def base_type(self) -> A.BaseTypeName:
        first = self.simple_type()
        members = [first]
        while self.tok.is_kw("or"):
            self.advance()
            members.append(self.simple_type())
        if len(members) == 1:
            return first
        return A.UnionTypeName(tuple(members), first.span)

    def simple_type(self) -> A.TypeName:
        t = self.tok
        if t.is_kw("nil"):
            self.advance()
            return A.TypeName("nil", None, t.span)
        if t.kind == "ident" and t.text in ("bool", "boolean"):
            self.advance()
            return A.TypeName("Bool", None, t.span)
        if t.kind == "const":
            name = self.const_name()
            if name == "Boolean":
                name = "Bool"
            elem = None
            if self.tok.is_op("<"):
                self.advance()
                elem = self.simple_type()
                self.expect_op(">")
            return A.TypeName(name, elem, t.span)
        raise self.error("expected a type name")

    def _scan_binders(self) -> set[str]:
        """Names bound by the signature, found before parsing predicates."""
        binders = set()
        depth = 0
        prev: Optional[Token] = None
        for t in self.toks:
            if t.is_op("{"):
                depth += 1
            elif t.is_op("}"):
                depth -= 1
            elif depth == 0 and t.kind == "ident" and prev is not None and (
                    prev.kind == "const" or prev.is_op(">") or prev.is_kw("nil")
                    or (prev.kind == "ident" and prev.text in ("bool", "boolean"))):
                binders.add(t.text)
            if depth == 0:
                prev = t
        return binders

    def signature(self) -> A.MethodSignature:
        binders = self._scan_binders()
        self.locals = [set(binders)]
        start = self.expect_op("(")
        params = []
        while not self.tok.is_op(")"):
            params.append(self.refined_type())
            if self.tok.is_op(","):
                self.advance()
            elif not self.tok.is_op(")"):
                raise self.error("expected ',' or ')' in parameter list")
        self.advance()
        self.expect_op("->")
        result = self.refined_type()
        self.expect_eof()
        names = [p.binder for p in params]
        if any(n is None for n in names):
            missing = next(p for p in params if p.binder is None)
            raise ParseError("parameter needs a binder name", missing.span)
        if len(set(names)) != len(names):
            raise ParseError("parameter binders must be distinct", start.span)
        if result.binder is not None and result.binder in names:
            raise ParseError("result binder shadows a parameter", result.span)
        return A.MethodSignature(tuple(params), result, start.span)

    def refined_type(self) -> A.RefinedType:
        start = self.tok
        base = self.base_type()
        binder = None
        if self.tok.kind == "ident":
            binder = self.advance().text
        pred: A.Expr = A.TRUE
        if self.tok.is_op("{"):
            brace = self.advance()
            if self.tok.is_op("}"):
                raise self.error("empty refinement")
            try:
                pred = self.expr()
            except ParseError as exc:
                if self.tok.kind == "eof":
                    raise ParseError("unclosed '{' in refinement", brace.span) from exc
                raise
            if not self.tok.is_op("}"):
                if self.tok.kind == "eof":
                    raise ParseError("unclosed '{' in refinement", brace.span)
                raise self.error("expected '}' to close refinement")
            self.advance()
            check_predicate_syntax(pred)
        return A.RefinedType(binder, base, pred, start.span)


def _check_binders(params: tuple, sig: A.MethodSignature, span: Span) -> None:
    names = tuple(sig.param_names)
    if len(names) != len(params):
        raise ParseError(
            f"signature has {len(names)} parameters but the definition has {len(params)}", span)
    for p, n in zip(params, names):
        if p != n:
            raise ParseError(f"signature binder `{n}' does not match parameter `{p}'", span)


def check_predicate_syntax(pred: A.Expr) -> None:
    """Rejects the constructs that can never appear in a pure refinement."""
    for node in A.walk(pred):
        if isinstance(node, (A.Assign, A.FieldAssign, A.New, A.Raise, A.Return)):
            kind = type(node).__name__
            raise PurityError(f"refinement is not pure: contains {kind}", node.span)
        if isinstance(node, A.Call) and (node.method.endswith("=") and node.method not in
                                         ("==", "!=", "<=", ">=")):
            raise PurityError(f"refinement calls mutator `{node.method}'", node.span)


def parse_program(source: str) -> A.Program:
    lexer = Lexer(source)
    return Parser(source, lexer.tokens(), lexer).program()


def parse_signature(sig: str, has_body: bool = True):
    """Parses ``'(T x {p}, ...) -> T r {q}'`` plus optional trailing labels.

    Returns ``(MethodSignature, Label)``.  Trailing labels use the same
    syntax as in a ``type`` directive, e.g. ``..., :pure``.
    """
    lexer = Lexer(sig, newlines=False)
    toks = lexer.tokens()
    # split off trailing options at top-level commas after the signature
    depth = 0
    cut = len(toks) - 1
    for k, t in enumerate(toks):
        if t.is_op("(", "{", "["):
            depth += 1
        elif t.is_op(")", "}", "]"):
            depth -= 1
        elif depth == 0 and t.is_op(",") and k > 0:
            cut = k
            break
    sig_toks = toks[:cut] + [Token("eof", "", toks[cut].span)]
    p = SignatureParser(sig, sig_toks, lexer)
    signature = p.signature()
    label = A.EXACT
    explicit = False
    if cut < len(toks) - 1:
        q = Parser(sig, toks[cut:], lexer)
        while q.tok.is_op(","):
            q.advance()
            t = q.tok
            if t.kind == "symbol" and t.text in ("pure", "exact"):
                q.advance()
                label = A.PURE if t.text == "pure" else A.EXACT
                explicit = True
            elif t.kind == "ident" and t.text == "modifies" and q.peek().is_op(":"):
                q.advance()
                q.advance()
                label = A.Label("modifies", tuple(q.modifies_list(signature)))
                explicit = True
            else:
                raise q.error("expected :pure, :exact or modifies:")
        if q.tok.kind != "eof":
            raise q.error("unexpected trailing text")
    if not has_body:
        if not explicit:
            raise LabelError("an annotation without a body needs a :pure or modifies: label")
        if label.kind == "exact":
            raise LabelError("an annotation without a body cannot be labeled exact")
    return signature, label
