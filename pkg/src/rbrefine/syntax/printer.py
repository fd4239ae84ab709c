"""Pretty printer.  Output re-parses to a structurally equal AST."""

from __future__ import annotations

from rbrefine.syntax import ast as A

INDENT = "  "

_INFIX = {"+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "<<"}


def _is_ident(name: str) -> bool:
    core = name[:-1] if name[-1:] in "?!" else name
    return bool(core) and (core[0].isalpha() or core[0] == "_") and all(
        c.isalnum() or c == "_" for c in core)


def print_expr(e: A.Expr) -> str:
    """Single-line rendering, parenthesized wherever precedence could matter."""
    if isinstance(e, A.Const):
        if e.kind in ("nil", "true", "false"):
            return e.kind
        return str(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Self):
        return "self"
    if isinstance(e, A.FieldRead):
        return "@" + e.field
    if isinstance(e, A.Assign):
        return f"({e.name} = {print_expr(e.value)})"
    if isinstance(e, A.FieldAssign):
        return f"(@{e.field} = {print_expr(e.value)})"
    if isinstance(e, A.New):
        return f"{e.class_name}.new"
    if isinstance(e, A.Return):
        return f"(return {print_expr(e.value)})"
    if isinstance(e, A.Raise):
        return "(raise " + _quote(e.message) + ")"
    if isinstance(e, A.ArrayLit):
        return "[" + ", ".join(print_expr(x) for x in e.elems) + "]"
    if isinstance(e, A.Seq):
        return "(" + "; ".join(print_expr(x) for x in _flatten(e)) + ")"
    if isinstance(e, A.If):
        if e.else_ == A.FALSE and e.else_.kind == "false":
            return f"({print_expr(e.cond)} && {print_expr(e.then)})"
        if e.then == A.TRUE and e.then.kind == "true":
            return f"({print_expr(e.cond)} || {print_expr(e.else_)})"
        return (f"(if {print_expr(e.cond)} then {_inline_body(e.then)} "
                f"else {_inline_body(e.else_)} end)")
    if isinstance(e, A.Call):
        return _print_call(e)
    raise TypeError(f"not an expression: {e!r}")


def _inline_body(e: A.Expr) -> str:
    if isinstance(e, A.Seq):
        return "; ".join(print_expr(x) for x in _flatten(e))
    return print_expr(e)


def _print_call(e: A.Call) -> str:
    recv = print_expr(e.receiver)
    m, args = e.method, e.args
    if m in _INFIX and len(args) == 1:
        return f"({recv} {m} {print_expr(args[0])})"
    if m == "!" and not args:
        return f"(!{recv})"
    if m == "-@" and not args:
        return f"(-{recv})"
    if m == "[]" and len(args) == 1:
        return f"{_postfix_recv(e.receiver)}[{print_expr(args[0])}]"
    if m == "[]=" and len(args) == 2:
        return f"({_postfix_recv(e.receiver)}[{print_expr(args[0])}] = {print_expr(args[1])})"
    if m.endswith("=") and _is_ident(m[:-1]) and len(args) == 1:
        return f"({_postfix_recv(e.receiver)}.{m[:-1]} = {print_expr(args[0])})"
    if _is_ident(m):
        return f"{_postfix_recv(e.receiver)}.{m}(" + ", ".join(print_expr(a) for a in args) + ")"
    raise ValueError(f"cannot print call to method `{m}'")


def _postfix_recv(r: A.Expr) -> str:
    s = print_expr(r)
    if isinstance(r, A.Const) and r.kind in ("int", "float") and r.value < 0:
        return f"({s})"
    return s


def _flatten(e: A.Expr) -> list:
    # only the right spine; a Seq in first position stays parenthesized
    out = []
    while isinstance(e, A.Seq):
        out.append(e.first)
        e = e.second
    out.append(e)
    return out


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_type(t: A.BaseTypeName) -> str:
    return str(t)


def print_refined(rt: A.RefinedType) -> str:
    out = print_type(rt.base)
    if rt.binder is not None:
        out += " " + rt.binder
    if not (isinstance(rt.predicate, A.Const) and rt.predicate.kind == "true"):
        out += " { " + print_expr(rt.predicate) + " }"
    return out


def print_signature(sig: A.MethodSignature) -> str:
    params = ", ".join(print_refined(p) for p in sig.params)
    return f"({params}) -> {print_refined(sig.result)}"


def _type_line(name, singleton, sig, label, verify, with_label: bool) -> str:
    parts = []
    if name is not None:
        parts.append(":" + name if not singleton else _quote("self." + name))
    parts.append("'" + print_signature(sig) + "'")
    if with_label:
        if label.kind == "modifies":
            parts.append(str(label))
        else:
            parts.append(":" + label.kind)
    if verify is not None:
        parts.append("verify: :" + verify)
    return "type " + ", ".join(parts)


def _print_stmts(e: A.Expr, depth: int) -> list[str]:
    pad = INDENT * depth
    return [pad + print_expr(x) for x in _flatten(e)]


def _print_member(m, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(m, A.AttrAccessor):
        return [pad + "attr_accessor " + ", ".join(":" + f for f in m.fields)]
    if isinstance(m, A.VarType):
        return [pad + f"var_type :@{m.field}, '{print_type(m.base)}'"]
    if isinstance(m, A.Include):
        return [pad + "include " + m.module]
    if isinstance(m, A.Generator):
        return [pad + m.kind + " " + ", ".join(":" + a for a in m.args)]
    if isinstance(m, A.MethodAnnot):
        return [pad + _type_line(m.name, m.singleton, m.signature, m.label, m.verify, True)]
    if isinstance(m, A.MethodDef):
        lines = []
        if m.signature is not None:
            lines.append(pad + _type_line(None, False, m.signature, m.label, m.verify,
                                          m.label.kind != "exact"))
        name = ("self." if m.singleton else "") + m.name
        lines.append(pad + f"def {name}(" + ", ".join(m.params) + ")")
        lines.extend(_print_stmts(m.body, depth + 1))
        lines.append(pad + "end")
        return lines
    raise TypeError(f"not a member: {m!r}")


def pretty_print(p: A.Program) -> str:
    lines: list[str] = []
    for d in p.decls:
        if lines:
            lines.append("")
        if isinstance(d, A.ClassDecl):
            head = f"class {d.name}" + (f" < {d.superclass}" if d.superclass else "")
        else:
            head = f"module {d.name}"
        lines.append(head)
        for m in d.members:
            lines.extend(_print_member(m, 1))
        lines.append("end")
    return "\n".join(lines) + ("\n" if lines else "")
