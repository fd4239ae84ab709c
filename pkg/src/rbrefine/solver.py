"""SMT-LIB emission, the external solver process, and model decoding."""

from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from rbrefine import smt as S
from rbrefine.errors import SolverError
from rbrefine.vcgen import Goal, Layout, QueryEncoding

# --------------------------------------------------------------------------
# Emission
# --------------------------------------------------------------------------


def _goal_name(i: int) -> str:
    return f"$goal{i}"


def emit_smtlib(enc: QueryEncoding, exclude_bound: bool = False,
                header: str = "") -> tuple[str, list[Goal]]:
    """Serializes the encoding; returns the text and the goals it contains, in order.

    The output is a pure function of the encoding: subterms are named in
    first-visit order and nothing depends on object identity.
    """
    goals = [g for g in enc.goals if not (exclude_bound and g.kind == "bound")]
    roots = list(enc.background) + [g.term for g in goals]
    order = S.iter_dag(roots)
    refs: dict = {}
    for t in order:
        for a in t.args:
            refs[id(a)] = refs.get(id(a), 0) + 1
    names: dict = {}
    defs = []
    for t in order:
        if t.args and refs.get(id(t), 0) > 1:
            name = f"$s{len(names)}"
            defs.append(f"(define-fun {name} () {t.sort} {S.to_smt(t, names)})")
            names[id(t)] = name
    consts, funs = S.free_symbols(roots)
    lines = []
    if header:
        lines.extend("; " + h for h in header.splitlines())
    lines.append("(set-option :produce-models true)")
    lines.append(f"(set-logic {S.choose_logic(roots) if roots else 'QF_UF'})")
    for name, sort in consts.items():
        lines.append(f"(declare-fun {S.sanitize(name)} () {sort})")
    for name, (args, sort) in funs.items():
        lines.append(f"(declare-fun {S.sanitize(name)} ({' '.join(args)}) {sort})")
    lines.extend(defs)
    for b in enc.background:
        lines.append(f"(assert {S.to_smt(b, names)})")
    for i, g in enumerate(goals):
        lines.append(f"; goal {i}: {g.trigger}")
        lines.append(f"(declare-fun {_goal_name(i)} () Bool)")
        lines.append(f"(assert (= {_goal_name(i)} {S.to_smt(g.term, names)}))")
    if goals:
        lines.append("(assert (or " + " ".join(_goal_name(i) for i in range(len(goals))) +
                     (" false" if len(goals) == 1 else "") + "))")
    else:
        lines.append("(assert false)")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n", goals


# --------------------------------------------------------------------------
# S-expressions
# --------------------------------------------------------------------------


def parse_sexprs(text: str) -> list:
    """Symbols become str (bars stripped), numerals int, decimals Fraction."""
    out: list = []
    stack: list = [out]
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            stack.append([])
            i += 1
        elif c == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced ')' in solver output")
            done = stack.pop()
            stack[-1].append(done)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            stack[-1].append(Sym(text[i + 1:j]))
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n and not (text[j] == '"' and (j + 1 >= n or text[j + 1] != '"')):
                j += 2 if text[j] == '"' else 1
            stack[-1].append(text[i + 1:j].replace('""', '"'))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()|;":
                j += 1
            stack[-1].append(_atom(text[i:j]))
            i = j
    if len(stack) != 1:
        raise SolverError("unbalanced '(' in solver output")
    return out


class Sym(str):
    """A symbol, as opposed to a string literal."""


def _atom(tok: str):
    if tok.isdigit():
        return int(tok)
    if tok.replace(".", "", 1).isdigit() and tok.count(".") == 1:
        return Fraction(tok)
    if tok.startswith("#b"):
        return BV(int(tok[2:], 2), len(tok) - 2)
    if tok.startswith("#x"):
        return BV(int(tok[2:], 16), 4 * (len(tok) - 2))
    return Sym(tok)


@dataclass(frozen=True)
class BV:
    value: int  # unsigned
    width: int

    def signed(self) -> int:
        return self.value - (1 << self.width) if self.value >> (self.width - 1) else self.value


# --------------------------------------------------------------------------
# Models
# --------------------------------------------------------------------------


@dataclass
class ModelFun:
    params: list  # of (name, sort)
    sort: object
    body: object


@dataclass
class Model:
    funs: dict = field(default_factory=dict)  # name -> ModelFun

    def value(self, name: str, default=None):
        f = self.funs.get(name)
        if f is None or f.params:
            return default
        return self.eval(f.body, {})

    def apply(self, name: str, args: list):
        f = self.funs.get(name)
        if f is None:
            return None
        env = {p: a for (p, _s), a in zip(f.params, args)}
        return self.eval(f.body, env)

    def eval(self, e, env: dict):
        if isinstance(e, (int, Fraction, BV)):
            return e
        if isinstance(e, Sym):
            if e in env:
                return env[e]
            if e == "true":
                return True
            if e == "false":
                return False
            if e in self.funs:
                return self.apply(e, [])
            raise SolverError(f"unknown symbol in model: {e}")
        if not isinstance(e, list) or not e:
            raise SolverError(f"cannot evaluate model term {e!r}")
        head, *args = e
        if head == "_" and isinstance(args[0], Sym) and args[0].startswith("bv"):
            return BV(int(args[0][2:]), args[1])
        if head == "let":
            inner = dict(env)
            for name, x in args[0]:
                inner[name] = self.eval(x, env)
            return self.eval(args[1], inner)
        if head == "ite":
            return self.eval(args[1] if self.eval(args[0], env) else args[2], env)
        if head == "as" or head == "!":
            return self.eval(args[0], env)
        vals = [self.eval(a, env) for a in args]
        return _apply_op(head, vals, self, env)


def _num(v):
    return v.signed() if isinstance(v, BV) else v


def _apply_op(op, vals, model: Model, env):
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - sum(vals[1:])
    if op == "+":
        return sum(vals)
    if op == "*":
        out = 1
        for v in vals:
            out *= v
        return out
    if op == "/":
        return Fraction(vals[0]) / Fraction(vals[1])
    if op == "div":
        a, b = vals
        return a // b if b > 0 else -((-a) // (-b)) if b < 0 else 0
    if op == "mod":
        a, b = vals
        return a % abs(b) if b else a
    if op == "to_real":
        return Fraction(vals[0])
    if op == "to_int":
        return vals[0].numerator // vals[0].denominator
    if op == "=":
        return all(_same(vals[0], v) for v in vals[1:])
    if op == "distinct":
        return len({repr(v) for v in vals}) == len(vals)
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    if op == "not":
        return not vals[0]
    if op == "=>":
        return (not vals[0]) or vals[1]
    cmp = {"<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
           ">=": lambda a, b: a >= b}
    if op in cmp:
        return cmp[op](vals[0], vals[1])
    bvcmp = {"bvslt": "<", "bvsle": "<=", "bvsgt": ">", "bvsge": ">="}
    if op in bvcmp:
        return cmp[bvcmp[op]](_num(vals[0]), _num(vals[1]))
    if isinstance(op, Sym) and op in model.funs:
        return model.apply(op, vals)
    raise SolverError(f"unsupported operator in model: {op}")


def _same(a, b) -> bool:
    if isinstance(a, BV) or isinstance(b, BV):
        return _num(a) == _num(b)
    return a == b


def parse_model(text: str) -> Model:
    model = Model()
    items = parse_sexprs(text)
    for block in items:
        if not isinstance(block, list):
            continue
        defs = block[1:] if block and block[0] == "model" else block
        for d in defs:
            if isinstance(d, list) and d and d[0] == "define-fun":
                _tag, name, params, sort, body = d[:5]
                model.funs[str(name)] = ModelFun([(str(p[0]), p[1]) for p in params], sort, body)
    return model


# --------------------------------------------------------------------------
# Running the solver
# --------------------------------------------------------------------------


@dataclass
class SolverVerdict:
    kind: str  # unsat | sat | unknown | timeout | solverError
    model: Optional[Model] = None
    raw: str = ""
    detail: str = ""


def run_solver(text: str, timeout: float = 60.0, path: str = "z3") -> SolverVerdict:
    """Runs ``path -in -smt2`` on ``text``."""
    try:
        proc = subprocess.run([path, "-in", "-smt2"], input=text, capture_output=True,
                              text=True, timeout=timeout)
    except FileNotFoundError:
        return SolverVerdict("solverError", detail=f"solver executable not found: {path}")
    except PermissionError:
        return SolverVerdict("solverError", detail=f"solver executable not runnable: {path}")
    except subprocess.TimeoutExpired:
        return SolverVerdict("timeout", detail=f"no answer within {timeout:g} s")
    out = proc.stdout
    first, _, rest = out.lstrip().partition("\n")
    first = first.strip()
    if first == "unsat":
        return SolverVerdict("unsat", raw=out)
    if first == "sat":
        try:
            model = parse_model(rest)
        except (SolverError, ValueError, IndexError) as exc:
            return SolverVerdict("solverError", raw=out, detail=f"unparsable model: {exc}")
        return SolverVerdict("sat", model, raw=out)
    if first in ("unknown", "timeout"):
        return SolverVerdict("unknown", raw=out, detail=first)
    detail = (out + proc.stderr).strip() or f"exit status {proc.returncode}"
    return SolverVerdict("solverError", raw=out, detail=detail)


# --------------------------------------------------------------------------
# Counterexamples
# --------------------------------------------------------------------------


@dataclass
class Counterexample:
    bindings: dict  # shown: real_<name> -> concrete value
    trigger: str
    all_bindings: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # input name -> concrete value for replay
    model: Optional[Model] = None
    replayed: Optional[bool] = None
    replay_note: str = ""

    def describe(self) -> str:
        parts = [f"{k} = {format_value(v)}" for k, v in self.bindings.items()]
        return ", ".join(parts)


def format_value(v) -> str:
    if v is None:
        return "nil"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return f"{v.numerator}.0"
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def scalar_value(model: Model, name: str, kind: str, config):
    raw = model.value(name)
    if kind == "bool":
        return bool(raw) if raw is not None else False
    if kind == "real":
        return Fraction(_num(raw)) if raw is not None else Fraction(0)
    if raw is None:
        return 0
    if isinstance(raw, BV):
        return raw.signed()
    if config is not None and config.bitvector and isinstance(raw, int):
        w = config.bv_width
        raw %= 1 << w
        return raw - (1 << w) if raw >> (w - 1) else raw
    return int(raw)


def flatten_layout(lay: Layout, model: Model, config, display: str) -> list:
    """Leaf bindings as (display name, root, value) triples."""
    out = []
    if lay.kind == "scalar":
        out.append((display, scalar_value(model, lay.name, lay.scalar, config)))
    elif lay.kind == "obj":
        for f, sub in lay.fields:
            out.extend(flatten_layout(sub, model, config, _child(display, f"@{f}")))
    elif lay.kind == "arr":
        n = scalar_value(model, lay.length, "int", config)
        out.append((display + ".size", n))
        for k, sub in enumerate(lay.cells[:max(0, n)]):
            out.extend(flatten_layout(sub, model, config, f"{display}[{k}]"))
    elif lay.kind == "union":
        chosen = choose_union(lay, model)
        out.extend(flatten_layout(chosen, model, config, display))
    return out


def _child(display: str, f: str) -> str:
    return f if display == "" else f"{display}.{f}"


def choose_union(lay: Layout, model: Model) -> Layout:
    for sel, sub in lay.choices:
        if not sel or model.value(sel, False):
            return sub
    return lay.choices[-1][1]


def extract_counterexample(verdict: SolverVerdict, enc: QueryEncoding, goals: list,
                           relevant: Optional[set] = None) -> Counterexample:
    """Maps the model back to source names; ``relevant`` limits what is shown.

    ``relevant`` holds parameter names and ``@field`` names of ``self``.
    """
    model = verdict.model
    trigger = "postconditionViolated"
    for i, g in enumerate(goals):
        if model.value(_goal_name(i), False):
            trigger = g.trigger
            break
    all_b: dict = {}
    shown: dict = {}
    for name, lay in enc.inputs:
        display = "" if name == "self" else name
        for disp, val in flatten_layout(lay, model, enc.config, display):
            key = "real_" + disp
            all_b[key] = val
            root = disp.split(".")[0].split("[")[0]
            if relevant is None or root in relevant:
                shown[key] = val
    # parameters first, then fields of self
    ordered = dict(sorted(shown.items(), key=lambda kv: kv[0].startswith("real_@")))
    return Counterexample(ordered, trigger, all_b, model=model)


def goal_kinds(model: Model, goals: list) -> list[str]:
    return [g.kind for i, g in enumerate(goals) if model.value(_goal_name(i), False)]
