"""Concrete big-step interpreter over the source AST.

Independent of the translation: dispatch is by runtime class, arithmetic is
Ruby's (floor division, sign-of-divisor modulo), and bitvector mode wraps
every integer result to the configured width.  Floats are exact rationals,
mirroring the solver's reals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from rbrefine.config import Config
from rbrefine.errors import OracleUnsupported
from rbrefine.syntax import ast as A
from rbrefine.typesys import ClassTable, MethodEntry, resolve_type_name

RECURSION_LIMIT = 200


@dataclass(eq=False)
class Obj:
    cls: str
    oid: int
    fields: dict = field(default_factory=dict)
    meta: bool = False  # the class object itself

    def __repr__(self) -> str:
        inner = ", ".join(f"@{k}={v!r}" for k, v in self.fields.items())
        return f"#<{self.cls}:{self.oid} {inner}>"


@dataclass(eq=False)
class Arr:
    items: list
    oid: int = 0

    def __repr__(self) -> str:
        return repr(self.items)


class RubyRaise(Exception):
    """An exception escaping the evaluated code.

    ``kind`` is ``raise`` (explicit or runtime error), ``callee`` (a callee's
    precondition failed) or ``bound`` (array capacity exceeded).
    """

    def __init__(self, message: str, kind: str = "raise", tag: str = ""):
        super().__init__(message)
        self.message = message
        self.kind = kind
        self.tag = tag


class _Return(Exception):
    def __init__(self, value):
        self.value = value


@dataclass
class ConcreteOutcome:
    kind: str  # normal | exception | assumptionUnmet
    value: object = None
    message: str = ""
    error_kind: str = ""  # raise | callee | bound
    tag: str = ""
    post_holds: Optional[bool] = None

    @property
    def violation(self) -> bool:
        return self.kind == "exception" or (self.kind == "normal" and self.post_holds is False)


def is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def truthy(v) -> bool:
    return v is not None and v is not False


def ruby_eq(a, b) -> bool:
    """Equality with separate numeric kinds: 3 == 3.0 is false here."""
    if a is None or b is None:
        return a is b
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if is_int(a) and is_int(b):
        return a == b
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    if isinstance(a, Obj) and isinstance(b, Obj):
        return a.oid == b.oid and a.cls == b.cls
    if isinstance(a, Arr) and isinstance(b, Arr):
        return len(a.items) == len(b.items) and all(
            ruby_eq(x, y) for x, y in zip(a.items, b.items))
    return False


class Interpreter:
    def __init__(self, table: ClassTable, config: Config = Config(), model=None):
        self.table = table
        self.config = config
        self.model = model  # solver model whose functions stand in for pure callees
        self._oids = 0
        self.depth = 0

    # -- numbers -----------------------------------------------------------

    def wrap(self, v):
        if is_int(v) and self.config.bitvector:
            w = self.config.bv_width
            v %= 1 << w
            return v - (1 << w) if v >> (w - 1) else v
        return v

    def arith(self, op: str, a, b, owner: str):
        if not (is_int(a) or isinstance(a, Fraction)) or not (
                is_int(b) or isinstance(b, Fraction)):
            raise RubyRaise(f"TypeError: {type(b).__name__} can't be coerced", "raise",
                            f"TypeError in `{op}'")
        if op in ("/", "%") and b == 0:
            raise RubyRaise("ZeroDivisionError: divided by 0", "callee", f"{owner}#{op}")
        both_int = is_int(a) and is_int(b)
        if not both_int:
            a, b = Fraction(a), Fraction(b)
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            r = a // b if both_int else a / b
        elif op == "%":
            r = a % b if both_int else a - b * Fraction(a / b).__floor__()
        elif op in ("<", "<=", ">", ">="):
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        else:
            raise RubyRaise(f"NoMethodError: undefined method `{op}'")
        return self.wrap(r) if both_int else r

    # -- evaluation --------------------------------------------------------

    def new_object(self, cls: str) -> Obj:
        self._oids += 1
        return Obj(cls, self._oids, {f: None for f in self.table.all_fields()})

    def eval(self, e: A.Expr, env: dict, self_v):
        if isinstance(e, A.Const):
            if e.kind == "nil":
                return None
            if e.kind in ("true", "false"):
                return e.kind == "true"
            if e.kind == "int":
                return self.wrap(e.value)
            return Fraction(e.value)
        if isinstance(e, A.Var):
            return env.get(e.name)
        if isinstance(e, A.Self):
            return self_v
        if isinstance(e, A.Assign):
            v = self.eval(e.value, env, self_v)
            env[e.name] = v
            return v
        if isinstance(e, A.If):
            c = self.eval(e.cond, env, self_v)
            return self.eval(e.then if truthy(c) else e.else_, env, self_v)
        if isinstance(e, A.Seq):
            self.eval(e.first, env, self_v)
            return self.eval(e.second, env, self_v)
        if isinstance(e, A.FieldRead):
            return self_v.fields.get(e.field)
        if isinstance(e, A.FieldAssign):
            v = self.eval(e.value, env, self_v)
            self_v.fields[e.field] = v
            return v
        if isinstance(e, A.New):
            return self.new_object(e.class_name)
        if isinstance(e, A.Return):
            raise _Return(self.eval(e.value, env, self_v))
        if isinstance(e, A.Raise):
            raise RubyRaise(e.message or "RuntimeError", "raise", e.message or "RuntimeError")
        if isinstance(e, A.ArrayLit):
            items = [self.eval(x, env, self_v) for x in e.elems]
            if len(items) > self.config.array_bound:
                raise RubyRaise("array capacity exceeded", "bound", "Array literal")
            self._oids += 1
            return Arr(items, 1000 + self._oids)
        if isinstance(e, A.Call):
            recv = self.eval(e.receiver, env, self_v)
            args = [self.eval(a, env, self_v) for a in e.args]
            return self.send(recv, e.method, args)
        raise OracleUnsupported(f"cannot interpret {type(e).__name__}")

    def send(self, recv, method: str, args: list):
        if isinstance(recv, Obj):
            entry = self.table.lookup(recv.cls, method, singleton=recv.meta)
            if entry is not None:
                return self.invoke(entry, recv, args)
            if method in ("==", "!="):
                r = ruby_eq(recv, args[0])
                return r if method == "==" else not r
            if method == "!":
                return False
            if method == "nil?":
                return False
            raise RubyRaise(f"NoMethodError: undefined method `{method}' for {recv.cls}",
                            "raise", "NoMethodError")
        return self.builtin(recv, method, args)

    def builtin(self, recv, method: str, args: list):
        if method == "==":
            return ruby_eq(recv, args[0])
        if method == "!=":
            return not ruby_eq(recv, args[0])
        if method == "!":
            return not truthy(recv)
        if method == "nil?":
            return recv is None
        if isinstance(recv, Arr):
            return self.array_op(recv, method, args)
        if is_int(recv) or isinstance(recv, Fraction):
            owner = "Integer" if is_int(recv) else "Float"
            if len(args) == 1 and method in ("+", "-", "*", "/", "%", "<", "<=", ">", ">="):
                return self.arith(method, recv, args[0], owner)
            if method == "-@":
                return self.wrap(-recv)
            if method == "abs":
                return self.wrap(abs(recv))
            if method == "to_f":
                return Fraction(recv)
            if method == "to_i":
                return recv if is_int(recv) else self.wrap(recv.__floor__())
            if method == "zero?":
                return recv == 0
            if method == "positive?":
                return recv > 0
            if method == "negative?":
                return recv < 0
        name = "nil" if recv is None else type(recv).__name__
        raise RubyRaise(f"NoMethodError: undefined method `{method}' for {name}", "raise",
                        "NoMethodError")

    def array_op(self, arr: Arr, method: str, args: list):
        n = len(arr.items)
        if method in ("push", "<<"):
            if n >= self.config.array_bound:
                raise RubyRaise("array capacity exceeded", "bound", "Array#push")
            arr.items.append(args[0])
            return arr
        if method in ("size", "length"):
            return n
        if method == "empty?":
            return n == 0
        if method == "include?":
            return any(ruby_eq(x, args[0]) for x in arr.items)
        if method in ("get", "[]", "set", "[]="):
            i = args[0]
            tag = "Array#get" if method in ("get", "[]") else "Array#set"
            if not is_int(i):
                raise RubyRaise("TypeError: no implicit conversion into Integer", "raise",
                                "TypeError: no implicit conversion into Integer")
            if not 0 <= i < n:
                raise RubyRaise(f"index {i} outside 0...{n}", "callee", tag)
            if tag == "Array#get":
                return arr.items[i]
            arr.items[i] = args[1]
            return args[1]
        raise RubyRaise(f"NoMethodError: undefined method `{method}' for Array", "raise",
                        "NoMethodError")

    def invoke(self, entry: MethodEntry, recv: Obj, args: list):
        if entry.origin == "generated":
            return self.accessor(entry, recv, args)
        if entry.label.kind == "exact":
            if entry.body is None:
                raise OracleUnsupported(f"`{entry.qualified}' has no body")
            return self.run_body(entry, recv, args)
        if entry.label.kind == "pure" and self.model is not None:
            return self.model_call(entry, recv, args)
        raise OracleUnsupported(f"`{entry.qualified}' is labeled {entry.label.kind}; "
                                "its body is not executed")

    def run_body(self, entry: MethodEntry, recv, args: list):
        if self.depth >= RECURSION_LIMIT:
            raise RubyRaise("SystemStackError: stack level too deep", "raise",
                            "SystemStackError")
        env = dict(zip(entry.params, args))
        self.depth += 1
        try:
            return self.eval(entry.body, env, recv)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1

    def accessor(self, entry: MethodEntry, recv: Obj, args: list):
        name = entry.method
        if name.endswith("="):
            recv.fields[name[:-1]] = args[0]
            return args[0]
        return recv.fields.get(name)

    def model_call(self, entry: MethodEntry, recv, args: list):
        """A pure callee evaluated through the solver's interpretation of it."""
        sig = entry.signature
        env = {p.binder: a for p, a in zip(sig.params, args)}
        for p in sig.params:
            if not truthy(self.eval(p.predicate, dict(env), recv)):
                raise RubyRaise(f"precondition of `{entry.qualified}' violated", "callee",
                                entry.qualified)
        if entry.mangled not in self.model.funs:
            raise OracleUnsupported(f"no interpretation for `{entry.mangled}' in the model")
        margs = [recv.oid]
        for p, a in zip(sig.params, args):
            margs.append(self.to_model(a, resolve_type_name(p.base, self.table)))
        raw = self.model.apply(entry.mangled, margs)
        rtype = resolve_type_name(sig.result.base, self.table)
        return self.from_model(raw, rtype)

    def to_model(self, v, typ):
        from rbrefine.solver import BV
        name = getattr(typ, "name", None)
        if isinstance(v, (Obj, Arr)):
            return v.oid
        if v is None:
            return 0
        if name == "Float":
            return Fraction(v)
        if is_int(v) and self.config.bitvector:
            return BV(v % (1 << self.config.bv_width), self.config.bv_width)
        return v

    def from_model(self, raw, typ):
        from rbrefine.solver import BV
        name = getattr(typ, "name", None)
        if name == "Integer":
            return raw.signed() if isinstance(raw, BV) else self.wrap(int(raw))
        if name == "Float":
            return Fraction(raw)
        if name == "Bool":
            return bool(raw)
        raise OracleUnsupported(f"cannot rebuild a {typ} result from a model")


def interpret_concrete(table: ClassTable, entry: MethodEntry, inputs: dict,
                       config: Config = Config(), model=None,
                       signature: Optional[A.MethodSignature] = None) -> ConcreteOutcome:
    """Runs ``entry`` on concrete inputs (``self`` plus each parameter by name).

    Parameter refinements are checked first; the result refinement is evaluated
    after a normal return.
    """
    sig = signature or entry.signature
    interp = Interpreter(table, config, model)
    interp._oids = max([0] + [v.oid for v in _objects(inputs.values())])
    recv = inputs.get("self")
    env = {p.binder: inputs.get(name) for p, name in zip(sig.params, entry.params)}
    try:
        for p in sig.params:
            if not truthy(interp.eval(p.predicate, dict(env), recv)):
                return ConcreteOutcome("assumptionUnmet")
    except RubyRaise:
        return ConcreteOutcome("assumptionUnmet")
    args = [inputs.get(n) for n in entry.params]
    try:
        value = interp.run_body(entry, recv, args)
        post_env = dict(env)
        if sig.result.binder:
            post_env[sig.result.binder] = value
        holds = truthy(interp.eval(sig.result.predicate, post_env, recv))
    except RubyRaise as exc:
        return ConcreteOutcome("exception", message=exc.message, error_kind=exc.kind,
                               tag=exc.tag)
    return ConcreteOutcome("normal", value, post_holds=holds)


def _objects(values):
    for v in values:
        if isinstance(v, Obj):
            yield v
            yield from _objects(v.fields.values())
        elif isinstance(v, Arr):
            yield v
            yield from _objects(v.items)


def build_inputs(enc, model, config: Config, table: ClassTable,
                 singleton: bool = False) -> dict:
    """Concrete inputs for every symbolic input of an encoding, read from a model."""
    from rbrefine.solver import choose_union, scalar_value

    def build(lay):
        if lay.kind == "scalar":
            return scalar_value(model, lay.name, lay.scalar, config)
        if lay.kind == "nil":
            return None
        if lay.kind == "union":
            return build(choose_union(lay, model))
        if lay.kind == "arr":
            n = max(0, min(scalar_value(model, lay.length, "int", config), config.array_bound))
            return Arr([build(c) for c in lay.cells[:n]], 0)
        obj = Obj(lay.class_name, lay.oid, {f: None for f in table.all_fields()},
                  meta=singleton and lay is self_layout)
        for f, sub in lay.fields:
            obj.fields[f] = build(sub)
        return obj

    self_layout = dict(enc.inputs).get("self")
    return {name: build(lay) for name, lay in enc.inputs}


def replay_counterexample(table: ClassTable, entry: MethodEntry, cex, config: Config = Config(),
                          signature: Optional[A.MethodSignature] = None) -> bool:
    """True iff running the method on the counterexample reproduces its trigger."""
    out = interpret_concrete(table, entry, cex.inputs, config, cex.model, signature)
    trig = cex.trigger
    if trig == "postconditionViolated":
        return out.kind == "normal" and out.post_holds is False
    if out.kind != "exception":
        return False
    if trig.startswith("exceptionRaised"):
        return out.error_kind == "raise"
    if trig.startswith("calleePreconditionViolated"):
        return out.error_kind == "callee" and trig == f"calleePreconditionViolated({out.tag})"
    if trig.startswith("boundExceeded"):
        return out.error_kind == "bound"
    return False
