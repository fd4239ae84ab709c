"""End-to-end checking: source text in, one verdict per annotated method out."""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from rbrefine import interp
from rbrefine import ir as I
from rbrefine.config import Config
from rbrefine.errors import DepthLimitExceeded, OracleUnsupported, RbRefineError
from rbrefine.expand import collect_obligations, expand_generators
from rbrefine.solver import (Counterexample, emit_smtlib, extract_counterexample, goal_kinds,
                             run_solver)
from rbrefine.syntax import ast as A
from rbrefine.syntax.parser import parse_program
from rbrefine.translate import Failure, translate_program
from rbrefine.typesys import ClassTable, build_class_table
from rbrefine.vcgen import encode_query

SAFE = "SAFE"
UNSAFE = "UNSAFE"
UNKNOWN = "UNKNOWN"
BOUND_EXCEEDED = "BOUND_EXCEEDED"
TRANSLATION_ERROR = "TRANSLATION_ERROR"

ALL_SELF_FIELDS = "@*"


@dataclass
class MethodResult:
    subject: str
    verdict: str
    detail: str = ""
    trigger: str = ""
    counterexample: Optional[Counterexample] = None
    wall_time: float = 0.0
    smt_file: str = ""

    def line(self) -> str:
        s = self.subject
        if self.verdict == SAFE:
            return f"{s} is safe."
        if self.verdict == UNSAFE:
            cex = self.counterexample
            bindings = cex.describe() if cex and cex.bindings else "(no relevant bindings)"
            text = f"{s} is unsafe. Counterexample: {bindings}"
            notes = [self.trigger]
            if self.trigger == "exceptionRaised(NoMethodError)":
                notes.append("method called on a possibly-nil receiver")
            if cex is not None:
                notes.append(_replay_note(cex))
            return text + "\n    " + "; ".join(n for n in notes if n)
        if self.verdict == BOUND_EXCEEDED:
            return f"{s} exceeds the array bound: {self.trigger}."
        if self.verdict == UNKNOWN:
            return f"{s} is unknown: {self.detail}"
        return f"{s} could not be translated: {self.detail}"

    def to_json(self) -> dict:
        cex = self.counterexample
        return {
            "subject": self.subject,
            "verdict": self.verdict,
            "trigger": self.trigger or None,
            "detail": self.detail or None,
            "counterexample": None if cex is None else {
                k: _json_value(v) for k, v in cex.bindings.items()},
            "replayed": None if cex is None else cex.replayed,
            "replay_note": None if cex is None else cex.replay_note or None,
            "wall_time": round(self.wall_time, 4),
        }


def _replay_note(cex: Counterexample) -> str:
    if cex.replayed is True:
        return "replay confirmed" + (f" ({cex.replay_note})" if cex.replay_note else "")
    if cex.replayed is False:
        return "replay did NOT reproduce the failure" + (
            f" ({cex.replay_note})" if cex.replay_note else "")
    return "not replay-validated" + (f" ({cex.replay_note})" if cex.replay_note else "")


def _json_value(v):
    from fractions import Fraction
    if isinstance(v, Fraction):
        return float(v) if v.denominator != 1 else int(v)
    return v


@dataclass
class Report:
    results: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def all_safe(self) -> bool:
        return all(r.verdict == SAFE for r in self.results)

    def text(self) -> str:
        return "".join(r.line() + "\n" for r in self.results)

    def to_json(self) -> dict:
        return {"results": [r.to_json() for r in self.results],
                "all_safe": self.all_safe,
                "wall_time": round(self.wall_time, 4)}


@dataclass
class Prepared:
    """Everything up to translation, shared by verification and dumping."""

    program: A.Program
    table: ClassTable
    defs: list
    items: list  # VerificationQuery or Failure, in declaration order


def load_program(sources: list[tuple[str, str]]) -> A.Program:
    """Parses each (name, text) pair and concatenates the declarations."""
    decls = []
    for name, text in sources:
        try:
            decls.extend(parse_program(text).decls)
        except RbRefineError as exc:
            exc.source = name
            raise
    return A.Program(tuple(decls))


def prepare(program: A.Program, config: Config = Config()) -> Prepared:
    table = build_class_table(program)
    expand_generators(program, table)
    obligations = collect_obligations(program, table)
    defs, items = translate_program(program, table, obligations, config.label)
    return Prepared(program, table, defs, items)


def relevant_names(q: I.VerificationQuery) -> set:
    """Parameters and ``@field``s of self mentioned by the signature."""
    sig = q.signature or q.entry.signature
    binder_to_param = {p.binder: name for p, name in zip(sig.params, q.entry.params)}
    vars_, fields, uses_self = set(), set(), False
    preds = [p.predicate for p in sig.params] + [sig.result.predicate]
    for e in preds:
        for node in _walk(e):
            if isinstance(node, A.Var):
                vars_.add(node.name)
            elif isinstance(node, A.FieldRead):
                fields.add(node.field)
            elif isinstance(node, A.Self):
                uses_self = True
            elif isinstance(node, A.Call) and isinstance(node.receiver, A.Self):
                uses_self = True
    out = {binder_to_param[v] for v in vars_ if v in binder_to_param}
    if uses_self:
        out.add(ALL_SELF_FIELDS)
    out |= {"@" + f for f in fields}
    return out


def _walk(e):
    yield e
    if dataclasses.is_dataclass(e):
        for f in dataclasses.fields(e):
            v = getattr(e, f.name)
            if isinstance(v, tuple):
                for x in v:
                    if dataclasses.is_dataclass(x):
                        yield from _walk(x)
            elif dataclasses.is_dataclass(v) and not isinstance(v, type):
                yield from _walk(v)


def _shown(cex: Counterexample, relevant: set) -> Counterexample:
    keep = {}
    for k, v in cex.all_bindings.items():
        disp = k[len("real_"):]
        root = disp.split(".")[0].split("[")[0]
        if root in relevant or (ALL_SELF_FIELDS in relevant and root.startswith("@")):
            keep[k] = v
    if not keep:
        # the signature mentions no inputs (e.g. an unconditional raise); show everything
        keep = dict(cex.all_bindings)
    cex.bindings = dict(sorted(keep.items(), key=lambda kv: kv[0].startswith("real_@")))
    return cex


def check_query(q: I.VerificationQuery, table: ClassTable, config: Config) -> MethodResult:
    start = time.perf_counter()
    res = _check(q, table, config)
    res.wall_time = time.perf_counter() - start
    return res


def _check(q: I.VerificationQuery, table: ClassTable, config: Config) -> MethodResult:
    subject = q.label
    try:
        enc = encode_query(q, table, config)
    except DepthLimitExceeded as exc:
        return MethodResult(subject, UNKNOWN, detail=str(exc))
    except RbRefineError as exc:
        return MethodResult(subject, UNKNOWN, detail=f"{type(exc).__name__}: {exc}")
    header = f"; {subject}\n"
    text, goals = emit_smtlib(enc, header=header)
    smt_file = ""
    if config.dump_smt:
        os.makedirs(config.dump_smt, exist_ok=True)
        smt_file = os.path.join(config.dump_smt, q.file_stem + ".smt2")
        with open(smt_file, "w") as fh:
            fh.write(text)
    verdict = run_solver(text, config.timeout, config.solver())
    if verdict.kind == "unsat":
        return MethodResult(subject, SAFE, smt_file=smt_file)
    if verdict.kind != "sat":
        detail = verdict.kind if not verdict.detail else f"{verdict.kind}: {verdict.detail}"
        return MethodResult(subject, UNKNOWN, detail=detail, smt_file=smt_file)
    kinds = goal_kinds(verdict.model, goals)
    if kinds and all(k == "bound" for k in kinds):
        text2, goals2 = emit_smtlib(enc, exclude_bound=True, header=header)
        second = run_solver(text2, config.timeout, config.solver())
        if second.kind == "unsat":
            cex = extract_counterexample(verdict, enc, goals)
            return MethodResult(subject, BOUND_EXCEEDED, trigger=cex.trigger.split("(", 1)[1][:-1]
                                if "(" in cex.trigger else cex.trigger, smt_file=smt_file)
        if second.kind != "sat":
            return MethodResult(subject, UNKNOWN, detail=second.kind, smt_file=smt_file)
        verdict, goals = second, goals2
    cex = extract_counterexample(verdict, enc, goals)
    _shown(cex, relevant_names(q))
    _replay(q, table, config, enc, cex)
    return MethodResult(subject, UNSAFE, trigger=cex.trigger, counterexample=cex,
                        smt_file=smt_file)


def _replay(q, table, config, enc, cex: Counterexample) -> None:
    """Runs the method concretely on the counterexample when the oracle can."""
    if q.entry.body is None:
        cex.replay_note = "no body to run"
        return
    try:
        cex.inputs = interp.build_inputs(enc, cex.model, config, table, q.singleton)
        uses_model = _calls_non_exact(q)
        cex.replayed = interp.replay_counterexample(table, q.entry, cex, config, q.signature)
        if uses_model:
            cex.replay_note = "callee results taken from the solver model"
    except OracleUnsupported as exc:
        cex.replayed = None
        cex.replay_note = str(exc)


def _calls_non_exact(q: I.VerificationQuery) -> bool:
    roots = [d.body for d in q.defs.values()] + list(q.assumptions) + [q.guarantee]
    return any(isinstance(n, I.IFuncall) and n.kind == "uf"
               for r in roots for n in I.walk(r))


def verify_program(program: A.Program, config: Config = Config()) -> Report:
    start = time.perf_counter()
    prep = prepare(program, config)
    report = Report()
    jobs = prep.items

    def run(item):
        if isinstance(item, Failure):
            return MethodResult(item.label, TRANSLATION_ERROR, detail=str(item.error))
        return check_query(item, prep.table, config)

    if config.parallelism > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            report.results = list(pool.map(run, jobs))
    else:
        report.results = [run(j) for j in jobs]
    report.wall_time = time.perf_counter() - start
    return report


def verify_source(text: str, config: Config = Config()) -> Report:
    return verify_program(parse_program(text), config)


def verify_files(paths: list[str], config: Config = Config()) -> Report:
    sources = []
    for p in paths:
        with open(p) as fh:
            sources.append((p, fh.read()))
    return verify_program(load_program(sources), config)


def dump(program: A.Program, config: Config) -> str:
    """IR rendering of every definition and query; writes SMT files when asked."""
    prep = prepare(program, config)
    out = []
    if config.dump_ir:
        for d in prep.defs:
            out.append(I.render_def(d))
        for item in prep.items:
            if isinstance(item, Failure):
                out.append(f"; {item.label}: {item.error}")
            else:
                out.append(I.render_query(item))
    if config.dump_smt:
        os.makedirs(config.dump_smt, exist_ok=True)
        for item in prep.items:
            if isinstance(item, Failure):
                continue
            try:
                enc = encode_query(item, prep.table, config)
            except RbRefineError as exc:
                out.append(f"; {item.label}: {exc}")
                continue
            text, _ = emit_smtlib(enc, header=f"; {item.label}\n")
            with open(os.path.join(config.dump_smt, item.file_stem + ".smt2"), "w") as fh:
                fh.write(text)
    return "\n".join(out) + ("\n" if out else "")
