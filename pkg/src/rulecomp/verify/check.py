"""Scoring of completions: reinsertion, syntax check and equivalence check."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

from rulecomp.errors import (
    ExternalToolFailure,
    InterfaceMismatch,
    LexError,
    ParseError,
    RuleCompError,
)
from rulecomp.grammar.parser import parse_text
from rulecomp.verify.cnf import tseitin
from rulecomp.verify.elaborate import elaborate, package_constants
from rulecomp.verify.lint import lint
from rulecomp.verify.miter import build_miter, unroll
from rulecomp.verify.sat import SAT, TIMEOUT, sat_solve

BUILTIN = "builtin"
DEFAULT_TIMEOUT = 30.0
EXTERNAL_TOOL_TIMEOUT = 600.0

EQUIVALENT = "equivalent"
INEQUIVALENT = "inequivalent"
UNVERIFIABLE = "unverifiable"
SKIPPED = "skipped"


@dataclass
class StxVerdict:
    passed: bool
    diagnostic: str = ""

    def to_json(self) -> dict:
        return {"status": "pass" if self.passed else "fail", "diagnostic": self.diagnostic}


@dataclass
class Counterexample:
    """Per-cycle input values (and values picked for undriven nets)."""

    inputs: list[dict[str, int]]
    free: list[dict[str, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"inputs": self.inputs, "free": self.free}


@dataclass
class EqvVerdict:
    status: str
    counterexample: Counterexample | None = None
    reason: str = ""

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass
class Verdict:
    stx: StxVerdict
    eqv: EqvVerdict

    def __post_init__(self) -> None:
        if not self.stx.passed and self.eqv.status != SKIPPED:
            raise ValueError("equivalence is only checked after the syntax check passes")


def reinsert(task, completion: str) -> str:
    """Splice ``completion`` into the reference in place of the masked span."""
    start, end = task.mask_span
    return task.reference[:start] + completion + task.reference[end:]


def _run(argv: list[str], timeout: float) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise ExternalToolFailure(127, str(exc)) from exc
    except subprocess.TimeoutExpired as exc:
        raise ExternalToolFailure(-1, f"timed out after {timeout}s") from exc


def _fill(template: str, **values: str) -> list[str]:
    return [part.format(**values) for part in shlex.split(template)]


def check_syntax(candidate: str, mode: str = BUILTIN) -> StxVerdict:
    """``mode`` is ``"builtin"`` or a command template containing ``{file}``."""
    if mode == BUILTIN:
        try:
            tree = parse_text(candidate)
        except (LexError, ParseError) as exc:
            return StxVerdict(False, f"{type(exc).__name__}: {exc}")
        problems = lint(tree)
        if problems:
            return StxVerdict(False, "lint: " + "; ".join(problems))
        return StxVerdict(True)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "candidate.sv")
        with open(path, "w") as fh:
            fh.write(candidate)
        try:
            proc = _run(_fill(mode, file=path), EXTERNAL_TOOL_TIMEOUT)
            if proc.returncode != 0:
                raise ExternalToolFailure(proc.returncode, proc.stderr)
        except ExternalToolFailure as exc:
            return StxVerdict(False, f"external lint exited {exc.status}: {exc.stderr.strip()}")
    return StxVerdict(True)


def _equivalence_builtin(reference: str, candidate: str, top: str, k: int, timeout: float) -> EqvVerdict:
    try:
        ref_tree = parse_text(reference)
        cand_tree = parse_text(candidate)
    except (LexError, ParseError) as exc:
        return EqvVerdict(UNVERIFIABLE, reason=f"parse: {exc}")
    packages = {u.children[1].children[0].text(reference) for u in ref_tree.root.children
                if u.kind == "package_declaration"}
    try:
        if top in packages:
            a = package_constants(ref_tree, top)
            b = package_constants(cand_tree, top)
            if a == b:
                return EqvVerdict(EQUIVALENT)
            diff = sorted(set(a) ^ set(b) | {n for n in set(a) & set(b) if a[n] != b[n]})
            return EqvVerdict(INEQUIVALENT, reason=f"package constants differ: {', '.join(diff)}")
        net_a = elaborate(ref_tree, top)
        net_b = elaborate(cand_tree, top)
    except RuleCompError as exc:
        return EqvVerdict(UNVERIFIABLE, reason=f"{type(exc).__name__}: {exc}")
    try:
        miter = build_miter(net_a, net_b)
    except InterfaceMismatch as exc:
        return EqvVerdict(INEQUIVALENT, reason=f"interface mismatch: {exc}")
    un = unroll(miter, k)
    formula = tseitin(un.netlist, un.trigger_any)
    result = sat_solve(formula, timeout)
    if result.status == TIMEOUT:
        return EqvVerdict(UNVERIFIABLE, reason="timeout")
    if result.status != SAT:
        return EqvVerdict(EQUIVALENT)
    return EqvVerdict(INEQUIVALENT, counterexample=decode_counterexample(un, formula, result.model))


def decode_counterexample(un, formula, model: dict[int, bool]) -> Counterexample:
    """Read the per-cycle input (and free-net) values out of a SAT model."""

    def value(bits) -> int:
        v = 0
        for i, b in enumerate(bits):
            var = formula.var_of.get(b)
            if var is not None and model.get(var, False):
                v |= 1 << i
        return v

    steps = [dict() for _ in range(un.k)]
    frees = [dict() for _ in range(un.k)]
    for group, out in ((un.netlist.inputs, steps), (un.netlist.free, frees)):
        for full, bits in group.items():
            name, _, t = full.rpartition("@")
            out[int(t) - 1][name] = value(bits)
    return Counterexample(steps, frees)


def check_equivalence(
    reference: str,
    candidate: str,
    top: str,
    k: int = 3,
    mode: str = BUILTIN,
    timeout: float = DEFAULT_TIMEOUT,
) -> EqvVerdict:
    """Bounded equivalence of ``top`` in two sources over ``k`` cycles.

    ``mode`` is ``"builtin"`` or a command template using ``{reference}``,
    ``{candidate}``, ``{top}`` and ``{k}``; the command's exit status 0 means
    equivalent, 1 inequivalent and anything else unverifiable.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if mode == BUILTIN:
        return _equivalence_builtin(reference, candidate, top, k, timeout)
    with tempfile.TemporaryDirectory() as tmp:
        paths = {}
        for name, text in (("reference", reference), ("candidate", candidate)):
            paths[name] = os.path.join(tmp, f"{name}.sv")
            with open(paths[name], "w") as fh:
                fh.write(text)
        try:
            proc = _run(_fill(mode, top=top, k=str(k), **paths), max(timeout, 1.0))
        except ExternalToolFailure as exc:
            return EqvVerdict(UNVERIFIABLE, reason=f"external checker failed ({exc.status}): {exc.stderr}")
    if proc.returncode == 0:
        return EqvVerdict(EQUIVALENT)
    if proc.returncode == 1:
        return EqvVerdict(INEQUIVALENT, reason=proc.stdout.strip()[-2000:])
    return EqvVerdict(UNVERIFIABLE, reason=f"external checker exited {proc.returncode}: {proc.stderr.strip()[-2000:]}")


def verify(task, completion: str, top: str, k: int = 3, syntax_mode: str = BUILTIN,
           eqv_mode: str = BUILTIN, timeout: float = DEFAULT_TIMEOUT) -> tuple[str, Verdict]:
    """Reinsert, lint, then (only on a syntax pass) check equivalence."""
    candidate = reinsert(task, completion)
    stx = check_syntax(candidate, syntax_mode)
    if not stx.passed:
        return candidate, Verdict(stx, EqvVerdict(SKIPPED))
    eqv = check_equivalence(task.reference, candidate, top, k, eqv_mode, timeout)
    return candidate, Verdict(stx, eqv)
