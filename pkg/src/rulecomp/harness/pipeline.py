"""Task generation and model evaluation pipelines."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from rulecomp.context import (
    TRANSITIVE,
    build_dependency_graph,
    count_tokens,
    enclosing_unit,
    enforce_budget,
    prune_context,
)
from rulecomp.errors import ConfigError, LLMError, RuleCompError, StageError
from rulecomp.grammar.parser import parse_text
from rulecomp.grammar.rules import DELETABLE_RULES, short_name
from rulecomp.grammar.tree import RuleOccurrence, find_rule_occurrences
from rulecomp.harness.config import PipelineConfig
from rulecomp.llm import (
    ConstantModel,
    LLMClient,
    ModelConfig,
    OracleModel,
    RecordingTransport,
    ReplayTransport,
    extract_code,
)
from rulecomp.preprocess import preprocess
from rulecomp.prompts import CHAT, DEFAULT_TEMPLATE, FIM, ChatTemplate, build_chat_prompt, build_fim_prompt, load_profile
from rulecomp.sampling import (
    DROP,
    RuleStats,
    TaskRecord,
    compute_stats,
    count_loc,
    liveness_filter,
    mask,
    sample,
    write_tasks,
)
from rulecomp.verify.check import SKIPPED, check_equivalence, verify
from rulecomp.verify.elaborate import elaborate, package_constants

log = logging.getLogger("rulecomp")

UNVERIFIABLE_FLAG = "unverifiable"
LIVENESS_UNVERIFIABLE_FLAG = "liveness_unverifiable"


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (RuleCompError, OSError) as exc:
        raise StageError(name, exc) from exc


@dataclass
class Rejection:
    task_id: str
    rule: str
    origin: tuple[str, int]
    stage: str
    reason: str
    tokens: int | None = None

    def to_json(self) -> dict:
        out = {
            "task_id": self.task_id,
            "rule": self.rule,
            "origin": {"file": self.origin[0], "line": self.origin[1]},
            "stage": self.stage,
            "reason": self.reason,
        }
        if self.tokens is not None:
            out["tokens"] = self.tokens
        return out


@dataclass
class GenerationOutput:
    tasks: list[TaskRecord]
    rejected: list[Rejection]
    stats: list[RuleStats]
    counts: dict[str, int] = field(default_factory=dict)

    def stats_json(self) -> dict:
        return {
            "rule_stats": [
                {"rule": s.rule_name, "short": short_name(s.rule_name), "count": s.count,
                 "avg_loc": s.avg_loc, "avg_tokens": s.avg_tokens}
                for s in self.stats
            ],
            "counts": self.counts,
        }


def _load_tree(cfg: PipelineConfig):
    unit = _stage("preprocess", preprocess, cfg.sources, cfg.defines, cfg.include_dirs)
    tree = _stage("parse", parse_text, unit.text)
    graph = build_dependency_graph(tree)
    if cfg.top is not None and cfg.top not in graph.units:
        raise StageError("parse", ConfigError(f"top unit {cfg.top!r} not found in the sources"))
    return unit, tree, graph


def collect_candidates(cfg: PipelineConfig):
    """Preprocess, parse and enumerate occurrences of the selected rules."""
    unit, tree, graph = _load_tree(cfg)
    allowed = set(graph.closure(cfg.top)) if cfg.top else set(graph.units)
    occs = _stage("enumerate", find_rule_occurrences, tree, cfg.rules)
    occs = [o for o in occs if enclosing_unit(graph, o.span) in allowed]
    return unit, graph, occs


def candidate_stats(unit_text: str, occs: list[RuleOccurrence], tokenizer: str | None = None) -> list[RuleStats]:
    rows = []
    for o in occs:
        text = unit_text[o.start:o.end]
        rows.append((o, count_loc(text), count_tokens(text, tokenizer)))
    return compute_stats(rows)


def _reference_problem(reference: str, home: str, kind: str) -> str | None:
    """Why the reference cannot be checked for equivalence, or None."""
    try:
        tree = parse_text(reference)
        if kind == "package":
            package_constants(tree, home)
        else:
            elaborate(tree, home)
    except RuleCompError as exc:
        return f"{type(exc).__name__}: {exc}"
    return None


def cmd_generate(cfg: PipelineConfig) -> GenerationOutput:
    """preprocess, parse, enumerate, sample, mask, liveness-filter, prune, budget."""
    cfg.validate()
    unit, graph, occs = collect_candidates(cfg)
    stats = _stage("enumerate", candidate_stats, unit.text, occs, cfg.tokenizer)
    picked = _stage("sample", sample, occs, cfg.max_per_rule, cfg.seed)

    contexts: dict[tuple[str, str], object] = {}
    problems: dict[tuple[str, str], str | None] = {}

    def context(home: str, mode: str):
        key = (home, mode)
        if key not in contexts:
            contexts[key] = prune_context(unit.text, graph, home, mode)
        return contexts[key]

    def checker(reference: str, mutated: str, top: str):
        return check_equivalence(reference, mutated, top, cfg.k, cfg.verifier.equivalence, cfg.verifier.timeout)

    tasks: list[TaskRecord] = []
    rejected: list[Rejection] = []
    for occ in picked:
        home = enclosing_unit(graph, occ.span)
        kind = graph.units[home].kind
        ctx = context(home, cfg.context_mode)
        start, end = ctx.remap.span(occ.span)
        origin = unit.locate(occ.start) if occ.start < len(unit.text) else ("<unknown>", 0)
        task = _stage(
            "mask", mask, ctx.text, RuleOccurrence(occ.rule_name, start, end, occ.node_path),
            cfg.placeholder, origin, home,
        )
        pkey = (home, ctx.text)
        if pkey not in problems:
            problems[pkey] = _reference_problem(ctx.text, home, kind)
        if problems[pkey] is not None:
            task.flags.append(UNVERIFIABLE_FLAG)
            log.info("task %s: reference not checkable (%s)", task.task_id, problems[pkey])
        elif cfg.liveness and kind == "module" and occ.rule_name in DELETABLE_RULES:
            full = context(home, TRANSITIVE)
            decision = _stage("liveness", liveness_filter, task, home, checker, full.text, full.remap.span(occ.span))
            if decision.action == DROP:
                rejected.append(Rejection(task.task_id, task.rule, origin, "liveness", decision.reason))
                continue
            if decision.unverifiable:
                task.flags.append(LIVENESS_UNVERIFIABLE_FLAG)
        budget = _stage("budget", enforce_budget, task, cfg.max_tokens, cfg.min_tokens, cfg.tokenizer)
        if not budget.accepted:
            rejected.append(Rejection(task.task_id, task.rule, origin, "budget", budget.reason, budget.tokens))
            log.info("task %s rejected: %s (%d tokens)", task.task_id, budget.reason, budget.tokens)
            continue
        tasks.append(task)
    counts = {
        "candidates": len(occs),
        "sampled": len(picked),
        "emitted": len(tasks),
        "rejected_dead": sum(1 for r in rejected if r.stage == "liveness"),
        "rejected_too_small": sum(1 for r in rejected if r.reason == "too_small"),
        "rejected_too_large": sum(1 for r in rejected if r.reason == "too_large"),
        "flagged_unverifiable": sum(1 for t in tasks if UNVERIFIABLE_FLAG in t.flags),
    }
    return GenerationOutput(tasks, rejected, stats, counts)


def write_generation(out: GenerationOutput, path: str | Path) -> tuple[Path, Path, Path]:
    """Writes the task file plus ``.rejected.jsonl`` and ``.stats.json`` siblings."""
    path = Path(path)
    write_tasks(path, out.tasks)
    rej = path.with_suffix(".rejected.jsonl")
    with rej.open("w", encoding="utf-8", newline="\n") as fh:
        for r in out.rejected:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")
    stats = path.with_suffix(".stats.json")
    stats.write_text(json.dumps(out.stats_json(), indent=2) + "\n", encoding="utf-8")
    return path, rej, stats


# evaluation ---------------------------------------------------------------------


@dataclass
class EvalSettings:
    k: int = 3
    syntax_mode: str = "builtin"
    eqv_mode: str = "builtin"
    timeout: float = 30.0
    workers: int = 4
    template: ChatTemplate = DEFAULT_TEMPLATE


def make_model(profile_name: str, mode: str, tasks: list[TaskRecord], endpoint: str | None = None,
               replay: str | None = None, record: str | None = None):
    profile = load_profile(profile_name)
    if mode not in (CHAT, FIM):
        raise ConfigError(f"prompt mode must be {CHAT} or {FIM}")
    if mode == FIM and profile.fim is None:
        raise ConfigError(f"profile {profile.name} has no FIM tokens")
    if profile.kind == "mock-oracle":
        return profile, OracleModel({t.task_id: t.ground_truth for t in tasks})
    if profile.kind == "mock-constant":
        return profile, ConstantModel(profile.constant or "assign y = 1'b0;")
    transport: httpx.BaseTransport | None = None
    if replay:
        transport = ReplayTransport(replay)
    elif record:
        transport = RecordingTransport(httpx.HTTPTransport(), record)
    config = ModelConfig.from_profile(profile, mode, endpoint)
    if not config.endpoint:
        raise ConfigError(f"profile {profile.name} has no endpoint")
    return profile, LLMClient(config, transport)


def evaluate_task(task: TaskRecord, model, profile, mode: str, settings: EvalSettings) -> dict:
    row: dict = {
        "task_id": task.task_id,
        "model": profile.name,
        "mode": mode,
        "rule": task.rule,
        "unit": task.unit,
        "loc": task.loc,
        "tokens": task.tokens,
        "stx": "fail",
        "eqv": SKIPPED,
        "flags": list(task.flags),
        "latency_ms": 0.0,
        "response_ref": None,
    }
    try:
        if mode == CHAT:
            bundle = build_chat_prompt(task, settings.template)
        else:
            bundle = build_fim_prompt(task, profile.fim)
        gen = model.generate(bundle)
    except (LLMError, ConfigError) as exc:
        row["flags"].append("generation_error")
        row["stx_diagnostic"] = f"{type(exc).__name__}: {exc}"
        return row
    row["latency_ms"] = round(gen.latency_ms, 3)
    row["response_ref"] = gen.request_key or "sha256:" + hashlib.sha256(gen.text.encode("utf-8")).hexdigest()[:20]
    row["response"] = gen.text
    try:
        completion = extract_code(gen.text, mode, profile.stop)
    except LLMError as exc:
        row["flags"].append("empty_completion")
        row["stx_diagnostic"] = f"{type(exc).__name__}: {exc}"
        return row
    row["completion"] = completion
    _, verdict = verify(task, completion, task.unit, settings.k, settings.syntax_mode,
                        settings.eqv_mode, settings.timeout)
    row["stx"] = "pass" if verdict.stx.passed else "fail"
    if verdict.stx.diagnostic:
        row["stx_diagnostic"] = verdict.stx.diagnostic
    row["eqv"] = verdict.eqv.status
    if verdict.eqv.reason:
        row["eqv_reason"] = verdict.eqv.reason
        if verdict.eqv.reason == "timeout":
            row["flags"].append("timeout")
    if verdict.eqv.counterexample is not None:
        row["counterexample"] = verdict.eqv.counterexample.to_json()
    return row


def cmd_evaluate(tasks: list[TaskRecord], profile_name: str, mode: str, settings: EvalSettings | None = None,
                 endpoint: str | None = None, replay: str | None = None, record: str | None = None) -> list[dict]:
    """One result row per task, in task order."""
    settings = settings or EvalSettings()
    profile, model = make_model(profile_name, mode, tasks, endpoint, replay, record)
    try:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            return list(pool.map(lambda t: evaluate_task(t, model, profile, mode, settings), tasks))
    finally:
        close = getattr(model, "close", None)
        if close is not None:
            close()


def write_results(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
