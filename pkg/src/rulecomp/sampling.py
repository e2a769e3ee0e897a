"""Candidate sampling, masking, dead-region filtering and rule statistics."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from rulecomp.errors import PlaceholderCollision, SchemaError, SpanOutOfRange
from rulecomp.grammar.lexer import count_lexer_tokens
from rulecomp.grammar.rules import DELETABLE_RULES, MASKABLE_RULES
from rulecomp.grammar.tree import RuleOccurrence

DEFAULT_PLACEHOLDER = "<<<MASKED_REGION>>>"

# Rules masked in a statement slot: deleting them must leave a statement.
_STATEMENT_SLOT_RULES = frozenset(["conditional_statement", "case_statement"])


def count_loc(text: str) -> int:
    """Number of non-blank lines the text touches."""
    return sum(1 for line in text.split("\n") if line.strip())


def task_id_for(reference: str, span: tuple[int, int], rule: str) -> str:
    h = hashlib.sha256()
    for part in (reference, f"{span[0]}:{span[1]}", rule):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()[:20]


@dataclass
class TaskRecord:
    task_id: str
    rule: str
    mask_span: tuple[int, int]
    ground_truth: str
    masked_source: str
    reference: str
    origin: tuple[str, int]
    loc: int
    tokens: int
    flags: list[str] = field(default_factory=list)
    unit: str = ""
    placeholder: str = DEFAULT_PLACEHOLDER

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "rule": self.rule,
            "mask_span": {"start": self.mask_span[0], "end": self.mask_span[1]},
            "ground_truth": self.ground_truth,
            "masked_source": self.masked_source,
            "reference": self.reference,
            "origin": {"file": self.origin[0], "line": self.origin[1]},
            "loc": self.loc,
            "tokens": self.tokens,
            "flags": list(self.flags),
            "unit": self.unit,
            "placeholder": self.placeholder,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_json(cls, doc: dict) -> "TaskRecord":
        try:
            rec = cls(
                task_id=str(doc["task_id"]),
                rule=str(doc["rule"]),
                mask_span=(int(doc["mask_span"]["start"]), int(doc["mask_span"]["end"])),
                ground_truth=doc["ground_truth"],
                masked_source=doc["masked_source"],
                reference=doc["reference"],
                origin=(doc["origin"]["file"], int(doc["origin"]["line"])),
                loc=int(doc["loc"]),
                tokens=int(doc["tokens"]),
                flags=list(doc.get("flags", [])),
                unit=doc.get("unit", ""),
                placeholder=doc.get("placeholder", DEFAULT_PLACEHOLDER),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed task record: {exc!r}") from exc
        rec.check()
        return rec

    def check(self) -> None:
        start, end = self.mask_span
        if not 0 <= start <= end <= len(self.reference):
            raise SchemaError(f"task {self.task_id}: mask span out of range")
        if self.reference[start:end] != self.ground_truth:
            raise SchemaError(f"task {self.task_id}: ground truth does not match the reference span")
        if self.masked_source.count(self.placeholder) != 1:
            raise SchemaError(f"task {self.task_id}: masked source must hold exactly one placeholder")
        if self.masked_source.replace(self.placeholder, self.ground_truth) != self.reference:
            raise SchemaError(f"task {self.task_id}: masked source does not splice back to the reference")


def read_tasks(path) -> list[TaskRecord]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{n}: {exc}") from exc
            tasks.append(TaskRecord.from_json(doc))
    return tasks


def write_tasks(path, tasks: list[TaskRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tasks:
            fh.write(t.to_line() + "\n")


@dataclass(frozen=True)
class RuleStats:
    rule_name: str
    count: int
    avg_loc: float
    avg_tokens: float


def _overlaps(a: RuleOccurrence, b: RuleOccurrence) -> bool:
    return a.start < b.end and b.start < a.end


def _contains(outer: RuleOccurrence, inner: RuleOccurrence) -> bool:
    return outer.start <= inner.start and inner.end <= outer.end


def sample(occurrences: list[RuleOccurrence], max_per_rule: int, seed: int) -> list[RuleOccurrence]:
    """Pick at most ``max_per_rule`` occurrences of each rule.

    Each rule draws from its own generator seeded by ``(seed, rule)`` and
    walks a uniformly shuffled order. A draw nested inside an already chosen
    occurrence is discarded in favour of the next draw; a draw enclosing
    chosen occurrences replaces them. The result is in document order.
    """
    if max_per_rule < 1:
        raise ValueError("max_per_rule must be at least 1")
    by_rule: dict[str, list[RuleOccurrence]] = {}
    for occ in occurrences:
        by_rule.setdefault(occ.rule_name, []).append(occ)
    chosen: list[RuleOccurrence] = []
    for rule in sorted(by_rule):
        pool = sorted(set(by_rule[rule]), key=lambda o: (o.start, o.end, o.node_path))
        rng = random.Random(f"{seed}:{rule}")
        rng.shuffle(pool)
        picked: list[RuleOccurrence] = []
        for occ in pool:
            if len(picked) >= max_per_rule:
                break
            clashes = [p for p in picked if _overlaps(p, occ)]
            if not clashes:
                picked.append(occ)
            elif all(_contains(occ, p) for p in clashes):
                picked = [p for p in picked if p not in clashes] + [occ]
            # otherwise occ lies inside a chosen occurrence: draw again
        chosen += picked
    chosen.sort(key=lambda o: (o.start, o.end, o.rule_name))
    return chosen


def mask(unit_text: str, occ: RuleOccurrence, placeholder: str = DEFAULT_PLACEHOLDER,
         origin: tuple[str, int] = ("<memory>", 1), unit: str = "") -> TaskRecord:
    """Replace the occurrence's span by ``placeholder``."""
    if not placeholder:
        raise PlaceholderCollision("placeholder must be non-empty")
    if placeholder in unit_text:
        raise PlaceholderCollision(f"placeholder {placeholder!r} already occurs in the source")
    start, end = occ.span
    if not 0 <= start <= end <= len(unit_text):
        raise SpanOutOfRange(f"span [{start}, {end}) outside the text")
    truth = unit_text[start:end]
    return TaskRecord(
        task_id=task_id_for(unit_text, (start, end), occ.rule_name),
        rule=occ.rule_name,
        mask_span=(start, end),
        ground_truth=truth,
        masked_source=unit_text[:start] + placeholder + unit_text[end:],
        reference=unit_text,
        origin=origin,
        loc=count_loc(truth),
        tokens=count_lexer_tokens(truth),
        unit=unit,
        placeholder=placeholder,
    )


def neutralize(task: TaskRecord) -> str | None:
    """The reference with the masked construct removed, or None if not removable."""
    if task.rule not in DELETABLE_RULES:
        return None
    start, end = task.mask_span
    filler = ";" if task.rule in _STATEMENT_SLOT_RULES else ""
    return task.reference[:start] + filler + task.reference[end:]


KEEP = "keep"
DROP = "drop"


@dataclass(frozen=True)
class LivenessDecision:
    action: str
    reason: str = ""
    unverifiable: bool = False


def liveness_filter(task: TaskRecord, top_module: str, checker, reference: str | None = None,
                    span: tuple[int, int] | None = None) -> LivenessDecision:
    """Drop the task when removing its construct provably changes no output.

    ``checker(reference, mutated, top)`` returns an equivalence verdict with a
    ``status``. ``reference``/``span`` let the check run on a different
    context (e.g. a fuller one) than the one stored in the task.
    """
    ref = reference if reference is not None else task.reference
    s = span if span is not None else task.mask_span
    probe = TaskRecord(task.task_id, task.rule, s, ref[s[0]:s[1]], "", ref, task.origin, 0, 0)
    mutated = neutralize(probe)
    if mutated is None:
        return LivenessDecision(KEEP, "not removable")
    verdict = checker(ref, mutated, top_module)
    if verdict.status == "equivalent":
        return LivenessDecision(DROP, "dead")
    if verdict.status == "inequivalent":
        return LivenessDecision(KEEP, "live")
    return LivenessDecision(KEEP, verdict.reason or verdict.status, unverifiable=True)


def _rule_order(rule: str) -> tuple[int, str]:
    names = list(MASKABLE_RULES.values())
    return (names.index(rule), rule) if rule in names else (len(names), rule)


def compute_stats(candidates) -> list[RuleStats]:
    """``candidates`` holds ``(occurrence_or_rule, loc, tokens)`` triples."""
    acc: dict[str, list[tuple[int, int]]] = {}
    for occ, loc, tokens in candidates:
        rule = occ if isinstance(occ, str) else occ.rule_name
        acc.setdefault(rule, []).append((loc, tokens))
    out = []
    for rule in sorted(acc, key=_rule_order):
        rows = acc[rule]
        n = len(rows)
        out.append(RuleStats(rule, n, sum(r[0] for r in rows) / n, sum(r[1] for r in rows) / n))
    return out
