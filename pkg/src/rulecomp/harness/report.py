"""Score tables from evaluation result rows."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from rulecomp.errors import SchemaError
from rulecomp.grammar.rules import short_name
from rulecomp.sampling import compute_stats

_REQUIRED = ("task_id", "model", "mode", "stx", "eqv")
_STX = ("pass", "fail")
_EQV = ("equivalent", "inequivalent", "unverifiable", "skipped")


@dataclass
class Cell:
    n_tasks: int = 0
    stx_pass: int = 0
    eqv_pass: int = 0
    unverifiable: int = 0
    timeouts: int = 0
    latency_ms: float = 0.0

    def add(self, row: dict) -> None:
        self.n_tasks += 1
        self.stx_pass += row["stx"] == "pass"
        self.eqv_pass += row["eqv"] == "equivalent"
        self.unverifiable += row["eqv"] == "unverifiable"
        self.timeouts += "timeout" in row.get("flags", ())
        self.latency_ms += float(row.get("latency_ms") or 0.0)

    def merge(self, other: "Cell") -> None:
        for f in ("n_tasks", "stx_pass", "eqv_pass", "unverifiable", "timeouts", "latency_ms"):
            setattr(self, f, getattr(self, f) + getattr(other, f))

    @property
    def stx_rate(self) -> float:
        return 100.0 * self.stx_pass / self.n_tasks if self.n_tasks else 0.0

    @property
    def eqv_rate(self) -> float:
        return 100.0 * self.eqv_pass / self.n_tasks if self.n_tasks else 0.0

    @property
    def eqv_rate_verifiable(self) -> float:
        """EQV among tasks whose equivalence check reached a verdict."""
        n = self.n_tasks - self.unverifiable
        return 100.0 * self.eqv_pass / n if n else 0.0


@dataclass
class EvalReport:
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)

    def models(self) -> list[str]:
        return sorted({m for m, _ in self.cells})

    def rules(self) -> list[str]:
        return sorted({r for _, r in self.cells})

    def model_total(self, model: str) -> Cell:
        total = Cell()
        for (m, _), c in self.cells.items():
            if m == model:
                total.merge(c)
        return total

    def rule_order(self) -> list[str]:
        """Rules by average EQV over models, ascending (ties by name)."""
        def avg(rule: str) -> float:
            vals = [c.eqv_rate for (m, r), c in self.cells.items() if r == rule]
            return sum(vals) / len(vals)
        return sorted(self.rules(), key=lambda r: (avg(r), r))


def model_key(row: dict) -> str:
    return f"{row['model']}:{row['mode']}"


def check_row(row, where: str) -> dict:
    if not isinstance(row, dict):
        raise SchemaError(f"{where}: result row must be an object")
    for key in _REQUIRED:
        if key not in row:
            raise SchemaError(f"{where}: missing field {key!r}")
    if row["stx"] not in _STX or row["eqv"] not in _EQV:
        raise SchemaError(f"{where}: bad stx/eqv value")
    if row["stx"] == "fail" and row["eqv"] != "skipped":
        raise SchemaError(f"{where}: equivalence verdict without a syntax pass")
    if "rule" not in row:
        raise SchemaError(f"{where}: missing field 'rule'")
    return row


def read_results(paths) -> list[dict]:
    rows = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{n}: {exc}") from exc
                rows.append(check_row(row, f"{path}:{n}"))
    return rows


def build_report(rows: list[dict]) -> EvalReport:
    rep = EvalReport(rows=list(rows))
    for row in rows:
        key = (model_key(row), short_name(row["rule"]))
        rep.cells.setdefault(key, Cell()).add(row)
    return rep


def summary_table(rep: EvalReport) -> str:
    """Per-model STX/EQV percentages, with unverifiable counts alongside."""
    lines = [f"{'model':<32} {'tasks':>6} {'STX%':>7} {'EQV%':>7} {'unverif':>8} {'timeout':>8} {'ms/task':>9}"]
    for m in rep.models():
        c = rep.model_total(m)
        ms = c.latency_ms / c.n_tasks if c.n_tasks else 0.0
        lines.append(
            f"{m:<32} {c.n_tasks:>6} {c.stx_rate:>7.2f} {c.eqv_rate:>7.2f} {c.unverifiable:>8} {c.timeouts:>8} {ms:>9.1f}"
        )
    return "\n".join(lines)


def matrix_csv(rep: EvalReport) -> str:
    """Model x rule EQV percentages; rules ascending by average EQV, plus an average row."""
    rules = rep.rule_order()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", *rules])
    for m in rep.models():
        w.writerow([m, *(f"{rep.cells[(m, r)].eqv_rate:.2f}" if (m, r) in rep.cells else "" for r in rules)])
    avgs = []
    for r in rules:
        vals = [c.eqv_rate for (m, rr), c in rep.cells.items() if rr == r]
        avgs.append(f"{sum(vals) / len(vals):.2f}")
    if rules:
        w.writerow(["average", *avgs])
    return buf.getvalue()


def rule_stats_table(rows: list[dict]) -> str:
    """Count / average LoC / average tokens per rule over distinct tasks."""
    seen = {}
    for r in rows:
        if "loc" in r and "tokens" in r:
            seen.setdefault(r["task_id"], (r["rule"], int(r["loc"]), int(r["tokens"])))
    stats = compute_stats(list(seen.values()))
    lines = [f"{'rule':<8} {'name':<40} {'count':>6} {'avg LoC':>8} {'avg tok':>8}"]
    for s in stats:
        lines.append(f"{short_name(s.rule_name):<8} {s.rule_name:<40} {s.count:>6} {s.avg_loc:>8.2f} {s.avg_tokens:>8.2f}")
    return "\n".join(lines)


def cmd_report(paths, csv_path: str | Path | None = None) -> tuple[EvalReport, str]:
    rows = read_results(paths)
    rep = build_report(rows)
    text = "\n\n".join([summary_table(rep), rule_stats_table(rows)])
    if csv_path is not None:
        Path(csv_path).write_text(matrix_csv(rep), encoding="utf-8")
    return rep, text
