"""Command-line entry point: generate, evaluate, report, stats."""

from __future__ import annotations

import argparse
import logging
import sys

from rulecomp.errors import RuleCompError
from rulecomp.grammar.rules import short_name
from rulecomp.harness.config import load_config
from rulecomp.harness.pipeline import (
    EvalSettings,
    candidate_stats,
    cmd_evaluate,
    cmd_generate,
    collect_candidates,
    write_generation,
    write_results,
)
from rulecomp.harness.report import cmd_report, matrix_csv
from rulecomp.prompts import CHAT, FIM
from rulecomp.sampling import read_tasks


def _stats_lines(stats) -> list[str]:
    lines = [f"{'rule':<8} {'count':>6} {'avg LoC':>8} {'avg tok':>8}"]
    for s in stats:
        lines.append(f"{short_name(s.rule_name):<8} {s.count:>6} {s.avg_loc:>8.2f} {s.avg_tokens:>8.2f}")
    return lines


def run_generate(args) -> int:
    cfg = load_config(args.config)
    out = cmd_generate(cfg)
    tasks_path, rej_path, stats_path = write_generation(out, args.out)
    print("\n".join(_stats_lines(out.stats)))
    c = out.counts
    print(
        f"\n{c['emitted']} tasks written to {tasks_path} "
        f"({c['sampled']} sampled of {c['candidates']} candidates; "
        f"{len(out.rejected)} rejected, see {rej_path}; stats in {stats_path})"
    )
    return 0


def run_evaluate(args) -> int:
    tasks = read_tasks(args.tasks)
    settings = EvalSettings()
    if args.config:
        cfg = load_config(args.config)
        settings = EvalSettings(cfg.k, cfg.verifier.syntax, cfg.verifier.equivalence,
                                cfg.verifier.timeout, cfg.verifier.workers)
    if args.k is not None:
        settings.k = args.k
    if args.workers is not None:
        settings.workers = args.workers
    if args.timeout is not None:
        settings.timeout = args.timeout
    rows = cmd_evaluate(tasks, args.model, args.mode, settings, args.endpoint, args.replay, args.record)
    write_results(rows, args.out)
    n = len(rows)
    stx = sum(r["stx"] == "pass" for r in rows)
    eqv = sum(r["eqv"] == "equivalent" for r in rows)
    if n:
        print(f"{n} tasks: STX {100.0 * stx / n:.2f}%  EQV {100.0 * eqv / n:.2f}%  -> {args.out}")
    else:
        print(f"no tasks in {args.tasks}; wrote empty {args.out}")
    return 0


def run_report(args) -> int:
    rep, text = cmd_report(args.results, args.csv)
    if not rep.rows:
        print("warning: no result rows found", file=sys.stderr)
    print(text)
    if args.csv:
        print(f"\nEQV matrix written to {args.csv}")
    else:
        print()
        print(matrix_csv(rep), end="")
    return 0


def run_stats(args) -> int:
    cfg = load_config(args.config)
    unit, _, occs = collect_candidates(cfg)
    print("\n".join(_stats_lines(candidate_stats(unit.text, occs, cfg.tokenizer))))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rulecomp", description="Grammar-rule completion benchmark for HDL code.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample masked tasks from HDL sources")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True, help="task JSONL file")
    g.set_defaults(func=run_generate)

    e = sub.add_parser("evaluate", help="prompt a model on a task file and score the completions")
    e.add_argument("--tasks", required=True)
    e.add_argument("--model", required=True, help="shipped profile name or profile JSON path")
    e.add_argument("--mode", choices=[CHAT, FIM], default=CHAT)
    e.add_argument("--out", required=True, help="results JSONL file")
    e.add_argument("--replay", help="answer requests from a recorded transport file")
    e.add_argument("--record", help="append every HTTP exchange to this file")
    e.add_argument("--endpoint", help="override the profile's endpoint URL")
    e.add_argument("--config", help="pipeline config supplying verifier settings")
    e.add_argument("--k", type=int, help="unroll depth")
    e.add_argument("--workers", type=int)
    e.add_argument("--timeout", type=float, help="SAT timeout in seconds")
    e.set_defaults(func=run_evaluate)

    r = sub.add_parser("report", help="summarise result files")
    r.add_argument("results", nargs="+")
    r.add_argument("--csv", help="write the model x rule EQV matrix here")
    r.set_defaults(func=run_report)

    s = sub.add_parser("stats", help="rule frequency and size statistics")
    s.add_argument("--config", required=True)
    s.set_defaults(func=run_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RuleCompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
