from __future__ import annotations

import json

import pytest

from conftest import DESIGNS
from rulecomp.context import count_tokens
from rulecomp.errors import ConfigError, SchemaError, StageError
from rulecomp.grammar import MASKABLE_RULES
from rulecomp.harness.cli import main
from rulecomp.harness.config import config_from_dict, load_config
from rulecomp.harness.pipeline import (
    LIVENESS_UNVERIFIABLE_FLAG,
    EvalSettings,
    cmd_evaluate,
    cmd_generate,
    write_generation,
)
from rulecomp.harness.report import build_report, check_row, matrix_csv, read_results, summary_table
from rulecomp.sampling import read_tasks

NOT_GATE = str(DESIGNS / "not_gate.sv")
DEAD = str(DESIGNS / "dead_logic.sv")


# config -------------------------------------------------------------------------------


def test_config_defaults_and_rule_names(tmp_path):
    cfg = config_from_dict({"sources": ["a.sv"], "rules": ["CONT", "always_construct", "continuous_assign"]}, tmp_path)
    assert cfg.sources == [str(tmp_path / "a.sv")]
    assert cfg.rules == ["continuous_assignment", "always_construct", "continuous_assignment"]
    assert (cfg.max_per_rule, cfg.seed, cfg.k, cfg.max_tokens) == (100, 0, 3, 32000)
    assert cfg.verifier.timeout == 30.0


def test_config_yaml_and_json(tmp_path):
    (tmp_path / "c.yaml").write_text("sources: [x.sv]\ntop: x\ndefines: [FAST]\ntokens: {min: 5, max: 50}\n"
                                     "models: [mock-oracle, {profile: starcoder, endpoint: 'http://h/v1'}]\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.defines == {"FAST": None} and (cfg.min_tokens, cfg.max_tokens) == (5, 50)
    assert [m.profile for m in cfg.models] == ["mock-oracle", "starcoder"]
    assert cfg.models[1].endpoint == "http://h/v1"
    (tmp_path / "c.json").write_text(json.dumps({"sources": ["x.sv"], "seed": 7}))
    assert load_config(tmp_path / "c.json").seed == 7


@pytest.mark.parametrize("doc", [
    {},
    {"sources": ["a"], "bogus": 1},
    {"sources": ["a"], "rules": ["NOPE"]},
    {"sources": ["a"], "max_per_rule": 0},
    {"sources": ["a"], "tokens": {"min": 10, "max": 10}},
    {"sources": ["a"], "k": 0},
    {"sources": ["a"], "context_mode": "wide"},
    {"sources": ["a"], "verifier": {"colour": "red"}},
    {"sources": ["a"], "models": [{"endpoint": "x"}]},
    {"sources": ["a"], "seed": "abc"},
    ["not", "a", "mapping"],
])
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_config_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("sources: [a\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


# generation --------------------------------------------------------------------------------


def test_generate_single_design():
    out = cmd_generate(config_from_dict({"sources": [NOT_GATE], "top": "not_gate"}))
    rules = sorted(t.rule for t in out.tasks)
    assert rules == ["ansi_port_declaration", "ansi_port_declaration", "continuous_assignment"]
    assert out.counts["candidates"] == 3 and out.counts["emitted"] == 3
    for t in out.tasks:
        t.check()
        assert t.unit == "not_gate"
        assert t.origin[0] == NOT_GATE


def test_generate_drops_dead_constructs():
    out = cmd_generate(config_from_dict({"sources": [DEAD], "top": "dead_logic"}))
    dead = [r for r in out.rejected if r.stage == "liveness"]
    assert dead and all(r.reason == "dead" for r in dead)
    assert out.counts["rejected_dead"] == len(dead)
    assert {r.task_id for r in dead}.isdisjoint(t.task_id for t in out.tasks)


def test_generate_flags_unverifiable_liveness(tmp_path):
    src = tmp_path / "latchy.sv"
    src.write_text(
        "module latchy (input s, input a, output reg y);\n"
        "  always @* begin\n    if (s) y = a;\n    else y = !a;\n  end\nendmodule\n"
    )
    out = cmd_generate(config_from_dict({"sources": [str(src)], "rules": ["BLK"]}))
    assert len(out.tasks) == 2
    assert all(LIVENESS_UNVERIFIABLE_FLAG in t.flags for t in out.tasks)


def test_generate_budget_rejections_and_sidecars(tmp_path):
    # the budget applies to the whole context each task is shown with
    size = count_tokens(open(NOT_GATE).read())
    out = cmd_generate(config_from_dict({"sources": [NOT_GATE], "tokens": {"min": size + 1, "max": 32000}}))
    assert out.counts["rejected_too_small"] == 3 and not out.tasks
    out = cmd_generate(config_from_dict({"sources": [NOT_GATE], "tokens": {"min": 0, "max": size - 1}}))
    assert out.counts["rejected_too_large"] == 3
    paths = write_generation(out, tmp_path / "tasks.jsonl")
    assert [p.name for p in paths] == ["tasks.jsonl", "tasks.rejected.jsonl", "tasks.stats.json"]
    rejected = [json.loads(line) for line in paths[1].read_text().splitlines()]
    assert len(rejected) == 3
    assert all(r["stage"] == "budget" and r["reason"] == "too_large" and r["tokens"] == size for r in rejected)
    assert read_tasks(paths[0]) == []
    stats = json.loads(paths[2].read_text())
    assert stats["counts"]["emitted"] == 0 and stats["counts"]["candidates"] == 3
    out = cmd_generate(config_from_dict({"sources": [NOT_GATE], "tokens": {"min": size, "max": size + 1}}))
    assert out.counts["emitted"] == 3


def test_generate_stage_errors(tmp_path):
    with pytest.raises(StageError):
        cmd_generate(config_from_dict({"sources": [str(tmp_path / "nope.sv")]}))
    bad = tmp_path / "bad.sv"
    bad.write_text("module m (; endmodule\n")
    with pytest.raises(StageError):
        cmd_generate(config_from_dict({"sources": [str(bad)]}))
    with pytest.raises(StageError):
        cmd_generate(config_from_dict({"sources": [NOT_GATE], "top": "other"}))


def test_top_restricts_sampling():
    path = str(DESIGNS / "top_hier.sv")
    all_units = cmd_generate(config_from_dict({"sources": [path], "rules": ["PORT"]}))
    leaf_only = cmd_generate(config_from_dict({"sources": [path], "rules": ["PORT"], "top": "half_add"}))
    assert {t.unit for t in leaf_only.tasks} == {"half_add"}
    assert len(leaf_only.tasks) < len(all_units.tasks)


# evaluation -------------------------------------------------------------------------------


def _tasks():
    return cmd_generate(config_from_dict({"sources": [NOT_GATE], "top": "not_gate"})).tasks


@pytest.mark.parametrize("mode", ["chat", "fim"])
def test_evaluate_oracle(mode):
    rows = cmd_evaluate(_tasks(), "mock-oracle", mode, EvalSettings(workers=2))
    assert [r["stx"] for r in rows] == ["pass"] * 3
    assert [r["eqv"] for r in rows] == ["equivalent"] * 3
    for r in rows:
        check_row(r, "row")


def test_evaluate_constant():
    rows = cmd_evaluate(_tasks(), "mock-constant", "chat")
    cont = [r for r in rows if r["rule"] == "continuous_assignment"]
    assert cont[0]["stx"] == "pass" and cont[0]["eqv"] == "inequivalent"
    assert "counterexample" in cont[0]
    ports = [r for r in rows if r["rule"] == "ansi_port_declaration"]
    assert all(r["stx"] == "fail" and r["eqv"] == "skipped" for r in ports)


def test_evaluate_unknown_profile():
    with pytest.raises(ConfigError):
        cmd_evaluate(_tasks(), "nobody", "chat")
    with pytest.raises(ConfigError):
        cmd_evaluate(_tasks(), "openai-chat", "fim")


def test_evaluate_network_failure_counts_as_fail():
    rows = cmd_evaluate(_tasks(), "openai-chat", "chat", EvalSettings(workers=1), endpoint="http://127.0.0.1:9/v1")
    assert all(r["stx"] == "fail" and "generation_error" in r["flags"] for r in rows)


# report ---------------------------------------------------------------------------------


def _row(model, rule, stx, eqv, mode="chat"):
    return {"task_id": f"{model}{rule}{stx}{eqv}", "model": model, "mode": mode, "rule": rule,
            "stx": stx, "eqv": eqv, "flags": [], "latency_ms": 1.0, "loc": 1, "tokens": 3}


def test_report_matrix_two_models_nine_rules():
    rows = []
    for i, rule in enumerate(MASKABLE_RULES.values()):
        rows.append(_row("a", rule, "pass", "equivalent"))
        rows.append(_row("a", rule, "pass", "inequivalent" if i % 2 else "equivalent"))
        rows.append(_row("b", rule, "fail", "skipped"))
        rows.append(_row("b", rule, "pass", "equivalent" if i < 3 else "inequivalent"))
    rep = build_report(rows)
    lines = matrix_csv(rep).strip().split("\n")
    header = lines[0].split(",")
    assert header[0] == "model" and len(header) == 10
    assert [ln.split(",")[0] for ln in lines[1:]] == ["a:chat", "b:chat", "average"]
    avg = [float(x) for x in lines[3].split(",")[1:]]
    assert avg == sorted(avg)
    for j, rule in enumerate(header[1:]):
        a, b = float(lines[1].split(",")[j + 1]), float(lines[2].split(",")[j + 1])
        assert avg[j] == pytest.approx((a + b) / 2)
    table = summary_table(rep)
    assert "a:chat" in table and "b:chat" in table


def test_report_rejects_bad_rows(tmp_path):
    with pytest.raises(SchemaError):
        check_row(_row("a", "case_statement", "fail", "equivalent"), "x")
    with pytest.raises(SchemaError):
        check_row({"task_id": "t"}, "x")
    p = tmp_path / "r.jsonl"
    p.write_text("{broken\n")
    with pytest.raises(SchemaError):
        read_results([p])


# command line ---------------------------------------------------------------------------------


def test_cli_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(f"sources: [{NOT_GATE}]\ntop: not_gate\n")
    tasks = tmp_path / "tasks.jsonl"
    assert main(["generate", "--config", str(cfg), "--out", str(tasks)]) == 0
    assert "3 tasks written" in capsys.readouterr().out
    res = tmp_path / "res.jsonl"
    assert main(["evaluate", "--tasks", str(tasks), "--model", "mock-oracle", "--mode", "fim",
                 "--out", str(res), "--workers", "1"]) == 0
    assert "EQV 100.00%" in capsys.readouterr().out
    csv = tmp_path / "m.csv"
    assert main(["report", str(res), "--csv", str(csv)]) == 0
    assert csv.read_text().startswith("model,")
    assert main(["stats", "--config", str(cfg)]) == 0
    assert "CONT" in capsys.readouterr().out


def test_cli_report_empty_file_warns(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["report", str(empty)]) == 0
    assert "warning" in capsys.readouterr().err


def test_cli_errors_exit_2(tmp_path, capsys):
    assert main(["generate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "t.jsonl")]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["evaluate"])
