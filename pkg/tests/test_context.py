from __future__ import annotations

import sys
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulecomp.context import (
    DIRECT,
    INSTANTIATION,
    IMPORT,
    TRANSITIVE,
    build_dependency_graph,
    count_tokens,
    enclosing_unit,
    enforce_budget,
    prune_context,
)
from rulecomp.errors import NoEnclosingUnit, TokenizerFailure
from rulecomp.grammar import parse_text
from rulecomp.sampling import TaskRecord


def leaf(name: str, body: str = "assign y = a;") -> str:
    return f"module {name} (input a, output y);\n  {body}\nendmodule\n"


def inst(name: str, *children: str) -> str:
    wires = "".join(f"  wire w{i};\n" for i in range(len(children)))
    insts = "".join(f"  {c} u{i} (.a(a), .y(w{i}));\n" for i, c in enumerate(children))
    out = " ^ ".join(f"w{i}" for i in range(len(children))) or "a"
    return f"module {name} (input a, output y);\n{wires}{insts}  assign y = {out};\nendmodule\n"


CHAIN = inst("m0", "m1") + inst("m1", "m2") + inst("m2", "m3") + inst("m3", "m4") + leaf("m4")
DIAMOND = inst("top", "left", "right") + inst("left", "base") + inst("right", "base") + leaf("base") + leaf("lonely")


def _bfs(edges: dict[str, list[str]], start: str) -> set[str]:
    seen, queue = {start}, deque([start])
    while queue:
        for d in edges.get(queue.popleft(), []):
            if d not in seen:
                seen.add(d)
                queue.append(d)
    return seen


# graph ------------------------------------------------------------------------------


def test_chain_graph():
    g = build_dependency_graph(parse_text(CHAIN))
    assert list(g.units) == ["m0", "m1", "m2", "m3", "m4"]
    assert g.deps("m0") == ["m1"]
    assert g.deps("m4") == []
    assert g.closure("m0") == ["m0", "m1", "m2", "m3", "m4"]
    assert g.closure("m3") == ["m3", "m4"]
    assert all(e.kind == INSTANTIATION for e in g.edges)


def test_diamond_deduplicates():
    g = build_dependency_graph(parse_text(DIAMOND))
    assert g.closure("top") == ["top", "left", "right", "base"]
    assert g.deps("left") == ["base"]


def test_package_edges_and_external_modules():
    src = (
        "package p;\n  localparam A = 1;\nendpackage\n"
        "module m (input a, output y);\n  wire w;\n  ext_cell u (.i(a), .o(w));\n"
        "  assign y = w ^ p::A;\nendmodule\n"
    )
    g = build_dependency_graph(parse_text(src))
    assert g.units["p"].kind == "package"
    assert g.deps("m") == ["p"]
    assert [(e.dst, e.kind) for e in g.external()] == [("ext_cell", INSTANTIATION)]
    assert any(e.kind == IMPORT and e.dst == "p" for e in g.edges)


def test_enclosing_unit():
    g = build_dependency_graph(parse_text(CHAIN))
    start = CHAIN.index("module m2")
    assert enclosing_unit(g, (start + 10, start + 20)) == "m2"
    with pytest.raises(NoEnclosingUnit):
        enclosing_unit(g, (len(CHAIN) + 5, len(CHAIN) + 6))


# pruning ------------------------------------------------------------------------------


def test_prune_direct_and_transitive():
    g = build_dependency_graph(parse_text(CHAIN))
    d = prune_context(CHAIN, g, "m1", DIRECT)
    assert d.units == ("m1", "m2")
    t = prune_context(CHAIN, g, "m1", TRANSITIVE)
    assert t.units == ("m1", "m2", "m3", "m4")
    assert "module m0" not in t.text
    parse_text(t.text)


def test_prune_keeps_package():
    src = "package p;\n  localparam A = 1;\nendpackage\n" + leaf("unused") + leaf("m", "assign y = a ^ p::A;")
    g = build_dependency_graph(parse_text(src))
    ctx = prune_context(src, g, "m")
    assert ctx.units == ("p", "m")


def test_prune_remap_preserves_text():
    g = build_dependency_graph(parse_text(DIAMOND))
    ctx = prune_context(DIAMOND, g, "left")
    start = DIAMOND.index("assign", DIAMOND.index("module base"))
    span = (start, start + len("assign y = a;"))
    new = ctx.remap.span(span)
    assert ctx.text[new[0]:new[1]] == DIAMOND[span[0]:span[1]]
    with pytest.raises(NoEnclosingUnit):
        ctx.remap.offset(DIAMOND.index("module lonely") + 3)


def test_prune_errors():
    g = build_dependency_graph(parse_text(CHAIN))
    with pytest.raises(NoEnclosingUnit):
        prune_context(CHAIN, g, "nope")
    with pytest.raises(ValueError):
        prune_context(CHAIN, g, "m0", "sideways")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))))
def test_transitive_context_is_reachable_set(case):
    n, pairs = case
    # only edges from lower to higher index keep the hierarchy acyclic
    edges: dict[str, list[str]] = {}
    for a, b in pairs:
        if a < b and f"n{b}" not in edges.setdefault(f"n{a}", []):
            edges[f"n{a}"].append(f"n{b}")
    src = "".join(inst(f"n{i}", *edges.get(f"n{i}", [])) for i in range(n))
    g = build_dependency_graph(parse_text(src))
    for i in range(n):
        home = f"n{i}"
        assert set(prune_context(src, g, home, TRANSITIVE).units) == _bfs(edges, home)
        assert set(prune_context(src, g, home, DIRECT).units) == {home, *edges.get(home, [])}


# tokens and budgets -------------------------------------------------------------------------


def test_count_tokens_builtin():
    assert count_tokens("") == 0
    assert count_tokens("assign y = !a;") == 6
    assert count_tokens("// only a comment\n") == 0


def test_count_tokens_external(tmp_path):
    script = tmp_path / "tok.py"
    script.write_text("import sys\nprint(len(sys.stdin.read()))\n")
    assert count_tokens("abcd", f"{sys.executable} {script}") == 4
    bad = tmp_path / "bad.py"
    bad.write_text("print('many')\n")
    with pytest.raises(TokenizerFailure):
        count_tokens("x", f"{sys.executable} {bad}")
    with pytest.raises(TokenizerFailure):
        count_tokens("x", "/nonexistent/tokenizer")
    fail = tmp_path / "fail.py"
    fail.write_text("import sys\nsys.exit(4)\n")
    with pytest.raises(TokenizerFailure):
        count_tokens("x", f"{sys.executable} {fail}")


def _task_of_tokens(n: int) -> TaskRecord:
    ref = " ".join(["x"] * n)
    ph = "<<<M>>>"
    return TaskRecord("t", "expression", (0, 0), "", ph + ref, ref, ("f", 1), 0, 0, placeholder=ph)


@pytest.mark.parametrize("n,accepted,reason", [
    (3999, True, ""), (4000, True, ""), (32000, True, ""), (32001, False, "too_large"), (1, True, ""),
])
def test_budget_boundaries(n, accepted, reason):
    d = enforce_budget(_task_of_tokens(n), 32000)
    assert (d.accepted, d.reason, d.tokens) == (accepted, reason, n)


def test_budget_minimum():
    assert enforce_budget(_task_of_tokens(3999), 32000, 4000).reason == "too_small"
    assert enforce_budget(_task_of_tokens(4000), 32000, 4000).accepted


def test_budget_bounds_validated():
    with pytest.raises(ValueError):
        enforce_budget(_task_of_tokens(1), 10, 10)
    with pytest.raises(ValueError):
        enforce_budget(_task_of_tokens(1), 10, -1)
