from __future__ import annotations

import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import design_files
from rulecomp.errors import LexError, ParseError, SchemaError, SpanError, UnknownRule
from rulecomp.grammar import (
    GRAMMAR,
    MASKABLE_RULES,
    Grammar,
    export_parse_tree,
    find_rule_occurrences,
    import_parse_tree,
    parse_text,
    resolve_rule,
    short_name,
    tokenize,
)
from rulecomp.grammar.parser import entry_rules
from rulecomp.sampling import mask

STMT = "assign y = !a;"


def wrap(body: str) -> str:
    return f"module m (input a, input b, output y);\n{body}\nendmodule\n"


# tokenize ---------------------------------------------------------------------


def test_tokenize_continuous_assign():
    toks = tokenize(STMT)
    assert [(t.kind, t.text) for t in toks] == [
        ("kw", "assign"), ("ident", "y"), ("op", "="), ("op", "!"), ("ident", "a"), ("punct", ";"),
    ]
    for t in toks:
        assert STMT[t.start:t.end] == t.text


def test_tokenize_empty():
    assert len(tokenize("")) == 0


def test_comment_is_leading_trivia():
    src = "// c\nassign y = a;"
    toks = tokenize(src)
    assert len(toks) == 5
    assert toks[0].trivia == "// c\n"
    rebuilt = "".join(t.trivia + t.text for t in toks) + toks.trailing
    assert rebuilt == src


def test_lex_error_offset():
    with pytest.raises(LexError) as err:
        tokenize("assign y = a \u00a4 b;")
    assert err.value.offset == 13


def test_sized_numbers_and_operators():
    kinds = [t.kind for t in tokenize("4'b10?1 8'hFF 'd3 12 <= >>> === ::")]
    assert kinds[:4] == ["num"] * 4
    assert [t.text for t in tokenize("a<=b>>>c===d::e")][1::2] == ["<=", ">>>", "===", "::"]


# parse ------------------------------------------------------------------------


def test_parse_continuous_assign_structure():
    tree = parse_text(wrap(STMT))
    occ = find_rule_occurrences(tree, {"continuous_assignment"})
    assert len(occ) == 1
    node = tree.node_at(occ[0].node_path)
    assert [c.kind for c in node.children] == ["kw", "variable_assignment", "punct"]
    va = node.children[1]
    assert [c.kind for c in va.children] == ["simple_identifier", "op", "expression"]
    assert va.children[2].text(tree.source) == "!a"


def test_parse_minimal_module():
    tree = parse_text("module m; endmodule")
    assert tree.root.kind == "compilation_unit"
    mods = tree.root.find_all("module_declaration")
    assert len(mods) == 1
    assert not any(n.kind == "continuous_assignment" for n in tree.root.walk())


def test_parse_error_at_equals():
    with pytest.raises(ParseError) as err:
        parse_text("assign = a;", "continuous_assignment")
    assert err.value.offset == 7
    assert err.value.expected


def test_parse_error_in_module_body():
    src = wrap("assign = a;")
    with pytest.raises(ParseError) as err:
        parse_text(src)
    assert src[err.value.offset] == "="


def test_grammar_invariants():
    assert GRAMMAR.start_symbol in GRAMMAR.rule_names
    assert not GRAMMAR.rule_names & GRAMMAR.terminal_kinds
    with pytest.raises(ValueError):
        Grammar(frozenset({"a"}), frozenset({"t"}), "b")
    with pytest.raises(ValueError):
        Grammar(frozenset({"a", "t"}), frozenset({"t"}), "a")


@pytest.mark.parametrize("path", design_files(), ids=lambda p: p.stem)
def test_fixture_round_trip_and_spans(path):
    src = path.read_text()
    tree = parse_text(src)
    tree.validate()
    assert tree.reconstruct() == src
    toks = tokenize(src)
    assert toks.reconstruct() == src
    assert [t.text(src) for t in tree.root.terminals()] == [t.text for t in toks]


@pytest.mark.parametrize("path", design_files(), ids=lambda p: p.stem)
def test_span_discipline(path):
    """Each masking-rule span parses alone back to the same subtree."""
    src = path.read_text()
    tree = parse_text(src)
    rules = set(MASKABLE_RULES.values())
    assert rules <= entry_rules()
    for occ in find_rule_occurrences(tree, rules):
        node = tree.node_at(occ.node_path)
        again = parse_text(src[occ.start:occ.end], occ.rule_name).root.shifted(occ.start)
        assert again == node


def test_parse_is_deterministic():
    src = (design_files()[0]).read_text()
    assert parse_text(src) == parse_text(src)


# occurrences --------------------------------------------------------------------


def test_occurrence_expression_in_statement():
    tree = parse_text(STMT, "continuous_assignment")
    occ = find_rule_occurrences(tree, {"expression"})
    assert [STMT[o.start:o.end] for o in occ] == ["!a"]


def test_occurrence_empty_rule_set():
    assert find_rule_occurrences(parse_text(wrap(STMT)), set()) == []


def test_occurrence_three_assigns_match_text_scan():
    body = "assign y = a;\n  assign w = b; // assign in a comment\nassign z = a ^ b;"
    src = "module m (input a, input b, output y);\n  wire w, z;\n" + body + "\nendmodule\n"
    tree = parse_text(src)
    occ = find_rule_occurrences(tree, {"continuous_assignment"})
    code = re.sub(r"//[^\n]*", lambda m: " " * len(m.group()), src)
    expected = [m.start() for m in re.finditer(r"\bassign\b", code)]
    assert [o.start for o in occ] == expected == sorted(expected)
    assert len(occ) == 3


def test_unknown_rule():
    with pytest.raises(UnknownRule):
        find_rule_occurrences(parse_text(wrap(STMT)), {"no_such_rule"})


@pytest.mark.parametrize("path", design_files(), ids=lambda p: p.stem)
def test_occurrence_completeness(path):
    tree = parse_text(path.read_text())
    for rule in MASKABLE_RULES.values():
        occ = find_rule_occurrences(tree, {rule})
        expected = [n for n in tree.root.walk() if n.kind == rule and not n.terminal]
        assert len(occ) == len(expected)
        for o in occ:
            node = tree.node_at(o.node_path)
            assert node.kind == o.rule_name and node.span == o.span


def test_nested_occurrences_reported():
    src = wrap("reg r;\nalways @* begin\n  if (a) begin\n    if (b) r = 1'b1;\n    else r = 1'b0;\n  end\n  else r = 1'b0;\nend")
    occ = find_rule_occurrences(parse_text(src), {"conditional_statement"})
    assert len(occ) == 2
    assert occ[0].start < occ[1].start and occ[1].end <= occ[0].end


# rule names -------------------------------------------------------------------


def test_rule_name_resolution():
    assert resolve_rule("CONT") == "continuous_assignment"
    assert resolve_rule("alws") == "always_construct"
    assert resolve_rule("continuous_assign") == "continuous_assignment"
    assert resolve_rule("expression") == "expression"
    assert short_name("case_statement") == "CASE"
    with pytest.raises(UnknownRule):
        resolve_rule("NOPE")


# tree import ------------------------------------------------------------------


@pytest.mark.parametrize("path", design_files()[:5], ids=lambda p: p.stem)
def test_export_import_round_trip(path):
    tree = parse_text(path.read_text())
    doc = export_parse_tree(tree)
    back = import_parse_tree(json.dumps(doc))
    assert back.root == tree.root
    assert back.source == tree.source


def test_import_rejects_child_outside_parent():
    doc = {"source": "assign y = a;", "root": {"kind": "r", "start": 0, "end": 5, "children": [
        {"kind": "t", "start": 0, "end": 9, "children": []}]}}
    with pytest.raises(SpanError):
        import_parse_tree(doc)


def test_import_rejects_overlapping_children():
    doc = {"source": "abcdef", "root": {"kind": "r", "start": 0, "end": 6, "children": [
        {"kind": "t", "start": 0, "end": 4, "children": []},
        {"kind": "t", "start": 3, "end": 6, "children": []}]}}
    with pytest.raises(SpanError):
        import_parse_tree(doc)


@pytest.mark.parametrize("doc", [
    "not json",
    {"root": {}},
    {"source": "x", "root": {"kind": "r", "start": 0, "children": []}},
    {"source": "x", "root": {"kind": "r", "start": "0", "end": 1, "children": []}},
    {"source": "x", "root": {"kind": "r", "start": True, "end": 1, "children": []}},
])
def test_import_schema_errors(doc):
    with pytest.raises(SchemaError):
        import_parse_tree(doc)


def test_handwritten_tree_masks_like_builtin_parser():
    src = "assign y = a;"
    doc = {"source": src, "root": {"kind": "continuous_assignment", "start": 0, "end": 13, "children": [
        {"kind": "kw", "start": 0, "end": 6, "children": []},
        {"kind": "expression", "start": 11, "end": 12, "children": []},
        {"kind": "punct", "start": 12, "end": 13, "children": []},
    ]}}
    # a terminal cannot be a rule occurrence; give the expression a child
    doc["root"]["children"][1]["children"] = [{"kind": "ident", "start": 11, "end": 12, "children": []}]
    foreign = import_parse_tree(doc)
    builtin = parse_text(src, "continuous_assignment")
    for rule in ("expression", "continuous_assignment"):
        a = find_rule_occurrences(foreign, {rule})
        b = find_rule_occurrences(builtin, {rule})
        assert [o.span for o in a] == [o.span for o in b]
        assert mask(src, a[0]).masked_source == mask(src, b[0]).masked_source


def test_import_foreign_grammar():
    doc = {"source": "x := 1", "root": {"kind": "stmt", "start": 0, "end": 6, "children": [
        {"kind": "name", "start": 0, "end": 1, "children": []},
        {"kind": "rhs", "start": 5, "end": 6, "children": [{"kind": "lit", "start": 5, "end": 6, "children": []}]},
    ]}}
    tree = import_parse_tree(doc)
    assert tree.grammar.start_symbol == "stmt"
    assert [o.span for o in find_rule_occurrences(tree, {"rhs"})] == [(5, 6)]


# property: random expressions survive parsing ------------------------------------

_idents = st.sampled_from(["a", "b", "c_1", "d$x"])
_atoms = st.one_of(_idents, st.sampled_from(["1'b0", "4'hF", "3", "8'd255", "2'b1?"]))


def _exprs():
    return st.recursive(
        _atoms,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["+", "-", "&", "|", "^", "==", "<", ">>", "&&"]), inner).map(
                lambda t: f"({t[0]} {t[1]} {t[2]})"),
            st.tuples(st.sampled_from(["~", "!", "-", "&", "^"]), inner).map(lambda t: f"{t[0]}{t[1]}"),
            st.tuples(inner, inner, inner).map(lambda t: f"{t[0]} ? {t[1]} : {t[2]}"),
            st.lists(inner, min_size=1, max_size=3).map(lambda xs: "{" + ", ".join(xs) + "}"),
        ),
        max_leaves=8,
    )


@settings(max_examples=200, deadline=None)
@given(_exprs(), st.sampled_from(["", " ", "  /* c */ ", "\n// note\n"]))
def test_random_expressions_round_trip(expr, trivia):
    src = f"assign y ={trivia}{expr};"
    tree = parse_text(src, "continuous_assignment")
    tree.validate()
    assert tree.reconstruct() == src
    occ = find_rule_occurrences(tree, {"expression"})
    assert src[occ[0].start:occ[0].end] == expr
