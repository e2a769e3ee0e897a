from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import design_files
from rulecomp.errors import (
    MacroArityMismatch,
    MissingInclude,
    OutOfRange,
    RecursiveInclude,
    UnbalancedConditional,
)
from rulecomp.grammar import parse_text
from rulecomp.preprocess import locate, preprocess, preprocess_sources


def test_two_files_concatenate(tmp_path):
    a = tmp_path / "a.v"
    b = tmp_path / "b.v"
    a.write_text("module a; endmodule")
    b.write_text("module b; endmodule")
    unit = preprocess([a, b])
    assert "module a; endmodule" in unit.text and "module b; endmodule" in unit.text
    assert unit.text.index("module a") < unit.text.index("module b")
    files = [o.file for o in unit.origin_map]
    assert files == [str(a), str(b)]
    parse_text(unit.text)


def test_object_macro_expansion():
    unit = preprocess_sources([("x.v", "`define W 8\nwire [`W-1:0] x;")])
    assert unit.text == "wire [8-1:0] x;"
    assert "W" in unit.defines_used


def test_false_ifdef_elided():
    unit = preprocess_sources([("x.v", "`ifdef MISSING\nfoo\n`endif")])
    assert "foo" not in unit.text


def test_define_from_configuration():
    unit = preprocess_sources([("x.v", "`ifdef FAST\nfast\n`else\nslow\n`endif\n")], {"FAST": None})
    assert "fast" in unit.text and "slow" not in unit.text


def test_function_macro_and_defaults():
    src = "`define ADD(x, y=1) ((x)+(y))\nassign z = `ADD(a, b);\nassign w = `ADD(c);\n"
    unit = preprocess_sources([("x.v", src)])
    assert "assign z = ((a)+(b));" in unit.text
    assert "assign w = ((c)+(1));" in unit.text


def test_macro_arity_mismatch():
    with pytest.raises(MacroArityMismatch):
        preprocess_sources([("x.v", "`define F(a, b) a+b\nassign y = `F(1, 2, 3);\n")])


def test_undef_and_ifndef():
    src = "`define A\n`undef A\n`ifndef A\nkept\n`endif\n"
    assert "kept" in preprocess_sources([("x.v", src)]).text


def test_elsif_chain():
    src = "`ifdef A\na\n`elsif B\nb\n`elsif C\nc\n`else\nd\n`endif\n"
    words = lambda defs: preprocess_sources([("x.v", src)], defs).text.split()  # noqa: E731
    assert words({"B": None, "C": None}) == ["b"]
    assert words({"C": None}) == ["c"]
    assert words({}) == ["d"]
    assert words({"A": None, "B": None}) == ["a"]


@pytest.mark.parametrize("src", ["`ifdef A\nx\n", "`endif\n", "`else\n", "`ifdef A\n`else\n`else\n`endif\n"])
def test_unbalanced_conditionals(src):
    with pytest.raises(UnbalancedConditional):
        preprocess_sources([("x.v", src)])


def test_timescale_stripped():
    unit = preprocess_sources([("x.v", "`timescale 1ns/1ps\nmodule m; endmodule\n")])
    assert "timescale" not in unit.text
    assert "`" not in unit.text


def test_include_search_order(tmp_path):
    (tmp_path / "inc").mkdir()
    (tmp_path / "rtl").mkdir()
    (tmp_path / "inc" / "defs.vh").write_text("`define WIDTH 4\n")
    (tmp_path / "rtl" / "defs.vh").write_text("`define WIDTH 2\n")
    top = tmp_path / "rtl" / "top.v"
    top.write_text('`include "defs.vh"\nwire [`WIDTH-1:0] w;\n')
    unit = preprocess([top], include_dirs=[tmp_path / "inc"])
    # the including file's directory wins over include_dirs
    assert "wire [2-1:0] w;" in unit.text
    (tmp_path / "rtl" / "defs.vh").unlink()
    unit = preprocess([top], include_dirs=[tmp_path / "inc"])
    assert "wire [4-1:0] w;" in unit.text


def test_included_text_keeps_its_origin(tmp_path):
    (tmp_path / "body.vh").write_text("assign y = a;\n")
    top = tmp_path / "m.v"
    top.write_text('module m (input a, output y);\n`include "body.vh"\nendmodule\n')
    unit = preprocess([top])
    off = unit.text.index("assign")
    assert locate(unit, off) == (str(tmp_path / "body.vh"), 1)
    assert locate(unit, unit.text.index("endmodule")) == (str(top), 3)


def test_missing_include(tmp_path):
    top = tmp_path / "m.v"
    top.write_text('`include "nope.vh"\n')
    with pytest.raises(MissingInclude):
        preprocess([top])


def test_missing_source_file(tmp_path):
    with pytest.raises(MissingInclude):
        preprocess([tmp_path / "absent.v"])


def test_recursive_include(tmp_path):
    (tmp_path / "a.vh").write_text('`include "b.vh"\n')
    (tmp_path / "b.vh").write_text('`include "a.vh"\n')
    top = tmp_path / "top.v"
    top.write_text('`include "a.vh"\n')
    with pytest.raises(RecursiveInclude):
        preprocess([top])


def test_recursive_macro():
    with pytest.raises(RecursiveInclude):
        preprocess_sources([("x.v", "`define A `B\n`define B `A\nwire w = `A;\n")])


# locate -------------------------------------------------------------------------


def test_locate(tmp_path):
    a = tmp_path / "a.v"
    b = tmp_path / "b.v"
    a.write_text("module a;\n  wire x;\nendmodule\n")
    b.write_text("module b;\n\n  wire y;\nendmodule\n")
    unit = preprocess([a, b])
    assert locate(unit, 0) == (str(a), 1)
    # three lines in a.v, so "wire y" is on line 3 of b.v
    assert locate(unit, unit.text.index("wire y")) == (str(b), 3)
    assert locate(unit, unit.text.index("wire x")) == (str(a), 2)
    with pytest.raises(OutOfRange):
        locate(unit, len(unit.text))
    with pytest.raises(OutOfRange):
        locate(unit, -1)


@pytest.mark.parametrize("path", design_files(), ids=lambda p: p.stem)
def test_origin_totality_and_idempotence(path):
    unit = preprocess([path])
    assert unit.text == path.read_text()
    spans = unit.origin_map
    assert spans[0].start == 0 and spans[-1].end == len(unit.text)
    for left, right in zip(spans, spans[1:]):
        assert left.end == right.start
    lines = path.read_text().split("\n")
    for off in range(0, len(unit.text), 7):
        f, line = locate(unit, off)
        assert f == str(path)
        assert unit.text[:off].count("\n") + 1 == line
    assert preprocess_sources([("again.v", unit.text)]).text == unit.text
    assert len(lines) >= 1


# property: conditional soundness ---------------------------------------------------

_MACROS = ["A", "B", "C"]


def _blocks(depth: int):
    word = st.integers(0, 999).map(lambda i: ("word", f"w{i}"))
    if depth == 0:
        return st.lists(word, min_size=1, max_size=3)
    cond = st.tuples(
        st.sampled_from(["ifdef", "ifndef"]),
        st.sampled_from(_MACROS),
        _blocks(depth - 1),
        st.one_of(st.none(), _blocks(depth - 1)),
    ).map(lambda t: ("cond", *t))
    return st.lists(st.one_of(word, cond), min_size=1, max_size=3)


def _render(blocks) -> str:
    out = []
    for b in blocks:
        if b[0] == "word":
            out.append(b[1] + "\n")
        else:
            _, kind, name, then, other = b
            out.append(f"`{kind} {name}\n{_render(then)}")
            if other is not None:
                out.append(f"`else\n{_render(other)}")
            out.append("`endif\n")
    return "".join(out)


def _expected(blocks, defined: set[str]) -> list[str]:
    words = []
    for b in blocks:
        if b[0] == "word":
            words.append(b[1])
        else:
            _, kind, name, then, other = b
            take = (name in defined) == (kind == "ifdef")
            words += _expected(then if take else (other or []), defined)
    return words


@settings(max_examples=150, deadline=None)
@given(_blocks(5), st.sets(st.sampled_from(_MACROS)))
def test_conditional_soundness(blocks, defined):
    src = _render(blocks)
    unit = preprocess_sources([("x.v", src)], {d: None for d in defined})
    assert unit.text.split() == _expected(blocks, defined)
