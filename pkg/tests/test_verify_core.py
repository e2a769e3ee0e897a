from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CombDesign, random_comb_pair
from rulecomp.errors import (
    CombinationalLoop,
    ElaborationError,
    InterfaceMismatch,
    SchemaError,
    UnsupportedConstruct,
)
from rulecomp.grammar import parse_text
from rulecomp.verify import (
    Gate,
    Netlist,
    build_miter,
    elaborate,
    export_dimacs,
    import_dimacs,
    sat_solve,
    simulate,
    tseitin,
    unroll,
)
from rulecomp.verify.cnf import CnfFormula
from rulecomp.verify.netlist import NetBuilder, Simulator
from rulecomp.verify.sat import SAT, TIMEOUT, UNSAT, check_model, solve_clauses


def build(src: str, top: str, params=None) -> Netlist:
    return elaborate(parse_text(src), top, params)


NOT_SRC = "module inv (input a, output y);\n  assign y = !a;\nendmodule\n"
AND_SRC = "module g (input a, input b, output y);\n  assign y = a & b;\nendmodule\n"
OR_SRC = "module g (input a, input b, output y);\n  assign y = a | b;\nendmodule\n"


def counter_src(reset_value: int) -> str:
    return (
        "module counter (input clk, input rst, input en, output reg [2:0] count);\n"
        "  always @(posedge clk) begin\n"
        f"    if (rst) count <= 3'd{reset_value};\n"
        "    else if (en) count <= count + 1'b1;\n"
        "  end\nendmodule\n"
    )


# elaboration ------------------------------------------------------------------------


def test_not_gate_netlist():
    n = build(NOT_SRC, "inv")
    assert n.interface() == ({"a": 1}, {"y": 1})
    assert [g.op for g in n.gates] == ["NOT"]
    assert not n.flops
    assert [simulate(n, [{"a": v}])[0]["y"] for v in (0, 1)] == [1, 0]


def test_flop_from_clocked_always():
    n = build(counter_src(0), "counter")
    assert len(n.flops) == 3
    assert {f.clock for f in n.flops} == {"clk"}
    trace = [{"rst": 1}, {"en": 1}, {"en": 1}, {"en": 0}, {"en": 1}]
    assert [o["count"] for o in simulate(n, trace)] == [0, 0, 1, 2, 2]


def _ripple(a: int, b: int, cin: int, width: int) -> tuple[int, int]:
    s, c = 0, cin
    for i in range(width):
        x, y = (a >> i) & 1, (b >> i) & 1
        s |= (x ^ y ^ c) << i
        c = (x & y) | (c & (x ^ y))
    return s, c


def test_two_bit_adder_matches_ripple_carry():
    src = (
        "module add2 (input [1:0] a, input [1:0] b, output [1:0] s, output cout);\n"
        "  assign {cout, s} = a + b;\nendmodule\n"
    )
    n = build(src, "add2")
    rows = list(itertools.product(range(4), range(4)))
    assert len(rows) == 16
    outs = simulate(n, [{"a": a, "b": b} for a, b in rows])
    for (a, b), out in zip(rows, outs):
        assert (out["s"], out["cout"]) == _ripple(a, b, 0, 2)


def test_parameter_override():
    src = "module p #(parameter W = 2) (input [W-1:0] a, output [W-1:0] y);\n  assign y = ~a;\nendmodule\n"
    assert build(src, "p").interface() == ({"a": 2}, {"y": 2})
    assert build(src, "p", {"W": 5}).interface() == ({"a": 5}, {"y": 5})


def test_hierarchy_is_flattened(designs):
    path = next(p for p in designs if p.stem == "top_hier")
    n = build(path.read_text(), "top_hier")
    assert not n.free
    n.validate()


@pytest.mark.parametrize("seed", range(5))
def test_elaboration_agrees_with_expression_oracle(seed):
    rng = random.Random(seed)
    for _ in range(20):
        d, _ = random_comb_pair(rng)
        n = build(d.source(), "top")
        rows = list(d.rows())
        outs = simulate(n, rows)
        assert [o["y"] for o in outs] == [d.output(r) for r in rows], d.source()


def test_multiple_drivers():
    src = "module m (input a, output y);\n  assign y = a;\n  assign y = !a;\nendmodule\n"
    with pytest.raises(ElaborationError):
        build(src, "m")


def test_combinational_loop():
    src = "module m (input a, output y);\n  wire w;\n  assign w = a & y;\n  assign y = w;\nendmodule\n"
    with pytest.raises(CombinationalLoop):
        build(src, "m")


def test_unknown_top():
    with pytest.raises(ElaborationError):
        build(NOT_SRC, "missing")


def test_division_is_unsupported():
    src = "module m (input [3:0] a, output [3:0] y);\n  assign y = a / 4'd3;\nendmodule\n"
    with pytest.raises(UnsupportedConstruct):
        build(src, "m")


def test_undriven_wire_becomes_free_net():
    src = "module m (input a, output y);\n  wire u;\n  assign y = a & u;\nendmodule\n"
    n = build(src, "m")
    assert list(n.free) == ["u[0]"]
    assert simulate(n, [{"a": 1}], [{"u[0]": 1}])[0]["y"] == 1
    assert simulate(n, [{"a": 1}], [{"u[0]": 0}])[0]["y"] == 0


# netlist builder ------------------------------------------------------------------


def test_builder_folds_and_hashes():
    nb = NetBuilder()
    a, b = nb.new_net(), nb.new_net()
    assert nb.and_(a, nb.const(0)) == nb.const(0)
    assert nb.or_(a, nb.const(0)) == a
    assert nb.and_(a, b) == nb.and_(b, a)
    assert nb.not_(nb.not_(a)) == a
    assert nb.xor(a, a) == nb.const(0)
    assert nb.and_(a, nb.not_(a)) == nb.const(0)


def test_simulator_initial_state_override():
    n = build(counter_src(0), "counter")
    sim = Simulator(n, {f.q: 1 for f in n.flops})
    assert sim.step({})["count"] == 7


# miter and unrolling --------------------------------------------------------------


def _trigger_sat(a: Netlist, b: Netlist, k: int):
    un = unroll(build_miter(a, b), k)
    f = tseitin(un.netlist, un.trigger_any)
    return f, sat_solve(f)


def test_self_miter_is_unsat():
    n = build(AND_SRC, "g")
    _, res = _trigger_sat(n, n, 1)
    assert res.status == UNSAT


def test_and_or_miter_has_witness():
    f, res = _trigger_sat(build(AND_SRC, "g"), build(OR_SRC, "g"), 1)
    assert res.status == SAT
    a = res.value(f.names[("a@1", 0)])
    b = res.value(f.names[("b@1", 0)])
    assert (a and b) != (a or b)


def test_interface_mismatch():
    wide = "module g (input [1:0] a, input b, output y);\n  assign y = a[0] & b;\nendmodule\n"
    with pytest.raises(InterfaceMismatch):
        build_miter(build(AND_SRC, "g"), build(wide, "g"))
    with pytest.raises(InterfaceMismatch):
        build_miter(build(AND_SRC, "g"), build(NOT_SRC, "inv"))


def test_counters_identical_and_different_reset():
    same = build(counter_src(0), "counter")
    _, res = _trigger_sat(same, build(counter_src(0), "counter"), 3)
    assert res.status == UNSAT
    # both start at 0; the reset value only shows in the cycle after a reset
    _, res1 = _trigger_sat(same, build(counter_src(5), "counter"), 1)
    assert res1.status == UNSAT
    _, res2 = _trigger_sat(same, build(counter_src(5), "counter"), 2)
    assert res2.status == SAT


def test_unroll_names_inputs_per_cycle():
    un = unroll(build_miter(build(counter_src(0), "counter"), build(counter_src(0), "counter")), 3)
    assert set(un.netlist.inputs) == {f"{p}@{t}" for p in ("clk", "rst", "en") for t in (1, 2, 3)}
    assert not un.netlist.flops


def test_unroll_rejects_zero_depth():
    n = build(NOT_SRC, "inv")
    with pytest.raises(ValueError):
        unroll(build_miter(n, n), 0)


# Tseitin -------------------------------------------------------------------------


def _single_gate(op: str, arity: int) -> Netlist:
    ins = {f"i{j}": (j,) for j in range(arity)}
    return Netlist(inputs=ins, outputs={"z": (arity,)}, gates=[Gate(op, tuple(range(arity)), arity)],
                   num_nets=arity + 1)


def test_tseitin_clause_counts():
    assert len(tseitin(_single_gate("NOT", 1)).clauses) == 2
    assert len(tseitin(_single_gate("AND", 2)).clauses) == 3
    assert len(tseitin(_single_gate("OR", 2)).clauses) == 3
    assert len(tseitin(_single_gate("XOR", 2)).clauses) == 4
    assert len(tseitin(_single_gate("MUX", 3)).clauses) == 4


def test_tseitin_rejects_sequential():
    with pytest.raises(ElaborationError):
        tseitin(build(counter_src(0), "counter"))


def _random_netlist(rng: random.Random, n_inputs: int, n_gates: int) -> Netlist:
    gates = []
    net = n_inputs
    for _ in range(n_gates):
        op = rng.choice(["AND", "OR", "XOR", "NOT", "MUX"])
        arity = {"NOT": 1, "MUX": 3}.get(op, 2)
        gates.append(Gate(op, tuple(rng.randrange(net) for _ in range(arity)), net))
        net += 1
    return Netlist(inputs={f"x{i}": (i,) for i in range(n_inputs)}, outputs={"z": (net - 1,)},
                   gates=gates, num_nets=net)


@pytest.mark.parametrize("seed", range(10))
def test_tseitin_matches_brute_force(seed):
    rng = random.Random(seed)
    n = _random_netlist(rng, 5, 20)
    out = n.outputs["z"][0]
    f = tseitin(n, out)
    rows = [dict(zip(n.inputs, bits)) for bits in itertools.product((0, 1), repeat=5)]
    sim_ones = [r for r in rows if simulate(n, [r])[0]["z"] == 1]
    res = sat_solve(f)
    assert res.is_sat == bool(sim_ones)
    if res.is_sat:
        witness = {name: int(res.value(f.names[(name, 0)])) for name in n.inputs}
        assert simulate(n, [witness])[0]["z"] == 1
    # each input row fixed as assumptions is satisfiable iff the output is 1
    for r in rows[::4]:
        g = tseitin(n, out)
        g.assumptions += [g.names[(k, 0)] if v else -g.names[(k, 0)] for k, v in r.items()]
        assert sat_solve(g).is_sat == (r in sim_ones)


# DIMACS --------------------------------------------------------------------------


def test_dimacs_export():
    f = CnfFormula(num_vars=2, clauses=[[1, -2]])
    assert export_dimacs(f) == "p cnf 2 1\n1 -2 0\n"
    assert export_dimacs(CnfFormula()) == "p cnf 0 0\n"


def test_dimacs_round_trip():
    f = tseitin(_single_gate("MUX", 3), 3)
    g = import_dimacs(export_dimacs(f))
    assert g.num_vars == f.num_vars
    assert g.clauses == f.all_clauses()


@pytest.mark.parametrize("text", ["1 2 0\n", "p cnf 1 1\n2 0\n", "p dnf 1 1\n1 0\n"])
def test_dimacs_errors(text):
    with pytest.raises(SchemaError):
        import_dimacs(text)


# SAT solver ----------------------------------------------------------------------


def test_sat_small_cases():
    assert solve_clauses(1, [[1], [-1]]).status == UNSAT
    res = solve_clauses(2, [[1, 2], [-1]])
    assert res.status == SAT and res.model == {1: False, 2: True}
    assert solve_clauses(0, []).status == SAT
    assert solve_clauses(1, [[]]).status == UNSAT


def test_sat_timeout():
    # pigeonhole 11 into 10 is hard for plain CDCL
    holes, pigeons = 10, 11
    var = lambda p, h: p * holes + h + 1  # noqa: E731
    clauses = [[var(p, h) for h in range(holes)] for p in range(pigeons)]
    for h in range(holes):
        for p, q in itertools.combinations(range(pigeons), 2):
            clauses.append([-var(p, h), -var(q, h)])
    assert solve_clauses(pigeons * holes, clauses, timeout=0.05).status == TIMEOUT


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.lists(st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=3),
             max_size=30))))
def test_sat_agrees_with_enumeration(case):
    n, clauses = case
    res = solve_clauses(n, clauses)
    any_model = any(
        all(any((lit > 0) == bits[abs(lit) - 1] for lit in c) for c in clauses)
        for bits in itertools.product((False, True), repeat=n)
    )
    assert res.is_sat == any_model
    if res.is_sat:
        assert check_model(clauses, res.model)
    assert solve_clauses(n, clauses).model == res.model


def test_comb_design_helper_is_consistent():
    d = CombDesign({"a": 1}, 1, ("un", "~", ("id", "a")))
    assert [d.output(r) for r in d.rows()] == [1, 0]
