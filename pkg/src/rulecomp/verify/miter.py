"""Miter construction and time-frame unrolling."""

from __future__ import annotations

from dataclasses import dataclass

from rulecomp.errors import InterfaceMismatch
from rulecomp.verify.netlist import Flop, NetBuilder, Netlist


@dataclass
class Miter:
    """Two designs fed from shared inputs; ``trigger`` is 1 iff any output differs.

    Free nets private to one copy carry an ``A:``/``B:`` name prefix; those
    both designs have under the same name are shared.
    """

    netlist: Netlist
    trigger: int
    output_pairs: dict[str, tuple[tuple[int, ...], tuple[int, ...]]]
    flops_a: list[Flop]
    flops_b: list[Flop]


def _copy_into(nb: NetBuilder, src: Netlist, inputs: dict[str, tuple[int, ...]], free: dict):
    """Copy ``src`` gate by gate into ``nb``; returns (net map, flops).

    ``free`` maps free-net names to nets already created for them; names
    not present yet get fresh nets and are added.
    """
    m: dict[int, int] = {}
    for name, bits in src.inputs.items():
        for o, n in zip(bits, inputs[name]):
            m[o] = n
    for name, bits in src.free.items():
        if name not in free or len(free[name]) != len(bits):
            free[name] = tuple(nb.new_net() for _ in bits)
        m.update(zip(bits, free[name]))
    for f in src.flops:
        m[f.q] = nb.new_net()
    for g in src.topo_gates():
        m[g.output] = nb.raw(g.op, tuple(m[i] for i in g.inputs))
    flops = [Flop(m[f.d], m[f.q], f.clock, f.init) for f in src.flops]
    return m, flops


def build_miter(a: Netlist, b: Netlist) -> Miter:
    """Raises :class:`InterfaceMismatch` unless port names and widths agree."""
    ia, oa = a.interface()
    ib, ob = b.interface()
    problems = []
    for kind, x, y in (("input", ia, ib), ("output", oa, ob)):
        for name in sorted(set(x) | set(y)):
            if name not in x or name not in y:
                problems.append(f"{kind} {name} exists in only one design")
            elif x[name] != y[name]:
                problems.append(f"{kind} {name} is {x[name]} bits vs {y[name]} bits")
    if problems:
        raise InterfaceMismatch("; ".join(problems))

    nb = NetBuilder(hashing=False)
    shared = {name: tuple(nb.new_net() for _ in range(w)) for name, w in ia.items()}
    # An undriven signal present under the same name in both designs is one
    # unknown shared by both copies; the rest are private to their copy.
    free_a: dict[str, tuple[int, ...]] = {}
    ma, flops_a = _copy_into(nb, a, shared, free_a)
    free_b = {k: v for k, v in free_a.items() if k in b.free}
    mb, flops_b = _copy_into(nb, b, shared, free_b)
    free = {}
    for k, v in free_a.items():
        free[k if k in b.free and free_b.get(k) == v else f"A:{k}"] = v
    for k, v in free_b.items():
        if not (k in free_a and free_a[k] == v):
            free[f"B:{k}"] = v
    pairs = {}
    diffs = []
    for name in oa:
        pa = tuple(ma[n] for n in a.outputs[name])
        pb = tuple(mb[n] for n in b.outputs[name])
        pairs[name] = (pa, pb)
        diffs += [nb.raw("XOR", (x, y)) for x, y in zip(pa, pb)]
    if not diffs:
        trigger = nb.raw("CONST0", ())
    elif len(diffs) == 1:
        trigger = diffs[0]
    else:
        trigger = nb.raw("OR", tuple(diffs))
    outputs = {"trigger": (trigger,)}
    net = Netlist(
        inputs=shared,
        outputs=outputs,
        gates=list(nb.gates),
        flops=flops_a + flops_b,
        free=free,
        num_nets=nb.num_nets,
    )
    return Miter(net, trigger, pairs, flops_a, flops_b)


@dataclass
class Unrolled:
    """A combinational netlist covering ``k`` cycles from the initial state.

    Input ``x`` of cycle ``t`` (1-based) is named ``x@t``; ``trigger_any`` is
    the OR of the per-cycle miter triggers.
    """

    netlist: Netlist
    trigger_any: int
    k: int


def unroll(m: Miter, k: int) -> Unrolled:
    if k < 1:
        raise ValueError("unroll depth must be at least 1")
    src = m.netlist
    if not src.flops:
        k = 1  # nothing carries over between cycles
    nb = NetBuilder(hashing=True)
    order = src.topo_gates()
    inputs: dict[str, tuple[int, ...]] = {}
    free: dict[str, tuple[int, ...]] = {}
    state = {f.q: nb.const(f.init) for f in src.flops}
    triggers = []
    for t in range(1, k + 1):
        v: dict[int, int] = dict(state)
        for name, bits in src.inputs.items():
            new = tuple(nb.new_net() for _ in bits)
            inputs[f"{name}@{t}"] = new
            v.update(zip(bits, new))
        for name, bits in src.free.items():
            new = tuple(nb.new_net() for _ in bits)
            free[f"{name}@{t}"] = new
            v.update(zip(bits, new))
        for g in order:
            v[g.output] = nb.apply(g.op, tuple(v[i] for i in g.inputs))
        triggers.append(v[m.trigger])
        state = {f.q: v[f.d] for f in src.flops}
    trigger_any = nb.or_all(triggers)
    net = Netlist(
        inputs=inputs,
        outputs={"trigger_any": (trigger_any,)},
        gates=list(nb.gates),
        flops=[],
        free=free,
        num_nets=nb.num_nets,
    )
    return Unrolled(net, trigger_any, k)
