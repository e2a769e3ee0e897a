"""Gate-level netlists, a hashing netlist builder and a cycle simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

from rulecomp.errors import CombinationalLoop, ElaborationError

GATE_OPS = ("AND", "OR", "NOT", "XOR", "MUX", "CONST0", "CONST1")


@dataclass(frozen=True)
class Gate:
    op: str
    inputs: tuple[int, ...]
    output: int


@dataclass(frozen=True)
class Flop:
    d: int
    q: int
    clock: str
    init: int = 0


@dataclass
class Netlist:
    """Bit vectors are tuples of net ids, least significant bit first.

    ``free`` holds nets without a real driver (undriven wires, unconnected
    inputs of instances). They behave like inputs that the environment may
    set arbitrarily, independently in every cycle.
    """

    inputs: dict[str, tuple[int, ...]] = field(default_factory=dict)
    outputs: dict[str, tuple[int, ...]] = field(default_factory=dict)
    gates: list[Gate] = field(default_factory=list)
    flops: list[Flop] = field(default_factory=list)
    free: dict[str, tuple[int, ...]] = field(default_factory=dict)
    num_nets: int = 0

    def input_width(self, name: str) -> int:
        return len(self.inputs[name])

    def interface(self) -> tuple[dict[str, int], dict[str, int]]:
        return (
            {k: len(v) for k, v in self.inputs.items()},
            {k: len(v) for k, v in self.outputs.items()},
        )

    def drivers(self) -> dict[int, object]:
        drv: dict[int, object] = {}

        def claim(net: int, what: object) -> None:
            if net in drv:
                raise ElaborationError(f"net {net} has more than one driver")
            drv[net] = what

        for name, bits in self.inputs.items():
            for b in bits:
                claim(b, ("input", name))
        for name, bits in self.free.items():
            for b in bits:
                claim(b, ("free", name))
        for g in self.gates:
            claim(g.output, g)
        for f in self.flops:
            claim(f.q, f)
        return drv

    def topo_gates(self) -> list[Gate]:
        """Gates in dependency order; raises on a combinational cycle."""
        by_out = {g.output: g for g in self.gates}
        order: list[Gate] = []
        state: dict[int, int] = {}
        for g in self.gates:
            if state.get(g.output):
                continue
            stack = [(g, 0)]
            state[g.output] = 1
            while stack:
                gate, i = stack.pop()
                if i < len(gate.inputs):
                    stack.append((gate, i + 1))
                    src = by_out.get(gate.inputs[i])
                    if src is None:
                        continue
                    s = state.get(src.output, 0)
                    if s == 1:
                        raise CombinationalLoop(f"combinational cycle through net {src.output}")
                    if s == 0:
                        state[src.output] = 1
                        stack.append((src, 0))
                else:
                    state[gate.output] = 2
                    order.append(gate)
        return order

    def validate(self) -> None:
        drv = self.drivers()
        for name, bits in self.outputs.items():
            for b in bits:
                if b not in drv:
                    raise ElaborationError(f"output {name} has an undriven bit (net {b})")
        for g in self.gates:
            if g.op not in GATE_OPS:
                raise ElaborationError(f"unknown gate op {g.op}")
            for i in g.inputs:
                if i not in drv:
                    raise ElaborationError(f"gate input net {i} is undriven")
        for f in self.flops:
            if f.d not in drv:
                raise ElaborationError(f"flop input net {f.d} is undriven")
        self.topo_gates()


class NetBuilder:
    """Creates gates with constant folding and structural hashing.

    ``hashing=False`` gives a plain builder that records every gate as
    requested, which is what copies of existing netlists use.
    """

    def __init__(self, hashing: bool = True):
        self.hashing = hashing
        self.num_nets = 0
        self.gates: list[Gate] = []
        self._cache: dict[tuple, int] = {}
        self._const: dict[int, int] = {}
        self._const_of: dict[int, int] = {}
        self._not_of: dict[int, int] = {}

    def new_net(self) -> int:
        n = self.num_nets
        self.num_nets += 1
        return n

    def const(self, value: int) -> int:
        value = 1 if value else 0
        if value not in self._const:
            net = self.new_net()
            self.gates.append(Gate("CONST1" if value else "CONST0", (), net))
            self._const[value] = net
            self._const_of[net] = value
        return self._const[value]

    def const_value(self, net: int) -> int | None:
        return self._const_of.get(net)

    def _make(self, op: str, inputs: tuple[int, ...]) -> int:
        key = (op, inputs)
        if self.hashing and key in self._cache:
            return self._cache[key]
        net = self.new_net()
        self.gates.append(Gate(op, inputs, net))
        if self.hashing:
            self._cache[key] = net
        return net

    def raw(self, op: str, inputs: tuple[int, ...]) -> int:
        """Add a gate exactly as given (no folding)."""
        if op == "CONST0" or op == "CONST1":
            if self.hashing:
                return self.const(op == "CONST1")
            net = self.new_net()
            self.gates.append(Gate(op, (), net))
            return net
        net = self.new_net()
        self.gates.append(Gate(op, inputs, net))
        return net

    def not_(self, a: int) -> int:
        if not self.hashing:
            return self.raw("NOT", (a,))
        c = self.const_value(a)
        if c is not None:
            return self.const(1 - c)
        if a in self._not_of:
            return self._not_of[a]
        net = self._make("NOT", (a,))
        self._not_of[net] = a
        self._not_of.setdefault(a, net)
        return net

    def and_(self, a: int, b: int) -> int:
        if not self.hashing:
            return self.raw("AND", (a, b))
        ca, cb = self.const_value(a), self.const_value(b)
        if ca == 0 or cb == 0:
            return self.const(0)
        if ca == 1:
            return b
        if cb == 1:
            return a
        if a == b:
            return a
        if self._not_of.get(a) == b:
            return self.const(0)
        return self._make("AND", (min(a, b), max(a, b)))

    def or_(self, a: int, b: int) -> int:
        if not self.hashing:
            return self.raw("OR", (a, b))
        ca, cb = self.const_value(a), self.const_value(b)
        if ca == 1 or cb == 1:
            return self.const(1)
        if ca == 0:
            return b
        if cb == 0:
            return a
        if a == b:
            return a
        if self._not_of.get(a) == b:
            return self.const(1)
        return self._make("OR", (min(a, b), max(a, b)))

    def xor(self, a: int, b: int) -> int:
        if not self.hashing:
            return self.raw("XOR", (a, b))
        ca, cb = self.const_value(a), self.const_value(b)
        if ca is not None and cb is not None:
            return self.const(ca ^ cb)
        if ca == 0:
            return b
        if cb == 0:
            return a
        if ca == 1:
            return self.not_(b)
        if cb == 1:
            return self.not_(a)
        if a == b:
            return self.const(0)
        if self._not_of.get(a) == b:
            return self.const(1)
        return self._make("XOR", (min(a, b), max(a, b)))

    def xnor(self, a: int, b: int) -> int:
        return self.not_(self.xor(a, b))

    def mux(self, sel: int, a0: int, a1: int) -> int:
        """``a1`` when ``sel`` is 1, else ``a0``."""
        if not self.hashing:
            return self.raw("MUX", (sel, a0, a1))
        cs = self.const_value(sel)
        if cs is not None:
            return a1 if cs else a0
        if a0 == a1:
            return a0
        c0, c1 = self.const_value(a0), self.const_value(a1)
        if c0 == 0 and c1 == 1:
            return sel
        if c0 == 1 and c1 == 0:
            return self.not_(sel)
        if c0 == 0:
            return self.and_(sel, a1)
        if c1 == 1:
            return self.or_(sel, a0)
        if c1 == 0:
            return self.and_(self.not_(sel), a0)
        if c0 == 1:
            return self.or_(self.not_(sel), a1)
        return self._make("MUX", (sel, a0, a1))

    def and_all(self, nets) -> int:
        out = self.const(1)
        for n in nets:
            out = self.and_(out, n)
        return out

    def or_all(self, nets) -> int:
        out = self.const(0)
        for n in nets:
            out = self.or_(out, n)
        return out

    def xor_all(self, nets) -> int:
        out = self.const(0)
        for n in nets:
            out = self.xor(out, n)
        return out

    def apply(self, op: str, inputs: tuple[int, ...]) -> int:
        """Re-create a gate of a given op through the folding interface."""
        if op == "CONST0":
            return self.const(0) if self.hashing else self.raw(op, ())
        if op == "CONST1":
            return self.const(1) if self.hashing else self.raw(op, ())
        if op == "NOT":
            return self.not_(inputs[0])
        if op == "MUX":
            return self.mux(*inputs)
        if op == "AND":
            return self.and_all(inputs) if self.hashing else self.raw(op, inputs)
        if op == "OR":
            return self.or_all(inputs) if self.hashing else self.raw(op, inputs)
        if op == "XOR":
            return self.xor_all(inputs) if self.hashing else self.raw(op, inputs)
        raise ValueError(f"unknown gate op {op}")


def eval_gate(op: str, vals: list[int]) -> int:
    if op == "CONST0":
        return 0
    if op == "CONST1":
        return 1
    if op == "NOT":
        return 1 - vals[0]
    if op == "AND":
        return int(all(vals))
    if op == "OR":
        return int(any(vals))
    if op == "XOR":
        r = 0
        for v in vals:
            r ^= v
        return r
    if op == "MUX":
        return vals[2] if vals[0] else vals[1]
    raise ValueError(op)


def to_bits(value: int, width: int) -> list[int]:
    return [(value >> i) & 1 for i in range(width)]


def from_bits(bits) -> int:
    return sum(b << i for i, b in enumerate(bits))


class Simulator:
    """Cycle-based two-valued simulation of a :class:`Netlist`.

    Outputs of a cycle are computed from the current state and the inputs of
    that cycle; the state then advances to the flop ``d`` values.
    """

    def __init__(self, netlist: Netlist, init: dict[int, int] | None = None):
        self.netlist = netlist
        self.order = netlist.topo_gates()
        self.state = {f.q: f.init for f in netlist.flops}
        if init:
            self.state.update(init)

    def step(self, inputs: dict[str, int], free: dict[str, int] | None = None) -> dict[str, int]:
        val: dict[int, int] = dict(self.state)
        for name, bits in self.netlist.inputs.items():
            v = inputs.get(name, 0)
            for i, b in enumerate(bits):
                val[b] = (v >> i) & 1
        free = free or {}
        for name, bits in self.netlist.free.items():
            v = free.get(name, 0)
            for i, b in enumerate(bits):
                val[b] = (v >> i) & 1
        for g in self.order:
            val[g.output] = eval_gate(g.op, [val[i] for i in g.inputs])
        outs = {name: from_bits(val[b] for b in bits) for name, bits in self.netlist.outputs.items()}
        self.state = {f.q: val[f.d] for f in self.netlist.flops}
        return outs


def simulate(netlist: Netlist, trace: list[dict[str, int]], free_trace=None) -> list[dict[str, int]]:
    sim = Simulator(netlist)
    free_trace = free_trace or [{} for _ in trace]
    return [sim.step(inp, fr) for inp, fr in zip(trace, free_trace)]
