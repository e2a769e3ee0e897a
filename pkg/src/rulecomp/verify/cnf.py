"""Tseitin encoding of combinational netlists and DIMACS exchange."""

from __future__ import annotations

from dataclasses import dataclass, field

from rulecomp.errors import ElaborationError, SchemaError
from rulecomp.verify.netlist import Netlist


@dataclass
class CnfFormula:
    """Clauses over variables ``1..num_vars``; literals are signed ints.

    ``assumptions`` are unit literals kept apart from the clause database so
    the same encoding can be queried under different targets.
    ``var_of`` maps netlist nets to variables and ``names`` maps
    ``(input name, bit)`` to the variable of that input bit.
    """

    num_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)
    assumptions: list[int] = field(default_factory=list)
    var_of: dict[int, int] = field(default_factory=dict)
    names: dict[tuple[str, int], int] = field(default_factory=dict)

    def all_clauses(self) -> list[list[int]]:
        return self.clauses + [[a] for a in self.assumptions]


def _cone(netlist: Netlist, roots: list[int]) -> set[int]:
    by_out = {g.output: g for g in netlist.gates}
    seen: set[int] = set()
    stack = list(roots)
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        g = by_out.get(n)
        if g is not None:
            stack.extend(g.inputs)
    return seen


def tseitin(netlist: Netlist, target: int | None = None) -> CnfFormula:
    """Encode the cone of ``target`` (default: every output bit).

    With a target, the formula is satisfiable iff some input assignment
    drives ``target`` to 1. Input bits get the lowest variable numbers,
    then free nets, then gate outputs in topological order.
    """
    if netlist.flops:
        raise ElaborationError("Tseitin encoding needs a combinational netlist; unroll first")
    roots = [target] if target is not None else [b for bits in netlist.outputs.values() for b in bits]
    cone = _cone(netlist, roots)
    f = CnfFormula()

    def fresh() -> int:
        f.num_vars += 1
        return f.num_vars

    for group in (netlist.inputs, netlist.free):
        for name, bits in group.items():
            for i, b in enumerate(bits):
                if group is netlist.inputs:
                    v = fresh()
                    f.names[(name, i)] = v
                elif b in cone:
                    v = fresh()
                else:
                    continue
                f.var_of[b] = v
    add = f.clauses.append
    for g in netlist.topo_gates():
        if g.output not in cone:
            continue
        z = fresh()
        f.var_of[g.output] = z
        ins = [f.var_of[i] for i in g.inputs]
        op = g.op
        if op == "CONST0":
            add([-z])
        elif op == "CONST1":
            add([z])
        elif op == "NOT":
            a = ins[0]
            add([-z, -a])
            add([z, a])
        elif op == "AND":
            for a in ins:
                add([-z, a])
            add([z] + [-a for a in ins])
        elif op == "OR":
            for a in ins:
                add([z, -a])
            add([-z] + list(ins))
        elif op == "XOR":
            acc = ins[0]
            for j, b in enumerate(ins[1:]):
                out = z if j == len(ins) - 2 else fresh()
                add([-out, acc, b])
                add([-out, -acc, -b])
                add([out, -acc, b])
                add([out, acc, -b])
                acc = out
            if len(ins) == 1:
                add([-z, acc])
                add([z, -acc])
        elif op == "MUX":
            s, a0, a1 = ins
            add([s, -a0, z])
            add([s, a0, -z])
            add([-s, -a1, z])
            add([-s, a1, -z])
        else:
            raise ElaborationError(f"cannot encode gate op {op}")
    if target is not None:
        f.assumptions.append(f.var_of[target])
    return f


def export_dimacs(f: CnfFormula) -> str:
    """DIMACS CNF text; assumptions are written as unit clauses."""
    clauses = f.all_clauses()
    lines = [f"p cnf {f.num_vars} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    return "\n".join(lines) + "\n"


def import_dimacs(text: str) -> CnfFormula:
    f = CnfFormula()
    header = None
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise SchemaError(f"bad DIMACS header: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                f.clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        f.clauses.append(current)
    if header is None:
        raise SchemaError("missing DIMACS header")
    f.num_vars = header[0]
    if any(abs(l) > f.num_vars for c in f.clauses for l in c):
        raise SchemaError("literal exceeds declared variable count")
    return f
