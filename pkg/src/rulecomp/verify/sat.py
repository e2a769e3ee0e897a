"""A small deterministic CDCL SAT solver.

Unit propagation uses two watched literals per clause. Decisions take the
lowest-numbered unassigned variable and try ``False`` first; conflicts are
analysed to the first unique implication point and the learnt clause drives a
non-chronological backjump. There are no restarts and no randomness, so the
result (including the model) depends only on the input formula.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from rulecomp.verify.cnf import CnfFormula

SAT = "SAT"
UNSAT = "UNSAT"
TIMEOUT = "TIMEOUT"

_CHECK_EVERY = 256


@dataclass
class SatResult:
    status: str
    model: dict[int, bool] = field(default_factory=dict)
    conflicts: int = 0
    decisions: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == SAT

    def value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


def check_model(clauses, model: dict[int, bool]) -> bool:
    return all(any(model.get(abs(l), False) == (l > 0) for l in c) for c in clauses)


class _Solver:
    def __init__(self, num_vars: int, clauses: list[list[int]]):
        self.n = num_vars
        self.assign: list[bool | None] = [None] * (num_vars + 1)
        self.level = [0] * (num_vars + 1)
        self.reason: list[int | None] = [None] * (num_vars + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.next_var = 1
        self.conflicts = 0
        self.decisions = 0
        self.ok = True
        for c in clauses:
            self.add_input_clause(c)

    # assignment helpers -----------------------------------------------------

    def lit_true(self, lit: int) -> bool:
        return self.assign[abs(lit)] is (lit > 0)

    def lit_false(self, lit: int) -> bool:
        return self.assign[abs(lit)] is (lit < 0)

    def enqueue(self, lit: int, reason: int | None) -> None:
        v = abs(lit)
        self.assign[v] = lit > 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def watch(self, ci: int) -> None:
        c = self.clauses[ci]
        self.watches.setdefault(c[0], []).append(ci)
        self.watches.setdefault(c[1], []).append(ci)

    def add_input_clause(self, clause: list[int]) -> None:
        if not self.ok:
            return
        lits = list(dict.fromkeys(clause))
        if any(-l in lits for l in lits):
            return  # tautology
        lits = [l for l in lits if not self.lit_false(l)]
        if any(self.lit_true(l) for l in lits):
            return
        if not lits:
            self.ok = False
        elif len(lits) == 1:
            self.enqueue(lits[0], None)
            if self.propagate() is not None:
                self.ok = False
        else:
            self.clauses.append(lits)
            self.watch(len(self.clauses) - 1)

    # propagation ---------------------------------------------------------------

    def propagate(self) -> int | None:
        """Returns the index of a conflicting clause, or None."""
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            wl = self.watches.get(false_lit)
            if not wl:
                continue
            kept: list[int] = []
            k = 0
            while k < len(wl):
                ci = wl[k]
                k += 1
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                if self.lit_true(first):
                    kept.append(ci)
                    continue
                for m in range(2, len(c)):
                    if not self.lit_false(c[m]):
                        c[1], c[m] = c[m], c[1]
                        self.watches.setdefault(c[1], []).append(ci)
                        break
                else:
                    kept.append(ci)
                    if self.lit_false(first):
                        kept.extend(wl[k:])
                        self.watches[false_lit] = kept
                        return ci
                    self.enqueue(first, ci)
            self.watches[false_lit] = kept
        return None

    # conflict analysis ---------------------------------------------------------

    def analyze(self, confl: int) -> tuple[list[int], int]:
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur = len(self.trail_lim)
        clause = self.clauses[confl]
        while True:
            for q in clause:
                v = abs(q)
                if p is not None and v == abs(p):
                    continue
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    if self.level[v] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.assign[v] = None
            self.reason[v] = None
            if v < self.next_var:
                self.next_var = v
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def pick(self) -> int | None:
        v = self.next_var
        while v <= self.n and self.assign[v] is not None:
            v += 1
        self.next_var = v
        return v if v <= self.n else None

    # main loop --------------------------------------------------------------------

    def solve(self, deadline: float | None) -> str:
        if not self.ok:
            return UNSAT
        if self.propagate() is not None:
            return UNSAT
        ticks = 0
        while True:
            ticks += 1
            if deadline is not None and ticks % _CHECK_EVERY == 0 and time.monotonic() > deadline:
                return TIMEOUT
            confl = self.propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    return UNSAT
                learnt, back = self.analyze(confl)
                self.backtrack(back)
                if len(learnt) == 1:
                    self.enqueue(learnt[0], None)
                else:
                    self.clauses.append(learnt)
                    ci = len(self.clauses) - 1
                    self.watch(ci)
                    self.enqueue(learnt[0], ci)
                continue
            v = self.pick()
            if v is None:
                return SAT
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self.enqueue(-v, None)


def solve_clauses(num_vars: int, clauses: list[list[int]], timeout: float | None = 30.0) -> SatResult:
    deadline = None if timeout is None else time.monotonic() + timeout
    s = _Solver(num_vars, clauses)
    status = s.solve(deadline)
    res = SatResult(status, conflicts=s.conflicts, decisions=s.decisions)
    if status == SAT:
        res.model = {v: bool(s.assign[v]) for v in range(1, num_vars + 1)}
    return res


def sat_solve(f: CnfFormula, timeout: float | None = 30.0) -> SatResult:
    """Decide ``f`` together with its assumption literals.

    Returns status ``SAT`` (with a total model), ``UNSAT`` or ``TIMEOUT``.
    """
    return solve_clauses(f.num_vars, f.all_clauses(), timeout)
