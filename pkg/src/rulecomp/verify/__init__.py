"""Syntax and bounded equivalence checking of completed designs."""

from rulecomp.verify.check import (
    Counterexample,
    EqvVerdict,
    StxVerdict,
    Verdict,
    check_equivalence,
    check_syntax,
    reinsert,
    verify,
)
from rulecomp.verify.cnf import CnfFormula, export_dimacs, import_dimacs, tseitin
from rulecomp.verify.elaborate import elaborate, package_constants
from rulecomp.verify.miter import Miter, build_miter, unroll
from rulecomp.verify.netlist import Flop, Gate, Netlist, simulate
from rulecomp.verify.sat import SatResult, sat_solve

__all__ = [
    "CnfFormula",
    "Counterexample",
    "EqvVerdict",
    "Flop",
    "Gate",
    "Miter",
    "Netlist",
    "SatResult",
    "StxVerdict",
    "Verdict",
    "build_miter",
    "check_equivalence",
    "check_syntax",
    "elaborate",
    "export_dimacs",
    "import_dimacs",
    "package_constants",
    "reinsert",
    "sat_solve",
    "simulate",
    "tseitin",
    "unroll",
    "verify",
]
