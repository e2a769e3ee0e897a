"""Grammar rules that can be masked, with their short acronyms."""

from __future__ import annotations

from rulecomp.errors import UnknownRule
from rulecomp.grammar.parser import RULE_NAMES

# Acronym -> rule name, in the customary reporting order.
MASKABLE_RULES = {
    "PORT": "ansi_port_declaration",
    "PARAM": "parameter_declaration",
    "INST": "module_program_interface_instantiation",
    "CONT": "continuous_assignment",
    "NBLK": "nonblocking_assignment",
    "BLK": "blocking_assignment",
    "COND": "conditional_statement",
    "CASE": "case_statement",
    "ALWS": "always_construct",
}
ACRONYMS = {name: acr for acr, name in MASKABLE_RULES.items()}

# Spellings used by other SystemVerilog grammars for the same constructs.
ALIASES = {
    "continuous_assign": "continuous_assignment",
    "continous_assignment": "continuous_assignment",
    "module_instantiation": "module_program_interface_instantiation",
    "ALWAYS": "always_construct",
}

# Statement-like rules whose deletion keeps the source well formed.
DELETABLE_RULES = frozenset(
    MASKABLE_RULES[a] for a in ("CONT", "NBLK", "BLK", "COND", "CASE", "ALWS", "INST")
)


def resolve_rule(name: str, known: frozenset[str] = RULE_NAMES) -> str:
    """Map an acronym, alias or full name onto a rule name of ``known``."""
    if name in known:
        return name
    if name in MASKABLE_RULES and MASKABLE_RULES[name] in known:
        return MASKABLE_RULES[name]
    if name.upper() in MASKABLE_RULES and MASKABLE_RULES[name.upper()] in known:
        return MASKABLE_RULES[name.upper()]
    if name in ALIASES and ALIASES[name] in known:
        return ALIASES[name]
    raise UnknownRule(f"unknown grammar rule: {name}")


def short_name(rule: str) -> str:
    return ACRONYMS.get(rule, rule)
