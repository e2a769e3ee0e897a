from rulecomp.grammar.lexer import Token, TokenStream, count_lexer_tokens, tokenize
from rulecomp.grammar.parser import GRAMMAR, RULE_NAMES, parse, parse_text
from rulecomp.grammar.rules import MASKABLE_RULES, resolve_rule, short_name
from rulecomp.grammar.tree import (
    Grammar,
    Node,
    ParseTree,
    RuleOccurrence,
    check_spans,
    find_rule_occurrences,
)
from rulecomp.grammar.treeio import export_parse_tree, import_parse_tree

__all__ = [
    "GRAMMAR",
    "Grammar",
    "Node",
    "ParseTree",
    "RULE_NAMES",
    "RuleOccurrence",
    "MASKABLE_RULES",
    "Token",
    "TokenStream",
    "check_spans",
    "count_lexer_tokens",
    "export_parse_tree",
    "find_rule_occurrences",
    "import_parse_tree",
    "parse",
    "parse_text",
    "resolve_rule",
    "short_name",
    "tokenize",
]
