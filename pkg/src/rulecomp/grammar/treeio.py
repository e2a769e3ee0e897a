"""JSON exchange format for parse trees produced by other front ends.

Document shape::

    {"source": "...", "root": {"kind": k, "start": s, "end": e, "children": [...]}}

Nodes with an empty ``children`` list are terminals.
"""

from __future__ import annotations

import json
from typing import Any

from rulecomp.errors import SchemaError
from rulecomp.grammar.lexer import TERMINAL_KINDS
from rulecomp.grammar.parser import GRAMMAR
from rulecomp.grammar.tree import Grammar, Node, ParseTree, check_spans


def _node_to_json(node: Node) -> dict[str, Any]:
    return {
        "kind": node.kind,
        "start": node.start,
        "end": node.end,
        "children": [_node_to_json(c) for c in node.children],
    }


def export_parse_tree(tree: ParseTree) -> dict[str, Any]:
    return {"source": tree.source, "root": _node_to_json(tree.root)}


def _node_from_json(doc: Any, where: str) -> Node:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: node must be an object")
    for key, typ in (("kind", str), ("start", int), ("end", int), ("children", list)):
        if key not in doc:
            raise SchemaError(f"{where}: missing field {key!r}")
        if not isinstance(doc[key], typ) or (typ is int and isinstance(doc[key], bool)):
            raise SchemaError(f"{where}: field {key!r} must be {typ.__name__}")
    children = tuple(
        _node_from_json(c, f"{where}.children[{i}]") for i, c in enumerate(doc["children"])
    )
    return Node(doc["kind"], doc["start"], doc["end"], children, terminal=not children)


def import_parse_tree(serialized: str | bytes | dict[str, Any]) -> ParseTree:
    """Build a :class:`ParseTree` from an external tree document.

    Raises :class:`SchemaError` for a malformed document and
    :class:`SpanError` when node spans do not nest or are out of order.
    """
    if isinstance(serialized, (str, bytes)):
        try:
            doc = json.loads(serialized)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    else:
        doc = serialized
    if not isinstance(doc, dict) or not isinstance(doc.get("source"), str) or "root" not in doc:
        raise SchemaError("document must have a string 'source' and a 'root' node")
    root = _node_from_json(doc["root"], "root")
    check_spans(root, len(doc["source"]))

    rule_kinds = {n.kind for n in root.walk() if not n.terminal}
    terminal_kinds = {n.kind for n in root.walk() if n.terminal}
    if rule_kinds <= GRAMMAR.rule_names and terminal_kinds <= TERMINAL_KINDS:
        grammar = GRAMMAR
    else:
        terminal_kinds -= rule_kinds
        grammar = Grammar(frozenset(rule_kinds | {root.kind}), frozenset(terminal_kinds), root.kind)
    return ParseTree(doc["source"], root, grammar)
