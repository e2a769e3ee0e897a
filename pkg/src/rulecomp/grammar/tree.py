"""Parse tree data types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from rulecomp.errors import SpanError, UnknownRule
from rulecomp.grammar.lexer import TERMINAL_KINDS, Token


@dataclass(frozen=True)
class Grammar:
    rule_names: frozenset[str]
    terminal_kinds: frozenset[str]
    start_symbol: str

    def __post_init__(self):
        if self.start_symbol not in self.rule_names:
            raise ValueError(f"start symbol {self.start_symbol!r} is not a rule")
        overlap = self.rule_names & self.terminal_kinds
        if overlap:
            raise ValueError(f"rule and terminal names overlap: {sorted(overlap)}")


@dataclass(frozen=True, eq=True)
class Node:
    kind: str
    start: int
    end: int
    children: tuple["Node", ...] = ()
    terminal: bool = False

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def text(self, source: str) -> str:
        return source[self.start:self.end]

    def walk(self) -> Iterator["Node"]:
        """Pre-order (document order) traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def walk_paths(self, prefix: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "Node"]]:
        stack = [(prefix, self)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))

    def find(self, kind: str) -> "Node | None":
        """First child (not descendant) of the given kind."""
        for c in self.children:
            if c.kind == kind:
                return c
        return None

    def find_all(self, kind: str) -> list["Node"]:
        return [c for c in self.children if c.kind == kind]

    def shifted(self, delta: int) -> "Node":
        return Node(
            self.kind,
            self.start + delta,
            self.end + delta,
            tuple(c.shifted(delta) for c in self.children),
            self.terminal,
        )

    def terminals(self) -> Iterator["Node"]:
        for n in self.walk():
            if n.terminal:
                yield n


@dataclass(frozen=True)
class RuleOccurrence:
    rule_name: str
    start: int
    end: int
    node_path: tuple[int, ...]

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class ParseTree:
    source: str
    root: Node
    grammar: Grammar
    tokens: tuple[Token, ...] | None = field(default=None, compare=False)

    def node_at(self, path: tuple[int, ...]) -> Node:
        node = self.root
        for i in path:
            node = node.children[i]
        return node

    def reconstruct(self) -> str:
        """Terminal texts interleaved with the text between them."""
        parts = []
        pos = 0
        for t in self.root.terminals():
            parts.append(self.source[pos:t.start])
            parts.append(self.source[t.start:t.end])
            pos = t.end
        parts.append(self.source[pos:])
        return "".join(parts)

    def validate(self) -> None:
        check_spans(self.root, len(self.source))


def check_spans(root: Node, length: int) -> None:
    """Raise :class:`SpanError` unless spans nest and are ordered."""

    def visit(node: Node, lo: int, hi: int) -> None:
        if not (lo <= node.start <= node.end <= hi):
            raise SpanError(
                f"{node.kind} span [{node.start}, {node.end}) escapes parent [{lo}, {hi})"
            )
        if node.terminal:
            if node.children:
                raise SpanError(f"terminal {node.kind} has children")
            return
        prev_end = node.start
        for c in node.children:
            if c.start < prev_end:
                raise SpanError(f"{c.kind} at {c.start} overlaps its previous sibling")
            visit(c, node.start, node.end)
            prev_end = c.end
        if node.children and (
            node.children[0].start != node.start or node.children[-1].end != node.end
        ):
            raise SpanError(f"{node.kind} span is not the union of its children")

    visit(root, 0, length)


def find_rule_occurrences(tree: ParseTree, rules) -> list[RuleOccurrence]:
    """Every node whose kind is in ``rules``, in document order.

    Nested occurrences of the same rule are all reported.
    """
    rules = set(rules)
    unknown = rules - tree.grammar.rule_names
    if unknown:
        raise UnknownRule(f"unknown grammar rule(s): {', '.join(sorted(unknown))}")
    if not rules:
        return []
    return [
        RuleOccurrence(node.kind, node.start, node.end, path)
        for path, node in tree.root.walk_paths()
        if not node.terminal and node.kind in rules
    ]


def is_terminal_kind(kind: str) -> bool:
    return kind in TERMINAL_KINDS
