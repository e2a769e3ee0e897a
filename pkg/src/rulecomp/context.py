"""Module/package dependency graphs, context pruning and token budgets."""

from __future__ import annotations

import bisect
import shlex
import subprocess
from collections import deque
from dataclasses import dataclass, field

from rulecomp.errors import NoEnclosingUnit, TokenizerFailure
from rulecomp.grammar.lexer import count_lexer_tokens
from rulecomp.grammar.tree import ParseTree

DIRECT = "direct"
TRANSITIVE = "transitive"
INSTANTIATION = "instantiation"
IMPORT = "import"


@dataclass(frozen=True)
class Unit:
    name: str
    kind: str  # "module" or "package"
    start: int
    end: int


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: str
    external: bool = False


@dataclass
class DependencyGraph:
    units: dict[str, Unit] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)

    def deps(self, name: str) -> list[str]:
        """Direct, resolvable dependencies of ``name`` (deduplicated, in edge order)."""
        out: list[str] = []
        for e in self.edges:
            if e.src == name and not e.external and e.dst not in out:
                out.append(e.dst)
        return out

    def closure(self, name: str) -> list[str]:
        """``name`` plus everything reachable from it (breadth first)."""
        seen = [name]
        queue = deque([name])
        while queue:
            for d in self.deps(queue.popleft()):
                if d not in seen:
                    seen.append(d)
                    queue.append(d)
        return seen

    def external(self) -> list[Edge]:
        return [e for e in self.edges if e.external]


def build_dependency_graph(tree: ParseTree) -> DependencyGraph:
    """Units are top-level modules and packages.

    A module depends on the modules it instantiates and on the packages it
    imports or references with ``pkg::name``. Targets missing from the
    source become edges flagged ``external``.
    """
    src = tree.source
    g = DependencyGraph()
    decls = []
    for u in tree.root.children:
        name = u.children[1].children[0].text(src)
        kind = "module" if u.kind == "module_declaration" else "package"
        g.units[name] = Unit(name, kind, u.start, u.end)
        decls.append((name, u))
    seen: set[tuple[str, str, str]] = set()
    for name, u in decls:
        for n in u.walk():
            if n.kind == "module_program_interface_instantiation":
                dst, kind = n.children[0].children[0].text(src), INSTANTIATION
            elif n.kind == "package_import_item":
                dst, kind = n.children[0].children[0].text(src), IMPORT
            elif n.kind == "scoped_identifier":
                dst, kind = n.children[0].children[0].text(src), IMPORT
            else:
                continue
            if (name, dst, kind) in seen:
                continue
            seen.add((name, dst, kind))
            g.edges.append(Edge(name, dst, kind, external=dst not in g.units))
    return g


def enclosing_unit(graph: DependencyGraph, span: tuple[int, int]) -> str:
    start, end = span
    for u in graph.units.values():
        if u.start <= start and end <= u.end and start < u.end:
            return u.name
    raise NoEnclosingUnit(f"span [{start}, {end}) is not inside any module or package")


@dataclass(frozen=True)
class Remap:
    """Monotone offset map from the original text into a pruned text.

    Each kept segment is ``(orig_start, orig_end, new_start)``.
    """

    segments: tuple[tuple[int, int, int], ...]

    def offset(self, pos: int) -> int:
        starts = [s[0] for s in self.segments]
        i = bisect.bisect_right(starts, pos) - 1
        if i < 0 or pos > self.segments[i][1]:
            raise NoEnclosingUnit(f"offset {pos} was pruned away")
        s, _, n = self.segments[i]
        return n + pos - s

    def span(self, span: tuple[int, int]) -> tuple[int, int]:
        start = self.offset(span[0])
        end = self.offset(span[1])
        if end - start != span[1] - span[0]:
            raise NoEnclosingUnit(f"span {span} straddles a pruned region")
        return start, end


@dataclass(frozen=True)
class PrunedContext:
    text: str
    units: tuple[str, ...]
    remap: Remap


UNIT_SEPARATOR = "\n\n"


def prune_context(unit_text: str, graph: DependencyGraph, home: str, mode: str = TRANSITIVE) -> PrunedContext:
    """Keep ``home`` and its dependencies, in original document order."""
    if home not in graph.units:
        raise NoEnclosingUnit(f"unknown unit {home}")
    if mode == DIRECT:
        keep = {home, *graph.deps(home)}
    elif mode == TRANSITIVE:
        keep = set(graph.closure(home))
    else:
        raise ValueError(f"unknown context mode {mode!r}")
    ordered = sorted((graph.units[n] for n in keep), key=lambda u: u.start)
    parts: list[str] = []
    segments = []
    pos = 0
    for u in ordered:
        if parts:
            parts.append(UNIT_SEPARATOR)
            pos += len(UNIT_SEPARATOR)
        segments.append((u.start, u.end, pos))
        parts.append(unit_text[u.start:u.end])
        pos += u.end - u.start
    parts.append("\n")
    return PrunedContext("".join(parts), tuple(u.name for u in ordered), Remap(tuple(segments)))


def count_tokens(text: str, command: str | None = None) -> int:
    """Lexer token count, or the integer printed by ``command`` given ``text`` on stdin."""
    if command is None:
        return count_lexer_tokens(text)
    try:
        proc = subprocess.run(shlex.split(command), input=text, capture_output=True, text=True, timeout=300)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise TokenizerFailure(f"tokenizer command failed: {exc}") from exc
    if proc.returncode != 0:
        raise TokenizerFailure(f"tokenizer exited {proc.returncode}: {proc.stderr.strip()}")
    try:
        return int(proc.stdout.strip())
    except ValueError:
        raise TokenizerFailure(f"tokenizer printed {proc.stdout.strip()!r}, expected an integer") from None


@dataclass(frozen=True)
class BudgetDecision:
    accepted: bool
    reason: str = ""
    tokens: int = 0


def enforce_budget(task, max_tokens: int, min_tokens: int = 0, command: str | None = None) -> BudgetDecision:
    """Accept iff ``min_tokens <= tokens(task.reference) <= max_tokens``."""
    if not max_tokens > min_tokens >= 0:
        raise ValueError("token bounds need max > min >= 0")
    n = count_tokens(task.reference, command)
    if n < min_tokens:
        return BudgetDecision(False, "too_small", n)
    if n > max_tokens:
        return BudgetDecision(False, "too_large", n)
    return BudgetDecision(True, "", n)
