"""Name-resolution lint run after a successful parse.

Reports identifiers that are used but never declared in their module and
references to missing packages or package members. Instantiated modules that
are not part of the source are assumed to be external and are not checked.
"""

from __future__ import annotations

from rulecomp.grammar.tree import Node, ParseTree

_USE_PARENTS = frozenset(
    ["primary", "variable_lvalue", "variable_assignment", "blocking_assignment",
     "nonblocking_assignment", "event_term", "event_control"]
)


def _name(node: Node, source: str) -> str:
    return node.children[0].text(source)


def _declared(unit: Node, source: str) -> set[str]:
    names: set[str] = set()
    for n in unit.walk():
        if n.kind in ("ansi_port_declaration", "port_declaration"):
            names.update(_name(c, source) for c in n.children if c.kind == "simple_identifier")
        elif n.kind in ("net_decl_assignment", "variable_decl_assignment", "param_assignment"):
            names.add(_name(n.children[0], source))
    return names


def _uses(unit: Node, source: str):
    """Yield (name, offset) for identifier uses and (pkg, member, offset) for scoped ones."""
    stack = [(unit, None)]
    while stack:
        node, parent = stack.pop()
        if node.kind == "scoped_identifier":
            yield ("scoped", _name(node.children[0], source), _name(node.children[2], source), node.start)
            continue
        if node.kind == "simple_identifier" and parent is not None and parent.kind in _USE_PARENTS:
            yield ("plain", _name(node, source), None, node.start)
            continue
        if node.kind == "named_port_connection" and len(node.children) == 2 and not node.children[1].terminal:
            # ".a" connects the same-named signal
            yield ("plain", _name(node.children[1], source), None, node.start)
            continue
        for c in reversed(node.children):
            stack.append((c, node))


def lint(tree: ParseTree) -> list[str]:
    """Diagnostics as ``offset: message`` strings; empty means clean."""
    src = tree.source
    units: dict[str, Node] = {}
    packages: dict[str, set[str]] = {}
    for u in tree.root.children:
        name = _name(u.children[1], src)
        units[name] = u
        if u.kind == "package_declaration":
            packages[name] = _declared(u, src)
    problems: list[str] = []
    for uname, u in units.items():
        local = _declared(u, src)
        visible = set(local)
        for item in u.walk():
            if item.kind != "package_import_item":
                continue
            pkg = _name(item.children[0], src)
            if pkg not in packages:
                problems.append(f"{item.start}: unknown package '{pkg}'")
                continue
            last = item.children[2]
            if last.terminal:
                visible |= packages[pkg]
            else:
                member = _name(last, src)
                if member not in packages[pkg]:
                    problems.append(f"{item.start}: package '{pkg}' has no member '{member}'")
                visible.add(member)
        for kind, a, b, offset in _uses(u, src):
            if kind == "scoped":
                if a not in packages:
                    problems.append(f"{offset}: unknown package '{a}'")
                elif b not in packages[a]:
                    problems.append(f"{offset}: package '{a}' has no member '{b}'")
            elif a not in visible:
                problems.append(f"{offset}: '{a}' is not declared in {uname}")
    return problems
