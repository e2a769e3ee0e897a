"""Expression trees lowered from parse-tree nodes, plus literal decoding."""

from __future__ import annotations

import re
from dataclasses import dataclass

from rulecomp.errors import UnsupportedConstruct
from rulecomp.grammar.tree import Node


@dataclass(frozen=True)
class Num:
    value: int
    width: int | None  # None means unsized (32 bits)
    signed: bool
    xz: int = 0  # bit positions holding x/z/? digits
    fill: int | None = None  # '0 / '1 literals fill the context width
    offset: int = 0


@dataclass(frozen=True)
class Ident:
    name: str
    package: str | None
    offset: int


@dataclass(frozen=True)
class Select:
    base: Ident
    kind: str  # "bit", "part", "up" or "down"
    a: object
    b: object | None
    offset: int


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object
    offset: int


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    offset: int


@dataclass(frozen=True)
class Cond:
    cond: object
    then: object
    other: object
    offset: int


@dataclass(frozen=True)
class Concat:
    items: tuple
    offset: int


@dataclass(frozen=True)
class Repl:
    count: object
    items: tuple
    offset: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    offset: int


_BASE_BITS = {"b": 1, "o": 3, "h": 4}


def parse_number(text: str, offset: int = 0) -> Num:
    t = text.replace("_", "")
    t = re.sub(r"\s+", "", t)
    if "'" not in t:
        if "." in t:
            raise UnsupportedConstruct("real number literal", offset)
        return Num(int(t), None, True, offset=offset)
    size_txt, _, rest = t.partition("'")
    if rest and rest[0] in "01xXzZ" and len(rest) == 1 and not size_txt:
        if rest in "xXzZ":
            return Num(0, 1, False, xz=1, fill=0, offset=offset)
        return Num(int(rest), None, False, fill=int(rest), offset=offset)
    signed = False
    if rest[0] in "sS":
        signed = True
        rest = rest[1:]
    base = rest[0].lower()
    digits = rest[1:].lower()
    width = int(size_txt) if size_txt else None
    if width == 0:
        raise UnsupportedConstruct("zero-width literal", offset)
    if base == "d":
        value, xz = int(digits), 0
    else:
        per = _BASE_BITS[base]
        value = xz = 0
        for d in digits:
            value <<= per
            xz <<= per
            if d in "xz?":
                xz |= (1 << per) - 1
            else:
                value |= int(d, 16 if base == "h" else 8 if base == "o" else 2)
    if width is not None:
        mask = (1 << width) - 1
        value &= mask
        xz &= mask
    return Num(value, width, signed, xz, offset=offset)


def ident_name(node: Node, source: str) -> str:
    assert node.kind == "simple_identifier"
    return node.children[0].text(source)


def _tok(node: Node, source: str) -> str:
    return node.text(source)


def lower(node: Node, source: str):
    """Turn an expression-ish parse node into an expression tree."""
    k = node.kind
    if k == "expression":
        return lower(node.children[0], source)
    if k == "conditional_expression":
        c = node.children
        return Cond(lower(c[0], source), lower(c[2], source), lower(c[4], source), node.start)
    if k == "binary_expression":
        c = node.children
        return Binary(_tok(c[1], source), lower(c[0], source), lower(c[2], source), c[1].start)
    if k == "unary_expression":
        c = node.children
        return Unary(_tok(c[0], source), lower(c[1], source), node.start)
    if k == "primary":
        return _lower_primary(node, source)
    if k == "simple_identifier":
        return Ident(ident_name(node, source), None, node.start)
    if k == "variable_lvalue":
        return _lower_primary(node, source)
    raise UnsupportedConstruct(f"expression node {k}", node.start)


def _lower_ident_with_selects(children, source, start):
    head = children[0]
    if head.kind == "scoped_identifier":
        base = Ident(
            ident_name(head.children[2], source), ident_name(head.children[0], source), head.start
        )
    else:
        base = Ident(ident_name(head, source), None, head.start)
    selects = [c for c in children[1:] if c.kind == "select"]
    if not selects:
        return base
    if len(selects) > 1:
        raise UnsupportedConstruct("multi-dimensional select", selects[1].start)
    sel = selects[0]
    parts = sel.children
    a = lower(parts[1], source)
    if len(parts) == 3:
        return Select(base, "bit", a, None, sel.start)
    op = _tok(parts[2], source)
    b = lower(parts[3], source)
    kind = {":": "part", "+:": "up", "-:": "down"}[op]
    return Select(base, kind, a, b, sel.start)


def _lower_primary(node: Node, source: str):
    c = node.children
    first = c[0]
    if first.kind == "number":
        return parse_number(first.children[0].text(source), first.start)
    if first.kind in ("simple_identifier", "scoped_identifier"):
        return _lower_ident_with_selects(c, source, node.start)
    if first.terminal and first.text(source) == "(":
        return lower(c[1], source)
    if first.terminal and first.text(source) == "{":
        # lvalue concatenation
        return Concat(tuple(lower(x, source) for x in c if not x.terminal), node.start)
    if first.kind == "concatenation":
        return _lower_concat(first, source)
    if first.kind == "multiple_concatenation":
        return _lower_concat(first, source)
    if first.kind == "system_function_call":
        name = first.children[0].text(source)
        args = tuple(lower(x, source) for x in first.children if x.kind == "expression")
        return Call(name, args, first.start)
    raise UnsupportedConstruct(f"primary {first.kind}", node.start)


def _lower_concat(node: Node, source: str):
    if node.kind == "concatenation":
        return Concat(tuple(lower(x, source) for x in node.children if x.kind == "expression"), node.start)
    count = lower(node.children[1], source)
    inner = node.children[2]
    items = tuple(lower(x, source) for x in inner.children if x.kind == "expression")
    if not items:
        items = (_lower_concat(inner.children[0], source),)
    return Repl(count, items, node.start)


def identifiers(expr) -> list[Ident]:
    """All identifiers referenced by an expression tree."""
    out: list[Ident] = []
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, Ident):
            out.append(e)
        elif isinstance(e, Select):
            stack += [e.base, e.a] + ([e.b] if e.b is not None else [])
        elif isinstance(e, Unary):
            stack.append(e.arg)
        elif isinstance(e, Binary):
            stack += [e.left, e.right]
        elif isinstance(e, Cond):
            stack += [e.cond, e.then, e.other]
        elif isinstance(e, Concat):
            stack += list(e.items)
        elif isinstance(e, Repl):
            stack += [e.count, *e.items]
        elif isinstance(e, Call):
            stack += list(e.args)
    return out
