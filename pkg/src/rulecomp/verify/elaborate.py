"""Elaboration of MiniHDL parse trees into gate-level netlists.

Only two-valued, single-clock synchronous designs are handled. Notable
simplifications:

* every flop updates on every cycle of the one clock; extra edge terms in a
  sensitivity list (asynchronous resets) are sampled synchronously;
* an assignment target without a driver is left *free*: it may take any
  value in every cycle;
* literals with x/z bits are rejected, except as wildcards in ``casez`` and
  ``casex`` items.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from rulecomp.errors import (
    CombinationalLoop,
    ElaborationError,
    MultipleDrivers,
    UnsupportedConstruct,
    WidthMismatch,
)
from rulecomp.grammar.tree import Node, ParseTree
from rulecomp.verify.expr import (
    Binary,
    Call,
    Concat,
    Cond,
    Ident,
    Num,
    Repl,
    Select,
    Unary,
    ident_name,
    lower,
)
from rulecomp.verify.netlist import Flop, NetBuilder, Netlist

MAX_INSTANCE_DEPTH = 64
STATEMENT_KINDS = frozenset(
    ["seq_block", "conditional_statement", "case_statement", "blocking_assignment",
     "nonblocking_assignment", "null_statement"]
)
ARITH_OPS = frozenset(["+", "-", "*", "&", "|", "^", "~^", "^~", "/", "%", "**"])
COMPARE_OPS = frozenset(["==", "!=", "===", "!==", "<", "<=", ">", ">="])
SHIFT_OPS = frozenset(["<<", ">>", "<<<", ">>>"])


@dataclass
class Signal:
    name: str
    width: int
    msb: int
    lsb: int
    signed: bool
    kind: str
    nets: list[int] = field(default_factory=list)

    def pos(self, index: int) -> int | None:
        p = index - self.lsb if self.msb >= self.lsb else self.lsb - index
        return p if 0 <= p < self.width else None

    def index_of(self, pos: int) -> int:
        return self.lsb + pos if self.msb >= self.lsb else self.lsb - pos


@dataclass
class Param:
    name: str
    bits: list[int]
    signed: bool
    msb: int
    lsb: int

    @property
    def width(self) -> int:
        return len(self.bits)

    def pos(self, index: int) -> int | None:
        p = index - self.lsb if self.msb >= self.lsb else self.lsb - index
        return p if 0 <= p < self.width else None

    def index_of(self, pos: int) -> int:
        return self.lsb + pos if self.msb >= self.lsb else self.lsb - pos


def _to_int(bits_vals: list[int], signed: bool) -> int:
    v = sum(b << i for i, b in enumerate(bits_vals))
    if signed and bits_vals and bits_vals[-1]:
        v -= 1 << len(bits_vals)
    return v


class Scope:
    """Name resolution for one module instance or package."""

    def __init__(self, elab: "Elaborator", decl: Node, prefix: str, overrides: dict | None = None):
        self.elab = elab
        self.decl = decl
        self.prefix = prefix
        self.source = elab.source
        self.signals: dict[str, Signal] = {}
        self.params: dict[str, Param] = {}
        self.param_decls: dict[str, tuple[Node, Node, bool]] = {}
        self.overrides = overrides or {}
        self.evaluating: set[str] = set()
        self.wild_imports: list[str] = []
        self.named_imports: dict[str, str] = {}
        self.ev = ExprEval(elab.nb, self)

    def full(self, name: str) -> str:
        return f"{self.prefix}{name}"

    # parameters -------------------------------------------------------------

    def collect_params(self) -> None:
        for child in self.decl.walk():
            if child.kind in ("parameter_declaration", "local_parameter_declaration"):
                local = child.kind == "local_parameter_declaration"
                for pa in child.find_all("param_assignment"):
                    name = ident_name(pa.children[0], self.source)
                    self.param_decls[name] = (child, pa, local)
        # "#(W = 8)" style items without a keyword
        ppl = self.decl.find("parameter_port_list")
        if ppl is not None:
            for pa in ppl.find_all("param_assignment"):
                name = ident_name(pa.children[0], self.source)
                self.param_decls.setdefault(name, (ppl, pa, False))
        for name in self.overrides:
            if name not in self.param_decls or self.param_decls[name][2]:
                raise ElaborationError(f"{self.prefix or ''}: no overridable parameter {name}")

    def collect_imports(self) -> None:
        for imp in self.decl.walk():
            if imp.kind != "package_import_item":
                continue
            pkg = ident_name(imp.children[0], self.source)
            if pkg not in self.elab.packages:
                raise UnsupportedConstruct(f"unknown package {pkg}", imp.start)
            last = imp.children[2]
            if last.terminal:
                self.wild_imports.append(pkg)
            else:
                self.named_imports[ident_name(last, self.source)] = pkg

    def param(self, name: str) -> Param | None:
        if name in self.params:
            return self.params[name]
        if name not in self.param_decls:
            return None
        if name in self.evaluating:
            raise ElaborationError(f"parameter {name} depends on itself")
        self.evaluating.add(name)
        try:
            self.params[name] = self._eval_param(name)
        finally:
            self.evaluating.discard(name)
        return self.params[name]

    def _eval_param(self, name: str) -> Param:
        decl, pa, _local = self.param_decls[name]
        typ_kw = None
        signed = None
        dims = []
        if decl.kind in ("parameter_declaration", "local_parameter_declaration"):
            for c in decl.children:
                if c is pa:
                    break
                if c.terminal:
                    t = c.text(self.source)
                    if t in ("integer", "int", "logic", "bit", "reg"):
                        typ_kw = t
                    elif t in ("signed", "unsigned"):
                        signed = t == "signed"
                elif c.kind == "packed_dimension":
                    dims.append(c)
        if name in self.overrides:
            bits, vsigned = self.overrides[name]
        else:
            expr = lower(pa.children[-1], self.source)
            w = self.ev.width(expr)
            vsigned = self.ev.signed(expr)
            bits = self.ev.ev(expr, w, vsigned)
        if len(dims) > 1:
            raise UnsupportedConstruct("multi-dimensional parameter", decl.start)
        if dims:
            msb, lsb = self.range_of(dims[0])
            width = abs(msb - lsb) + 1
            sgn = bool(signed)
        elif typ_kw in ("integer", "int"):
            msb, lsb, width = 31, 0, 32
            sgn = True if signed is None else signed
        else:
            width = len(bits)
            msb, lsb = width - 1, 0
            sgn = vsigned if signed is None else signed
        bits = self.ev.resize(list(bits), width, vsigned)
        return Param(name, bits, sgn, msb, lsb)

    def range_of(self, dim: Node) -> tuple[int, int]:
        msb = self.ev.const_int(lower(dim.children[1], self.source))
        lsb = self.ev.const_int(lower(dim.children[3], self.source))
        return msb, lsb

    def lookup(self, ident: Ident):
        if ident.package is not None:
            return self.elab.package_scope(ident.package, ident.offset).param_or_fail(ident)
        if ident.name in self.signals:
            return self.signals[ident.name]
        p = self.param(ident.name)
        if p is not None:
            return p
        pkgs = []
        if ident.name in self.named_imports:
            pkgs.append(self.named_imports[ident.name])
        pkgs += self.wild_imports
        for pkg in pkgs:
            p = self.elab.package_scope(pkg, ident.offset).param(ident.name)
            if p is not None:
                return p
        raise ElaborationError(f"undeclared identifier {ident.name} at offset {ident.offset}")

    def param_or_fail(self, ident: Ident) -> Param:
        p = self.param(ident.name)
        if p is None:
            raise ElaborationError(f"package has no parameter {ident.name} at offset {ident.offset}")
        return p


class ExprEval:
    """Lowers expression trees to gates using Verilog sizing rules.

    ``ev(e, width, signed)`` returns ``width`` nets (LSB first) holding the
    value of ``e`` in a context of that width and signedness.
    """

    def __init__(self, nb: NetBuilder, scope: Scope):
        self.nb = nb
        self.scope = scope
        self.reader = None  # optional override for reading signal values

    # sizing ---------------------------------------------------------------

    def width(self, e) -> int:
        if isinstance(e, Num):
            if e.fill is not None:
                return 1
            return e.width or 32
        if isinstance(e, Ident):
            return self.scope.lookup(e).width
        if isinstance(e, Select):
            if e.kind == "bit":
                return 1
            if e.kind == "part":
                return abs(self.const_int(e.a) - self.const_int(e.b)) + 1
            return self.const_int(e.b)
        if isinstance(e, Unary):
            return self.width(e.arg) if e.op in ("+", "-", "~") else 1
        if isinstance(e, Binary):
            if e.op in COMPARE_OPS or e.op in ("&&", "||"):
                return 1
            if e.op in SHIFT_OPS or e.op == "**":
                return self.width(e.left)
            return max(self.width(e.left), self.width(e.right))
        if isinstance(e, Cond):
            return max(self.width(e.then), self.width(e.other))
        if isinstance(e, Concat):
            return sum(self.width(x) for x in e.items)
        if isinstance(e, Repl):
            return self.const_int(e.count) * sum(self.width(x) for x in e.items)
        if isinstance(e, Call):
            if e.name in ("$signed", "$unsigned"):
                return self.width(e.args[0])
            return 32
        raise UnsupportedConstruct(f"expression {type(e).__name__}")

    def signed(self, e) -> bool:
        if isinstance(e, Num):
            return e.signed and e.fill is None
        if isinstance(e, Ident):
            return self.scope.lookup(e).signed
        if isinstance(e, Unary):
            return self.signed(e.arg) if e.op in ("+", "-", "~") else False
        if isinstance(e, Binary):
            if e.op in COMPARE_OPS or e.op in ("&&", "||"):
                return False
            if e.op in SHIFT_OPS or e.op == "**":
                return self.signed(e.left)
            return self.signed(e.left) and self.signed(e.right)
        if isinstance(e, Cond):
            return self.signed(e.then) and self.signed(e.other)
        if isinstance(e, Call):
            return e.name != "$unsigned"
        return False

    # helpers ----------------------------------------------------------------

    def resize(self, bits: list[int], width: int, signed: bool) -> list[int]:
        if len(bits) >= width:
            return bits[:width]
        fill = bits[-1] if (signed and bits) else self.nb.const(0)
        return bits + [fill] * (width - len(bits))

    def const_bits(self, value: int, width: int) -> list[int]:
        return [self.nb.const((value >> i) & 1) for i in range(width)]

    def const_value(self, bits: list[int], signed: bool) -> int | None:
        vals = []
        for b in bits:
            c = self.nb.const_value(b)
            if c is None:
                return None
            vals.append(c)
        return _to_int(vals, signed)

    def const_int(self, e) -> int:
        w = self.width(e)
        s = self.signed(e)
        v = self.const_value(self.ev(e, w, s), s)
        if v is None:
            raise UnsupportedConstruct("non-constant expression where a constant is required",
                                       getattr(e, "offset", None))
        return v

    def read(self, ident: Ident):
        sym = self.scope.lookup(ident)
        if isinstance(sym, Signal) and self.reader is not None:
            return sym, self.reader(sym)
        return sym, (sym.nets if isinstance(sym, Signal) else sym.bits)

    # arithmetic building blocks -------------------------------------------

    def add(self, a: list[int], b: list[int], cin: int | None = None) -> list[int]:
        nb = self.nb
        carry = cin if cin is not None else nb.const(0)
        out = []
        for x, y in zip(a, b):
            t = nb.xor(x, y)
            out.append(nb.xor(t, carry))
            carry = nb.or_(nb.and_(x, y), nb.and_(t, carry))
        return out

    def sub(self, a: list[int], b: list[int]) -> list[int]:
        return self.add(a, [self.nb.not_(x) for x in b], self.nb.const(1))

    def mul(self, a: list[int], b: list[int]) -> list[int]:
        w = len(a)
        acc = [self.nb.const(0)] * w
        for i, bit in enumerate(b[:w]):
            partial = [self.nb.const(0)] * i + [self.nb.and_(x, bit) for x in a[: w - i]]
            acc = self.add(acc, partial)
        return acc

    def less_than(self, a: list[int], b: list[int], signed: bool) -> int:
        nb = self.nb
        if signed and a:
            a = a[:-1] + [nb.not_(a[-1])]
            b = b[:-1] + [nb.not_(b[-1])]
        # borrow out of a - b
        borrow = nb.const(0)
        for x, y in zip(a, b):
            nx = nb.not_(x)
            borrow = nb.or_(nb.and_(nx, y), nb.and_(nb.xnor(x, y), borrow))
        return borrow

    def equal(self, a: list[int], b: list[int]) -> int:
        return self.nb.and_all(self.nb.xnor(x, y) for x, y in zip(a, b))

    def shift(self, bits: list[int], amount: list[int], left: bool, fill: int) -> list[int]:
        nb = self.nb
        w = len(bits)
        cur = list(bits)
        for k, sbit in enumerate(amount):
            step = 1 << k
            if step >= w:
                cur = [nb.mux(sbit, c, fill) for c in cur]
                continue
            if left:
                shifted = [fill] * step + cur[: w - step]
            else:
                shifted = cur[step:] + [fill] * step
            cur = [nb.mux(sbit, c, s) for c, s in zip(cur, shifted)]
        return cur

    def reduce_or(self, e) -> int:
        return self.nb.or_all(self.ev(e, self.width(e), self.signed(e)))

    # evaluation --------------------------------------------------------------

    def ev(self, e, width: int, signed: bool) -> list[int]:
        nb = self.nb
        if isinstance(e, Num):
            if e.xz:
                raise UnsupportedConstruct("x/z literal", e.offset)
            if e.fill is not None:
                return [nb.const(e.fill)] * width
            bits = self.const_bits(e.value, e.width or 32)
            return self.resize(bits, width, signed)
        if isinstance(e, Ident):
            _, bits = self.read(e)
            return self.resize(list(bits), width, signed)
        if isinstance(e, Select):
            return self.resize(self._select(e), width, False)
        if isinstance(e, Unary):
            op = e.op
            if op == "+":
                return self.ev(e.arg, width, signed)
            if op == "-":
                x = self.ev(e.arg, width, signed)
                return self.sub([nb.const(0)] * width, x)
            if op == "~":
                return [nb.not_(b) for b in self.ev(e.arg, width, signed)]
            bits = self.ev(e.arg, self.width(e.arg), self.signed(e.arg))
            if op == "!":
                r = nb.not_(nb.or_all(bits))
            elif op in ("&", "~&"):
                r = nb.and_all(bits)
            elif op in ("|", "~|"):
                r = nb.or_all(bits)
            else:
                r = nb.xor_all(bits)
            if op in ("~&", "~|", "~^", "^~"):
                r = nb.not_(r)
            return self.resize([r], width, False)
        if isinstance(e, Binary):
            return self._binary(e, width, signed)
        if isinstance(e, Cond):
            c = self.reduce_or(e.cond)
            t = self.ev(e.then, width, signed)
            f = self.ev(e.other, width, signed)
            return [nb.mux(c, y, x) for x, y in zip(t, f)]
        if isinstance(e, Concat):
            bits: list[int] = []
            for item in reversed(e.items):
                bits += self.ev(item, self.width(item), self.signed(item))
            return self.resize(bits, width, False)
        if isinstance(e, Repl):
            n = self.const_int(e.count)
            if n < 0:
                raise ElaborationError("negative replication count")
            one: list[int] = []
            for item in reversed(e.items):
                one += self.ev(item, self.width(item), self.signed(item))
            return self.resize(one * n, width, False)
        if isinstance(e, Call):
            return self._call(e, width, signed)
        raise UnsupportedConstruct(f"expression {type(e).__name__}")

    def _binary(self, e: Binary, width: int, signed: bool) -> list[int]:
        nb = self.nb
        op = e.op
        if op in COMPARE_OPS:
            w = max(self.width(e.left), self.width(e.right))
            s = self.signed(e.left) and self.signed(e.right)
            a = self.ev(e.left, w, s)
            b = self.ev(e.right, w, s)
            if op in ("==", "==="):
                r = self.equal(a, b)
            elif op in ("!=", "!=="):
                r = nb.not_(self.equal(a, b))
            elif op == "<":
                r = self.less_than(a, b, s)
            elif op == ">":
                r = self.less_than(b, a, s)
            elif op == "<=":
                r = nb.not_(self.less_than(b, a, s))
            else:
                r = nb.not_(self.less_than(a, b, s))
            return self.resize([r], width, False)
        if op in ("&&", "||"):
            a = self.reduce_or(e.left)
            b = self.reduce_or(e.right)
            r = nb.and_(a, b) if op == "&&" else nb.or_(a, b)
            return self.resize([r], width, False)
        if op in SHIFT_OPS:
            a = self.ev(e.left, width, signed)
            amt = self.ev(e.right, self.width(e.right), False)
            left = op in ("<<", "<<<")
            fill = a[-1] if (op == ">>>" and signed and a) else nb.const(0)
            return self.shift(a, amt, left, fill)
        a = self.ev(e.left, width, signed)
        b = self.ev(e.right, width, signed)
        if op == "+":
            return self.add(a, b)
        if op == "-":
            return self.sub(a, b)
        if op == "*":
            return self.mul(a, b)
        if op == "&":
            return [nb.and_(x, y) for x, y in zip(a, b)]
        if op == "|":
            return [nb.or_(x, y) for x, y in zip(a, b)]
        if op == "^":
            return [nb.xor(x, y) for x, y in zip(a, b)]
        if op in ("~^", "^~"):
            return [nb.xnor(x, y) for x, y in zip(a, b)]
        if op in ("/", "%", "**"):
            if op == "**":
                b = self.ev(e.right, self.width(e.right), self.signed(e.right))
                bs = self.signed(e.right)
            else:
                bs = signed
            va = self.const_value(a, signed)
            vb = self.const_value(b, bs)
            if va is None or vb is None:
                raise UnsupportedConstruct(f"non-constant operator {op}", e.offset)
            if op == "**":
                r = va ** vb if vb >= 0 else 0
            elif vb == 0:
                raise UnsupportedConstruct("division by zero", e.offset)
            elif op == "/":
                r = abs(va) // abs(vb) * (1 if (va >= 0) == (vb >= 0) else -1)
            else:
                r = abs(va) % abs(vb) * (1 if va >= 0 else -1)
            return self.const_bits(r & ((1 << width) - 1), width)
        raise UnsupportedConstruct(f"operator {op}", e.offset)

    def _call(self, e: Call, width: int, signed: bool) -> list[int]:
        if e.name in ("$signed", "$unsigned"):
            if len(e.args) != 1:
                raise ElaborationError(f"{e.name} takes one argument")
            arg = e.args[0]
            bits = self.ev(arg, self.width(arg), self.signed(arg))
            return self.resize(bits, width, signed)
        if e.name == "$clog2":
            v = self.const_int(e.args[0])
            r = 0
            while (1 << r) < v:
                r += 1
            return self.const_bits(r, width)
        if e.name == "$bits":
            return self.const_bits(self.width(e.args[0]), width)
        raise UnsupportedConstruct(f"system function {e.name}", e.offset)

    def _select(self, e: Select) -> list[int]:
        nb = self.nb
        sym, bits = self.read(e.base)
        bits = list(bits)
        if e.kind == "bit":
            idx_bits = self.ev(e.a, self.width(e.a), self.signed(e.a))
            idx = self.const_value(idx_bits, self.signed(e.a))
            if idx is not None:
                p = sym.pos(idx)
                return [bits[p] if p is not None else nb.const(0)]
            out = nb.const(0)
            for p in range(sym.width):
                hit = self.equal_const(idx_bits, sym.index_of(p), self.signed(e.a))
                out = nb.mux(hit, out, bits[p])
            return [out]
        if e.kind == "part":
            hi = self.const_int(e.a)
            lo = self.const_int(e.b)
            if (hi >= lo) != (sym.msb >= sym.lsb) and hi != lo:
                raise WidthMismatch(f"part-select direction of {e.base.name} is reversed")
            out = []
            step = 1 if hi >= lo else -1
            for idx in range(lo, hi + step, step):
                p = sym.pos(idx)
                out.append(bits[p] if p is not None else nb.const(0))
            return out
        # indexed part-select
        w = self.const_int(e.b)
        base_bits = self.ev(e.a, self.width(e.a), self.signed(e.a))
        base = self.const_value(base_bits, self.signed(e.a))
        if base is not None:
            start = base if e.kind == "up" else base - w + 1
            out = []
            for k in range(w):
                p = sym.pos(start + k) if sym.msb >= sym.lsb else sym.pos(start + w - 1 - k)
                out.append(bits[p] if p is not None else nb.const(0))
            return out
        if sym.msb < sym.lsb:
            raise UnsupportedConstruct("variable indexed part-select on ascending range", e.offset)
        out = []
        for k in range(w):
            o = nb.const(0)
            for p in range(sym.width):
                idx = sym.index_of(p) - k if e.kind == "up" else sym.index_of(p) + (w - 1 - k)
                hit = self.equal_const(base_bits, idx, self.signed(e.a))
                o = nb.mux(hit, o, bits[p])
            out.append(o)
        return out

    def equal_const(self, bits: list[int], value: int, signed: bool) -> int:
        w = len(bits)
        if signed:
            lo, hi = -(1 << (w - 1)), (1 << (w - 1)) - 1
        else:
            lo, hi = 0, (1 << w) - 1
        if not lo <= value <= hi:
            return self.nb.const(0)
        return self.equal(bits, self.const_bits(value & ((1 << w) - 1), w))


@dataclass
class _Target:
    """One piece of an assignment target, LSB-first positions."""

    signal: Signal
    positions: list[int] | None  # None: dynamic single-bit index
    index: object = None
    index_signed: bool = False

    @property
    def width(self) -> int:
        return 1 if self.positions is None else len(self.positions)


class Elaborator:
    def __init__(self, tree: ParseTree):
        self.tree = tree
        self.source = tree.source
        self.nb = NetBuilder(hashing=True)
        self.modules: dict[str, Node] = {}
        self.packages: dict[str, Node] = {}
        for unit in tree.root.children:
            name = ident_name(unit.children[1], self.source)
            if unit.kind == "module_declaration":
                self.modules[name] = unit
            elif unit.kind == "package_declaration":
                self.packages[name] = unit
        self._pkg_scopes: dict[str, Scope] = {}
        # placeholder net -> ("net", src) | ("flop", d, clock_net)
        self.driver: dict[int, tuple] = {}
        self.owner: dict[int, tuple[str, int]] = {}
        self.init: dict[int, int] = {}
        self.input_nets: dict[str, list[int]] = {}
        self.depth = 0

    def package_scope(self, name: str, offset=None) -> Scope:
        if name not in self.packages:
            raise UnsupportedConstruct(f"unknown package {name}", offset)
        if name not in self._pkg_scopes:
            scope = Scope(self, self.packages[name], f"{name}::")
            self._pkg_scopes[name] = scope
            scope.collect_imports()
            scope.collect_params()
        return self._pkg_scopes[name]

    def drive(self, net: int, what: tuple) -> None:
        if net in self.driver:
            name, bit = self.owner.get(net, ("?", 0))
            raise MultipleDrivers(f"{name}[{bit}] has more than one driver")
        self.driver[net] = what

    # modules -----------------------------------------------------------------

    def new_signal(self, scope: Scope, name: str, width: int, msb: int, lsb: int, signed: bool, kind: str):
        if width <= 0:
            raise WidthMismatch(f"signal {name} has non-positive width")
        sig = Signal(name, width, msb, lsb, signed, kind)
        sig.nets = [self.nb.new_net() for _ in range(width)]
        for i, n in enumerate(sig.nets):
            self.owner[n] = (scope.full(name), i)
        scope.signals[name] = sig
        return sig

    def elaborate_module(self, name: str, prefix: str, overrides: dict, offset=None) -> Scope:
        if name not in self.modules:
            raise UnsupportedConstruct(f"unknown module {name}", offset)
        if self.depth >= MAX_INSTANCE_DEPTH:
            raise ElaborationError(f"instance nesting deeper than {MAX_INSTANCE_DEPTH} (recursive instantiation?)")
        self.depth += 1
        try:
            decl = self.modules[name]
            scope = Scope(self, decl, prefix, overrides)
            scope.collect_imports()
            scope.collect_params()
            self._declare(scope)
            self._items(scope)
            return scope
        finally:
            self.depth -= 1

    def _decl_shape(self, scope: Scope, nodes: list[Node], default_kind: str):
        """Width/sign/kind from the type keywords and packed dimensions."""
        kind = default_kind
        signed = False
        dims = []
        direction = None
        type_kw = None
        for c in nodes:
            if c.terminal:
                t = c.text(self.source)
                if t in ("input", "output", "inout"):
                    direction = t
                elif t in ("signed", "unsigned"):
                    signed = t == "signed"
                elif t in ("wire", "reg", "logic", "bit", "integer", "int"):
                    type_kw = t
            elif c.kind == "packed_dimension":
                dims.append(c)
        if len(dims) > 1:
            raise UnsupportedConstruct("multi-dimensional packed array", dims[1].start)
        if dims:
            msb, lsb = scope.range_of(dims[0])
        elif type_kw in ("integer", "int"):
            msb, lsb = 31, 0
            signed = True if not any(
                c.terminal and c.text(self.source) == "unsigned" for c in nodes
            ) else False
        else:
            msb = lsb = 0
        return direction, type_kw, signed, msb, lsb

    def _declare(self, scope: Scope) -> None:
        decl = scope.decl
        src = self.source
        scope.port_order: list[str] = []
        scope.directions: dict[str, str] = {}
        lop = decl.find("list_of_port_declarations")
        if lop is not None:
            prev = None
            for port in lop.find_all("ansi_port_declaration"):
                ident = next(c for c in port.children if c.kind == "simple_identifier")
                name = ident_name(ident, src)
                if port.find("unpacked_dimension") is not None:
                    raise UnsupportedConstruct("unpacked port array", port.start)
                direction, type_kw, signed, msb, lsb = self._decl_shape(scope, list(port.children), "wire")
                has_type = any(
                    (c.terminal and c.text(src) not in ("input", "output", "inout")) or c.kind == "packed_dimension"
                    for c in port.children if c is not ident
                )
                if direction is None and prev is not None and not has_type:
                    direction, signed, msb, lsb = prev
                elif direction is None and prev is not None:
                    direction = prev[0]
                scope.port_order.append(name)
                if direction is None:
                    # non-ANSI header; direction comes from the body
                    continue
                if direction == "inout":
                    raise UnsupportedConstruct("inout port", port.start)
                prev = (direction, signed, msb, lsb)
                scope.directions[name] = direction
                self.new_signal(scope, name, abs(msb - lsb) + 1, msb, lsb, signed, direction)
        for item in decl.children:
            if item.kind == "port_declaration":
                direction, type_kw, signed, msb, lsb = self._decl_shape(scope, list(item.children), "wire")
                if direction == "inout":
                    raise UnsupportedConstruct("inout port", item.start)
                for ident in item.find_all("simple_identifier"):
                    name = ident_name(ident, src)
                    if name not in scope.port_order:
                        raise ElaborationError(f"{name} is declared as a port but not in the port list")
                    scope.directions[name] = direction
                    self.new_signal(scope, name, abs(msb - lsb) + 1, msb, lsb, signed, direction)
            elif item.kind in ("net_declaration", "data_declaration"):
                kind = "wire" if item.kind == "net_declaration" else "reg"
                _, type_kw, signed, msb, lsb = self._decl_shape(scope, list(item.children), kind)
                dkind = "net_decl_assignment" if kind == "wire" else "variable_decl_assignment"
                for d in item.find_all(dkind):
                    name = ident_name(d.children[0], src)
                    if d.find("unpacked_dimension") is not None:
                        raise UnsupportedConstruct("memory (unpacked array)", d.start)
                    width = abs(msb - lsb) + 1
                    if name in scope.signals:
                        sig = scope.signals[name]
                        if sig.kind not in ("input", "output") or sig.width != width and (msb, lsb) != (0, 0):
                            raise ElaborationError(f"{name} declared twice")
                        continue
                    if name in scope.param_decls:
                        raise ElaborationError(f"{name} is already a parameter")
                    self.new_signal(scope, name, width, msb, lsb, signed, kind)
        missing = [p for p in scope.port_order if p not in scope.signals]
        if missing:
            raise ElaborationError(f"ports without a direction: {', '.join(missing)}")

    # items ---------------------------------------------------------------------

    def _items(self, scope: Scope) -> None:
        for item in scope.decl.children:
            k = item.kind
            if k == "continuous_assignment":
                for va in item.find_all("variable_assignment"):
                    self._continuous(scope, va.children[0], va.children[2])
            elif k == "net_declaration":
                for d in item.find_all("net_decl_assignment"):
                    if d.find("expression") is not None:
                        self._continuous(scope, d.children[0], d.find("expression"))
            elif k == "data_declaration":
                for d in item.find_all("variable_decl_assignment"):
                    if d.find("expression") is not None:
                        sig = scope.signals[ident_name(d.children[0], self.source)]
                        self._set_init(scope, sig, d.find("expression"))
            elif k == "always_construct":
                self._always(scope, item)
            elif k == "initial_construct":
                self._initial(scope, item)
            elif k == "module_program_interface_instantiation":
                self._instance(scope, item)

    def _targets(self, scope: Scope, lv_expr, allow_dynamic: bool) -> list[_Target]:
        """Targets MSB-piece first, as written."""
        if isinstance(lv_expr, Concat):
            out: list[_Target] = []
            for item in lv_expr.items:
                out += self._targets(scope, item, allow_dynamic)
            return out
        if isinstance(lv_expr, Ident):
            sym = scope.lookup(lv_expr)
            if not isinstance(sym, Signal):
                raise ElaborationError(f"cannot assign to parameter {lv_expr.name}")
            return [_Target(sym, list(range(sym.width)))]
        if isinstance(lv_expr, Select):
            sym = scope.lookup(lv_expr.base)
            if not isinstance(sym, Signal):
                raise ElaborationError(f"cannot assign to parameter {lv_expr.base.name}")
            ev = scope.ev
            if lv_expr.kind == "bit":
                idx_bits = ev.ev(lv_expr.a, ev.width(lv_expr.a), ev.signed(lv_expr.a))
                idx = ev.const_value(idx_bits, ev.signed(lv_expr.a))
                if idx is None:
                    if not allow_dynamic:
                        raise UnsupportedConstruct("variable index in continuous assignment target", lv_expr.offset)
                    return [_Target(sym, None, idx_bits, ev.signed(lv_expr.a))]
                p = sym.pos(idx)
                if p is None:
                    raise WidthMismatch(f"index {idx} out of range for {sym.name}")
                return [_Target(sym, [p])]
            if lv_expr.kind == "part":
                hi, lo = ev.const_int(lv_expr.a), ev.const_int(lv_expr.b)
                step = 1 if hi >= lo else -1
                idxs = list(range(lo, hi + step, step))
            else:
                base = ev.const_int(lv_expr.a)
                w = ev.const_int(lv_expr.b)
                start = base if lv_expr.kind == "up" else base - w + 1
                idxs = list(range(start, start + w))
                if sym.msb < sym.lsb:
                    idxs.reverse()
            pos = [sym.pos(i) for i in idxs]
            if any(p is None for p in pos):
                raise WidthMismatch(f"part-select out of range for {sym.name}")
            return [_Target(sym, pos)]
        raise ElaborationError("invalid assignment target")

    def _rhs_bits(self, scope: Scope, targets: list[_Target], rhs) -> list[int]:
        ev = scope.ev
        lw = sum(t.width for t in targets)
        w = max(lw, ev.width(rhs))
        return ev.ev(rhs, w, ev.signed(rhs))[:lw]

    def _continuous(self, scope: Scope, lhs_node: Node, rhs_node: Node) -> None:
        targets = self._targets(scope, lower(lhs_node, self.source), allow_dynamic=False)
        bits = self._rhs_bits(scope, targets, lower(rhs_node, self.source))
        pos = 0
        for t in reversed(targets):
            for p in t.positions:
                self.drive(t.signal.nets[p], ("net", bits[pos]))
                pos += 1

    def _set_init(self, scope: Scope, sig: Signal, expr_node: Node) -> None:
        ev = scope.ev
        e = lower(expr_node, self.source)
        bits = ev.ev(e, max(sig.width, ev.width(e)), ev.signed(e))[: sig.width]
        v = ev.const_value(bits, False)
        if v is None:
            raise UnsupportedConstruct("non-constant initial value", expr_node.start)
        for i, n in enumerate(sig.nets):
            self.init[n] = (v >> i) & 1

    def _initial(self, scope: Scope, item: Node) -> None:
        def visit(stmt: Node):
            if stmt.kind == "seq_block":
                for c in stmt.children:
                    if c.kind in STATEMENT_KINDS:
                        visit(c)
            elif stmt.kind in ("blocking_assignment", "nonblocking_assignment"):
                lv = lower(stmt.children[0], self.source)
                if not isinstance(lv, Ident):
                    raise UnsupportedConstruct("initial block assigning a select", stmt.start)
                sig = scope.lookup(lv)
                if not isinstance(sig, Signal):
                    raise ElaborationError(f"cannot assign to parameter {lv.name}")
                self._set_init(scope, sig, stmt.children[2])
            elif stmt.kind != "null_statement":
                raise UnsupportedConstruct("initial block beyond constant register initialisation", stmt.start)

        for c in item.children:
            if c.kind in STATEMENT_KINDS:
                visit(c)

    # procedural blocks -------------------------------------------------------

    def _always(self, scope: Scope, item: Node) -> None:
        src = self.source
        kw = item.children[0].text(src)
        ec = item.find("event_control")
        body = [c for c in item.children if c.kind in STATEMENT_KINDS]
        edges: list[tuple[str, Node]] = []
        if ec is not None:
            ee = ec.find("event_expression")
            if ee is not None:
                for term in ee.find_all("event_term"):
                    if term.children[0].terminal:
                        edges.append((term.children[0].text(src), term.children[-1]))
        if kw == "always_latch":
            raise UnsupportedConstruct("latch", item.start)
        if edges:
            if kw == "always_comb":
                raise ElaborationError("always_comb with an event control")
            clock = self._pick_clock(edges, body)
            sym = scope.lookup(Ident(ident_name(clock, src), None, clock.start))
            if not isinstance(sym, Signal) or sym.width != 1:
                raise UnsupportedConstruct("clock must be a 1-bit signal", clock.start)
            proc = _Proc(self, scope, sequential=True)
            proc.run(body)
            proc.finish(clock_net=sym.nets[0])
        else:
            if kw == "always_ff":
                raise UnsupportedConstruct("always_ff without a clock edge", item.start)
            if kw == "always" and ec is None:
                raise UnsupportedConstruct("always block without sensitivity list", item.start)
            proc = _Proc(self, scope, sequential=False)
            proc.run(body)
            proc.finish()

    def _pick_clock(self, edges, body) -> Node:
        if len(edges) == 1:
            return edges[0][1]
        # Signals tested by the leading if are asynchronous controls.
        tested: set[str] = set()
        stmt = body[0] if body else None
        while stmt is not None and stmt.kind == "seq_block":
            inner = [c for c in stmt.children if c.kind in STATEMENT_KINDS]
            stmt = inner[0] if inner else None
        if stmt is not None and stmt.kind == "conditional_statement":
            cond = stmt.find("expression")
            tested = {n.text(self.source) for n in cond.walk() if n.kind == "ident"}
        for _, ident in edges:
            if ident.children[0].text(self.source) not in tested:
                return ident
        return edges[0][1]

    # instances -------------------------------------------------------------------

    def _instance(self, scope: Scope, item: Node) -> None:
        src = self.source
        mod_name = ident_name(item.children[0], src)
        if mod_name not in self.modules:
            raise UnsupportedConstruct(f"unknown module {mod_name}", item.start)
        child_decl = self.modules[mod_name]
        overrides = {}
        pva = item.find("parameter_value_assignment")
        if pva is not None:
            child_params = _declared_param_order(child_decl, src)
            ordered = [c for c in pva.children if c.kind == "ordered_parameter_assignment"]
            for i, c in enumerate(ordered):
                if i >= len(child_params):
                    raise ElaborationError(f"too many parameter values for {mod_name}")
                overrides[child_params[i]] = self._const_value_bits(scope, c.children[0])
            for c in pva.children:
                if c.kind == "named_parameter_assignment":
                    pname = ident_name(c.children[1], src)
                    expr = c.find("expression")
                    if expr is not None:
                        overrides[pname] = self._const_value_bits(scope, expr)
        for inst in item.find_all("hierarchical_instance"):
            if inst.find("unpacked_dimension") is not None:
                raise UnsupportedConstruct("instance array", inst.start)
            inst_name = ident_name(inst.children[0], src)
            child = self.elaborate_module(mod_name, f"{scope.prefix}{inst_name}.", overrides, inst.start)
            self._connect(scope, child, inst)

    def _const_value_bits(self, scope: Scope, expr_node: Node):
        ev = scope.ev
        e = lower(expr_node, self.source)
        bits = ev.ev(e, ev.width(e), ev.signed(e))
        if ev.const_value(bits, False) is None:
            raise UnsupportedConstruct("non-constant parameter value", expr_node.start)
        return bits, ev.signed(e)

    def _connect(self, scope: Scope, child: Scope, inst: Node) -> None:
        src = self.source
        conns: dict[str, Node | None] = {}
        ordered = [c for c in inst.children if c.kind == "ordered_port_connection"]
        for i, c in enumerate(ordered):
            if i >= len(child.port_order):
                raise ElaborationError("too many port connections")
            conns[child.port_order[i]] = c.children[0]
        wildcard = False
        for c in inst.children:
            if c.kind != "named_port_connection":
                continue
            if c.children[1].terminal:
                wildcard = True
                continue
            pname = ident_name(c.children[1], src)
            if pname not in child.signals or pname not in child.port_order:
                raise ElaborationError(f"module has no port {pname}")
            if len(c.children) == 2:
                conns[pname] = Ident(pname, None, c.start)
            else:
                conns[pname] = c.find("expression")
        if wildcard:
            for p in child.port_order:
                if p not in conns:
                    conns[p] = Ident(p, None, inst.start)
        for pname, conn in conns.items():
            if conn is None:
                continue
            port = child.signals[pname]
            expr = conn if isinstance(conn, Ident) else lower(conn, src)
            if port.kind == "input":
                ev = scope.ev
                w = max(port.width, ev.width(expr))
                bits = ev.ev(expr, w, ev.signed(expr))[: port.width]
                for n, b in zip(port.nets, bits):
                    self.drive(n, ("net", b))
            else:
                targets = self._targets(scope, expr, allow_dynamic=False)
                lw = sum(t.width for t in targets)
                bits = scope.ev.resize(list(port.nets), lw, port.signed)
                pos = 0
                for t in reversed(targets):
                    for p in t.positions:
                        self.drive(t.signal.nets[p], ("net", bits[pos]))
                        pos += 1

    # finalisation -----------------------------------------------------------------

    def build(self, top: str, overrides: dict | None = None) -> Netlist:
        if top not in self.modules:
            raise ElaborationError(f"top module {top} not found")
        ov = {}
        for k, v in (overrides or {}).items():
            bits = [self.nb.const((int(v) >> i) & 1) for i in range(32)]
            ov[k] = (bits, True)
        scope = self.elaborate_module(top, "", ov)
        inputs: dict[str, list[int]] = {}
        for pname in scope.port_order:
            sig = scope.signals[pname]
            if sig.kind == "input":
                nets = [self.nb.new_net() for _ in range(sig.width)]
                inputs[pname] = nets
                for p, n in zip(sig.nets, nets):
                    self.drive(p, ("net", n))
        outputs = {
            p: scope.signals[p].nets for p in scope.port_order if scope.signals[p].kind == "output"
        }
        return self._rebuild(inputs, outputs)

    def _rebuild(self, inputs, outputs) -> Netlist:
        old_gates = {g.output: g for g in self.nb.gates}
        nb = NetBuilder(hashing=True)
        mapped: dict[int, int] = {}
        result = Netlist()
        for name, nets in inputs.items():
            new = [nb.new_net() for _ in nets]
            result.inputs[name] = tuple(new)
            for o, n in zip(nets, new):
                mapped[o] = n
        flop_q: dict[int, int] = {}
        for p, what in self.driver.items():
            if what[0] == "flop":
                q = nb.new_net()
                flop_q[p] = q
                mapped[p] = q
        free_bits: dict[str, list[int]] = {}

        def deps(n: int) -> tuple[int, ...]:
            if n in old_gates:
                return old_gates[n].inputs
            what = self.driver.get(n)
            if what is not None and what[0] == "net":
                return (what[1],)
            return ()

        def compute(n: int) -> int:
            if n in old_gates:
                g = old_gates[n]
                return nb.apply(g.op, tuple(mapped[i] for i in g.inputs))
            what = self.driver.get(n)
            if what is not None and what[0] == "net":
                return mapped[what[1]]
            if n in self.owner:
                if n in self.init:
                    return nb.const(self.init[n])
                name, bit = self.owner[n]
                new = nb.new_net()
                free_bits[f"{name}[{bit}]"] = [new]
                return new
            raise ElaborationError(f"dangling net {n}")

        def resolve(root: int) -> int:
            if root in mapped:
                return mapped[root]
            state: dict[int, int] = {}
            stack = [root]
            while stack:
                n = stack[-1]
                if n in mapped:
                    stack.pop()
                    continue
                if state.get(n) == 1:
                    mapped[n] = compute(n)
                    stack.pop()
                    continue
                state[n] = 1
                for d in deps(n):
                    if d in mapped:
                        continue
                    if state.get(d) == 1:
                        name, bit = self.owner.get(d, self.owner.get(n, ("<logic>", 0)))
                        raise CombinationalLoop(f"combinational loop through {name}[{bit}]")
                    stack.append(d)
            return mapped[root]

        for name, nets in outputs.items():
            result.outputs[name] = tuple(resolve(n) for n in nets)
        clock_names: set[str] = set()
        pending = [p for p, what in self.driver.items() if what[0] == "flop"]
        done: set[int] = set()
        # Flop inputs may pull in further flops; iterate to a fixed point.
        flops = []
        while pending:
            p = pending.pop(0)
            if p in done:
                continue
            done.add(p)
            _, d, clk = self.driver[p]
            dn = resolve(d)
            cn = resolve(clk)
            clock = next((nm for nm, bits in result.inputs.items() if bits == (cn,)), None)
            if clock is None:
                raise UnsupportedConstruct("clock is not a top-level input")
            clock_names.add(clock)
            flops.append(Flop(dn, flop_q[p], clock, self.init.get(p, 0)))
        if len(clock_names) > 1:
            raise UnsupportedConstruct(f"multiple clocks: {', '.join(sorted(clock_names))}")
        result.flops = flops
        result.free = {k: tuple(v) for k, v in free_bits.items()}
        _sweep(nb, result)
        return result


def _sweep(nb: NetBuilder, result: Netlist) -> None:
    """Keep only logic in the transitive fan-in of the outputs."""
    by_out = {g.output: g for g in nb.gates}
    by_q = {f.q: f for f in result.flops}
    live: set[int] = set()
    stack = [n for bits in result.outputs.values() for n in bits]
    while stack:
        n = stack.pop()
        if n in live:
            continue
        live.add(n)
        g = by_out.get(n)
        if g is not None:
            stack.extend(g.inputs)
        elif n in by_q:
            stack.append(by_q[n].d)
    result.gates = [g for g in nb.gates if g.output in live]
    result.flops = [f for f in result.flops if f.q in live]
    result.free = {k: v for k, v in result.free.items() if v[0] in live}
    result.num_nets = nb.num_nets


def _declared_param_order(decl: Node, source: str) -> list[str]:
    names = []
    ppl = decl.find("parameter_port_list")
    if ppl is not None:
        for c in ppl.children:
            if c.kind == "parameter_declaration":
                names += [ident_name(pa.children[0], source) for pa in c.find_all("param_assignment")]
            elif c.kind == "param_assignment":
                names.append(ident_name(c.children[0], source))
    else:
        for c in decl.children:
            if c.kind == "parameter_declaration":
                names += [ident_name(pa.children[0], source) for pa in c.find_all("param_assignment")]
    return names


class _Proc:
    """Symbolic execution of one always block."""

    def __init__(self, elab: Elaborator, scope: Scope, sequential: bool):
        self.elab = elab
        self.scope = scope
        self.nb = elab.nb
        self.sequential = sequential
        self.blk: dict[str, list[int]] = {}
        self.nba: dict[str, list[int]] = {}
        self.touched_blk: dict[str, set[int]] = {}
        self.touched_nba: dict[str, set[int]] = {}
        self.src = elab.source

    def _reader(self, sig: Signal) -> list[int]:
        return self.blk.get(sig.name, sig.nets)

    def run(self, stmts: list[Node]) -> None:
        ev = self.scope.ev
        saved = ev.reader
        ev.reader = self._reader
        try:
            for s in stmts:
                self.stmt(s)
        finally:
            ev.reader = saved

    def stmt(self, s: Node) -> None:
        k = s.kind
        if k == "seq_block":
            for c in s.children:
                if c.kind in STATEMENT_KINDS:
                    self.stmt(c)
        elif k == "null_statement":
            pass
        elif k == "blocking_assignment":
            self.assign(s, self.blk, self.touched_blk)
        elif k == "nonblocking_assignment":
            self.assign(s, self.nba, self.touched_nba)
        elif k == "conditional_statement":
            self.conditional(s)
        elif k == "case_statement":
            self.case(s)
        else:
            raise UnsupportedConstruct(f"statement {k}", s.start)

    def assign(self, s: Node, env: dict[str, list[int]], touched: dict[str, set[int]]) -> None:
        el = self.elab
        lhs = lower(s.children[0], self.src)
        targets = el._targets(self.scope, lhs, allow_dynamic=True)
        ev = self.scope.ev
        rhs = lower(s.children[2], self.src)
        bits = el._rhs_bits(self.scope, targets, rhs)
        pos = 0
        for t in reversed(targets):
            sig = t.signal
            cur = list(env.get(sig.name, sig.nets))
            mark = touched.setdefault(sig.name, set())
            if t.positions is None:
                b = bits[pos]
                for p in range(sig.width):
                    hit = ev.equal_const(t.index, sig.index_of(p), t.index_signed)
                    cur[p] = self.nb.mux(hit, cur[p], b)
                    mark.add(p)
                pos += 1
            else:
                for p in t.positions:
                    cur[p] = bits[pos]
                    mark.add(p)
                    pos += 1
            env[sig.name] = cur

    def _snapshot(self):
        return ({k: list(v) for k, v in self.blk.items()}, {k: list(v) for k, v in self.nba.items()})

    def _restore(self, snap) -> None:
        self.blk = {k: list(v) for k, v in snap[0].items()}
        self.nba = {k: list(v) for k, v in snap[1].items()}

    def _merge(self, sel: int, then_env, else_env) -> None:
        """Combine two branch results: ``then`` where sel is 1."""
        merged = []
        for t_env, e_env in ((then_env[0], else_env[0]), (then_env[1], else_env[1])):
            out = {}
            for name in sorted(set(t_env) | set(e_env)):
                sig = self.scope.signals[name]
                t = t_env.get(name, sig.nets)
                e = e_env.get(name, sig.nets)
                out[name] = [self.nb.mux(sel, eb, tb) for tb, eb in zip(t, e)]
            merged.append(out)
        self.blk, self.nba = merged

    def _branch(self, sel: int, then_fn, else_fn) -> None:
        base = self._snapshot()
        then_fn()
        then_env = self._snapshot()
        self._restore(base)
        else_fn()
        else_env = self._snapshot()
        self._merge(sel, then_env, else_env)

    def conditional(self, s: Node) -> None:
        conds = [c for c in s.children if c.kind == "expression"]
        stmts = [c for c in s.children if c.kind in STATEMENT_KINDS]
        has_else = len(stmts) == len(conds) + 1
        ev = self.scope.ev

        def chain(i: int) -> None:
            if i == len(conds):
                if has_else:
                    self.stmt(stmts[-1])
                return
            c = ev.reduce_or(lower(conds[i], self.src))
            self._branch(c, lambda: self.stmt(stmts[i]), lambda: chain(i + 1))

        chain(0)

    def case(self, s: Node) -> None:
        src = self.src
        kw = next(c for c in s.children if c.terminal and c.text(src) in ("case", "casez", "casex")).text(src)
        sel_e = lower(s.find("expression"), src)
        items = s.find_all("case_item")
        ev = self.scope.ev
        arms = []
        default = None
        for it in items:
            stmt = next(c for c in it.children if c.kind in STATEMENT_KINDS)
            if it.children[0].terminal and it.children[0].text(src) == "default":
                default = stmt
                continue
            labels = [lower(c, src) for c in it.children if c.kind == "expression"]
            hits = [self._case_match(kw, sel_e, lab) for lab in labels]
            arms.append((self.nb.or_all(hits), stmt))

        def chain(i: int) -> None:
            if i == len(arms):
                if default is not None:
                    self.stmt(default)
                return
            sel, stmt = arms[i]
            self._branch(sel, lambda: self.stmt(stmt), lambda: chain(i + 1))

        chain(0)

    def _case_match(self, kw: str, sel_e, lab) -> int:
        ev = self.scope.ev
        w = max(ev.width(sel_e), ev.width(lab))
        s = ev.signed(sel_e) and ev.signed(lab)
        a = ev.ev(sel_e, w, s)
        if isinstance(lab, Num) and lab.xz:
            if kw == "case":
                raise UnsupportedConstruct("x/z bits in a case item", lab.offset)
            care_mask = ~lab.xz
            vals = lab.value
            hits = []
            for i in range(w):
                if i < (lab.width or 32) and not (care_mask >> i) & 1:
                    continue
                bit = (vals >> i) & 1 if i < (lab.width or 32) else 0
                hits.append(a[i] if bit else self.nb.not_(a[i]))
            return self.nb.and_all(hits)
        b = ev.ev(lab, w, s)
        return ev.equal(a, b)

    def finish(self, clock_net: int | None = None) -> None:
        el = self.elab
        names = sorted(set(self.touched_blk) | set(self.touched_nba))
        for name in names:
            sig = self.scope.signals[name]
            for p in sorted(self.touched_blk.get(name, set()) | self.touched_nba.get(name, set())):
                if p in self.touched_nba.get(name, set()):
                    val = self.nba[name][p]
                else:
                    val = self.blk[name][p]
                if self.sequential:
                    el.drive(sig.nets[p], ("flop", val, clock_net))
                else:
                    el.drive(sig.nets[p], ("net", val))


def elaborate(tree: ParseTree, top: str, params: dict[str, int] | None = None) -> Netlist:
    """Flatten module ``top`` of a parsed design into a :class:`Netlist`."""
    return Elaborator(tree).build(top, params)


def package_constants(tree: ParseTree, package: str) -> dict[str, tuple[int, int]]:
    """Values and widths of every parameter declared in ``package``."""
    el = Elaborator(tree)
    scope = el.package_scope(package)
    out = {}
    for name in scope.param_decls:
        p = scope.param(name)
        v = scope.ev.const_value(p.bits, False)
        if v is None:
            raise UnsupportedConstruct(f"non-constant package parameter {name}")
        out[name] = (v, p.width)
    return out
