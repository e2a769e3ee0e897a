"""Compiler-directive resolution and source merging.

Handles ```define`` (object- and function-like), ```undef``,
```include``, ```ifdef``/```ifndef``/```elsif``/```else``/```endif`` and
strips housekeeping directives such as ```timescale``. Files are merged in
the order given. No ```line`` markers are written into the merged text;
instead every output character is attributed to an originating file and
line through :attr:`SourceUnit.origin_map`.
"""

from __future__ import annotations

import bisect
import os
import re
from dataclasses import dataclass
from pathlib import Path

from rulecomp.errors import (
    MacroArityMismatch,
    MissingInclude,
    OutOfRange,
    PreprocessError,
    RecursiveInclude,
    UnbalancedConditional,
    UndefinedMacro,
)

MAX_DEPTH = 64

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_PLAIN = re.compile(r"[^/\"`\n]+|/(?![/*])")
# Directives that are dropped along with their arguments.
_IGNORED = frozenset(
    "timescale default_nettype resetall celldefine endcelldefine unconnected_drive "
    "nounconnected_drive pragma line begin_keywords end_keywords".split()
)
_CONDITIONALS = frozenset(["ifdef", "ifndef", "elsif", "else", "endif"])


@dataclass(frozen=True)
class OriginSpan:
    start: int
    end: int
    file: str
    line: int


@dataclass(frozen=True)
class SourceUnit:
    text: str
    origin_map: tuple[OriginSpan, ...]
    defines_used: frozenset[str]

    def locate(self, offset: int) -> tuple[str, int]:
        return locate(self, offset)


@dataclass(frozen=True)
class Macro:
    name: str
    params: tuple[str, ...] | None
    defaults: tuple[str | None, ...]
    body: str


def locate(unit: SourceUnit, offset: int) -> tuple[str, int]:
    """Originating ``(file, line)`` of a byte in the merged text."""
    if not 0 <= offset < len(unit.text):
        raise OutOfRange(f"offset {offset} outside [0, {len(unit.text)})")
    starts = [o.start for o in unit.origin_map]
    span = unit.origin_map[bisect.bisect_right(starts, offset) - 1]
    return span.file, span.line


class _Cond:
    __slots__ = ("parent_active", "taken", "active", "seen_else", "line")

    def __init__(self, parent_active: bool, cond: bool, line: int):
        self.parent_active = parent_active
        self.taken = cond
        self.active = parent_active and cond
        self.seen_else = False
        self.line = line


class _Preprocessor:
    def __init__(self, defines: dict[str, str | None], include_dirs):
        self.macros: dict[str, Macro] = {}
        for name, value in (defines or {}).items():
            self.macros[name] = Macro(name, None, (), "" if value is None else str(value))
        self.include_dirs = [Path(d) for d in include_dirs]
        self.chunks: list[tuple[str, str, int]] = []
        self.cur: list[tuple[str, str, int]] = []
        self.used: set[str] = set()
        self.include_stack: list[str] = []

    # output ----------------------------------------------------------------

    def emit(self, text: str, file: str, line: int) -> None:
        """Emit text whose first character sits on ``line`` of ``file``."""
        parts = text.split("\n")
        for k, part in enumerate(parts):
            if part:
                self.cur.append((part, file, line + k))
            if k < len(parts) - 1:
                self.cur.append(("\n", file, line + k))
                self.chunks.extend(self.cur)
                self.cur = []

    def emit_expansion(self, text: str, file: str, line: int) -> None:
        # Expanded text is attributed entirely to the line of the macro use.
        for k, part in enumerate(text.split("\n")):
            if k:
                self.cur.append(("\n", file, line))
                self.chunks.extend(self.cur)
                self.cur = []
            if part:
                self.cur.append((part, file, line))

    def line_blank(self) -> bool:
        return all(not p.strip() for p, _, _ in self.cur)

    def finish(self) -> SourceUnit:
        self.chunks.extend(self.cur)
        self.cur = []
        text_parts = []
        origin: list[OriginSpan] = []
        pos = 0
        for piece, file, line in self.chunks:
            if origin and origin[-1].file == file and origin[-1].line == line and origin[-1].end == pos:
                last = origin[-1]
                origin[-1] = OriginSpan(last.start, pos + len(piece), file, line)
            else:
                origin.append(OriginSpan(pos, pos + len(piece), file, line))
            text_parts.append(piece)
            pos += len(piece)
        return SourceUnit("".join(text_parts), tuple(origin), frozenset(self.used))

    # files -----------------------------------------------------------------

    def process_file(self, path: str, text: str) -> None:
        if path in self.include_stack:
            cycle = " -> ".join([*self.include_stack, path])
            raise RecursiveInclude(f"include cycle: {cycle}")
        if len(self.include_stack) >= MAX_DEPTH:
            raise RecursiveInclude(f"include depth exceeds {MAX_DEPTH} at {path}")
        self.include_stack.append(path)
        try:
            self._scan(path, text)
        finally:
            self.include_stack.pop()

    def _scan(self, path: str, text: str) -> None:
        conds: list[_Cond] = []
        i, line, n = 0, 1, len(text)

        def active() -> bool:
            return not conds or conds[-1].active

        while i < n:
            c = text[i]
            if c == "\n":
                if active():
                    self.emit("\n", path, line)
                i += 1
                line += 1
            elif text.startswith("//", i):
                j = text.find("\n", i)
                j = n if j < 0 else j
                if active():
                    self.emit(text[i:j], path, line)
                i = j
            elif text.startswith("/*", i):
                j = text.find("*/", i + 2)
                if j < 0:
                    raise PreprocessError(f"{path}:{line}: unterminated block comment")
                j += 2
                if active():
                    self.emit(text[i:j], path, line)
                line += text.count("\n", i, j)
                i = j
            elif c == '"':
                m = re.compile(r'"(?:[^"\\\n]|\\.)*"?').match(text, i)
                j = m.end()
                if active():
                    self.emit(text[i:j], path, line)
                i = j
            elif c == "`":
                m = _IDENT.match(text, i + 1)
                if not m:
                    raise PreprocessError(f"{path}:{line}: stray backtick")
                name = m.group()
                j = m.end()
                if name in _CONDITIONALS or name in ("define", "undef", "include") or name in _IGNORED:
                    had_content = not self.line_blank()
                    if not had_content:
                        self.cur = []
                    j, line = self._directive(name, path, text, j, line, conds, active())
                    # Drop the newline of a line that held only directives.
                    k = j
                    while k < n and text[k] in " \t\r":
                        k += 1
                    if not had_content and (k >= n or text[k] == "\n"):
                        if k < n:
                            k += 1
                            line += 1
                        j = k
                    i = j
                elif active():
                    expansion, j, line_after = self._use_macro(name, path, text, j, line)
                    self.emit_expansion(expansion, path, line)
                    line = line_after
                    i = j
                else:
                    i = j
            else:
                m = _PLAIN.match(text, i)
                j = m.end()
                if active():
                    self.emit(text[i:j], path, line)
                i = j
        if conds:
            raise UnbalancedConditional(f"{path}:{conds[-1].line}: missing `endif")

    # directives ------------------------------------------------------------

    def _rest_of_line(self, text: str, j: int) -> int:
        k = text.find("\n", j)
        return len(text) if k < 0 else k

    def _directive(self, name, path, text, j, line, conds, is_active):
        if name in _CONDITIONALS:
            return self._conditional(name, path, text, j, line, conds)
        if name in _IGNORED:
            end = self._rest_of_line(text, j)
            if is_active:
                self.used.add("`" + name)
            return end, line
        if name == "define":
            return self._define(path, text, j, line, is_active)
        if name == "undef":
            m = re.compile(r"[ \t]*([A-Za-z_][A-Za-z0-9_$]*)").match(text, j)
            if not m:
                raise PreprocessError(f"{path}:{line}: `undef needs a macro name")
            if is_active:
                self.macros.pop(m.group(1), None)
            return m.end(), line
        # include
        m = re.compile(r'[ \t]*(?:"([^"\n]+)"|<([^>\n]+)>)').match(text, j)
        if not m:
            raise PreprocessError(f"{path}:{line}: malformed `include")
        if is_active:
            target = m.group(1) or m.group(2)
            resolved = self._resolve_include(target, path)
            self.process_file(resolved, Path(resolved).read_text(encoding="utf-8"))
        return m.end(), line

    def _conditional(self, name, path, text, j, line, conds):
        if name in ("ifdef", "ifndef", "elsif"):
            m = re.compile(r"[ \t]*([A-Za-z_][A-Za-z0-9_$]*)").match(text, j)
            if not m:
                raise PreprocessError(f"{path}:{line}: `{name} needs a macro name")
            macro = m.group(1)
            self.used.add(macro)
            defined = macro in self.macros
            j = m.end()
        if name in ("ifdef", "ifndef"):
            parent = not conds or conds[-1].active
            conds.append(_Cond(parent, defined if name == "ifdef" else not defined, line))
            return j, line
        if not conds:
            raise UnbalancedConditional(f"{path}:{line}: `{name} without `ifdef")
        top = conds[-1]
        if name == "elsif":
            if top.seen_else:
                raise UnbalancedConditional(f"{path}:{line}: `elsif after `else")
            top.active = top.parent_active and not top.taken and defined
            top.taken = top.taken or defined
        elif name == "else":
            if top.seen_else:
                raise UnbalancedConditional(f"{path}:{line}: duplicate `else")
            top.seen_else = True
            top.active = top.parent_active and not top.taken
            top.taken = True
        else:
            conds.pop()
        return j, line

    def _define(self, path, text, j, line, is_active):
        m = re.compile(r"[ \t]*([A-Za-z_][A-Za-z0-9_$]*)").match(text, j)
        if not m:
            raise PreprocessError(f"{path}:{line}: `define needs a macro name")
        name = m.group(1)
        j = m.end()
        params = None
        defaults: tuple[str | None, ...] = ()
        if j < len(text) and text[j] == "(":
            close = text.find(")", j)
            if close < 0:
                raise PreprocessError(f"{path}:{line}: unterminated macro parameter list")
            names, defs = [], []
            for raw in text[j + 1:close].split(","):
                raw = raw.strip()
                if not raw:
                    continue
                pname, _, default = raw.partition("=")
                names.append(pname.strip())
                defs.append(default.strip() if _ else None)
            params, defaults = tuple(names), tuple(defs)
            j = close + 1
        body_parts = []
        while True:
            end = self._rest_of_line(text, j)
            segment = text[j:end]
            if segment.endswith("\\") and end < len(text):
                body_parts.append(segment[:-1] + "\n")
                j = end + 1
                line += 1
                continue
            body_parts.append(segment)
            j = end
            break
        body = _strip_line_comment("".join(body_parts)).strip()
        if is_active:
            if name in ("define", "include", "undef") or name in _CONDITIONALS:
                raise PreprocessError(f"{path}:{line}: cannot redefine directive `{name}")
            self.macros[name] = Macro(name, params, defaults, body)
        return j, line

    def _resolve_include(self, target: str, including: str) -> str:
        candidates = [Path(including).parent / target] if including and not including.startswith("<") else []
        candidates += [d / target for d in self.include_dirs]
        for cand in candidates:
            if cand.is_file():
                return os.path.normpath(str(cand))
        raise MissingInclude(f"cannot resolve `include \"{target}\" from {including}")

    # macro expansion -------------------------------------------------------

    def _use_macro(self, name, path, text, j, line):
        """Expand the use of ``name`` ending at ``j``; returns new j and line."""
        if name == "__FILE__":
            return f'"{path}"', j, line
        if name == "__LINE__":
            return str(line), j, line
        macro = self.macros.get(name)
        if macro is None:
            raise UndefinedMacro(f"{path}:{line}: undefined macro `{name}")
        self.used.add(name)
        args: list[str] = []
        if macro.params is not None:
            k = j
            while k < len(text) and text[k] in " \t\r\n":
                k += 1
            if k >= len(text) or text[k] != "(":
                raise MacroArityMismatch(f"{path}:{line}: macro `{name} expects arguments")
            args, k = _split_args(text, k, f"{path}:{line}")
            line += text.count("\n", j, k)
            j = k
        return self._expand(macro, args, f"{path}:{line}", 0), j, line

    def _expand(self, macro: Macro, args: list[str], where: str, depth: int) -> str:
        if depth >= MAX_DEPTH:
            raise RecursiveInclude(f"{where}: macro expansion depth exceeds {MAX_DEPTH} in `{macro.name}")
        body = macro.body
        if macro.params is not None:
            nparams = len(macro.params)
            if len(args) == 1 and not args[0].strip() and nparams == 0:
                args = []
            if len(args) > nparams:
                raise MacroArityMismatch(
                    f"{where}: `{macro.name} takes {nparams} argument(s), got {len(args)}"
                )
            values = []
            for k, pname in enumerate(macro.params):
                given = args[k].strip() if k < len(args) else ""
                if not given:
                    default = macro.defaults[k] if k < len(macro.defaults) else None
                    if default is None and k >= len(args):
                        raise MacroArityMismatch(
                            f"{where}: `{macro.name} takes {nparams} argument(s), got {len(args)}"
                        )
                    given = default or ""
                values.append(given)
            mapping = dict(zip(macro.params, values))
            if mapping:
                pattern = re.compile(
                    r"(?<![`\w$])(" + "|".join(re.escape(p) for p in mapping) + r")(?![\w$])"
                )
                body = pattern.sub(lambda m: mapping[m.group(1)], body)
            body = body.replace("``", "").replace('`"', '"')
        return self._rescan(body, where, depth + 1)

    def _rescan(self, text: str, where: str, depth: int) -> str:
        if "`" not in text:
            return text
        out = []
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c == '"':
                m = re.compile(r'"(?:[^"\\\n]|\\.)*"?').match(text, i)
                out.append(m.group())
                i = m.end()
            elif c == "`":
                m = _IDENT.match(text, i + 1)
                if not m:
                    raise PreprocessError(f"{where}: stray backtick in macro body")
                name = m.group()
                macro = self.macros.get(name)
                if macro is None:
                    raise UndefinedMacro(f"{where}: undefined macro `{name}")
                self.used.add(name)
                j = m.end()
                args: list[str] = []
                if macro.params is not None:
                    while j < n and text[j] in " \t\r\n":
                        j += 1
                    if j >= n or text[j] != "(":
                        raise MacroArityMismatch(f"{where}: macro `{name} expects arguments")
                    args, j = _split_args(text, j, where)
                out.append(self._expand(macro, args, where, depth))
                i = j
            else:
                out.append(c)
                i += 1
        return "".join(out)


def _strip_line_comment(body: str) -> str:
    out = []
    i, n = 0, len(body)
    in_str = False
    while i < n:
        c = body[i]
        if in_str:
            out.append(c)
            if c == "\\" and i + 1 < n:
                out.append(body[i + 1])
                i += 1
            elif c == '"':
                in_str = False
        elif c == '"':
            in_str = True
            out.append(c)
        elif body.startswith("//", i):
            nl = body.find("\n", i)
            if nl < 0:
                break
            i = nl
            continue
        else:
            out.append(c)
        i += 1
    return "".join(out)


def _split_args(text: str, k: int, where: str) -> tuple[list[str], int]:
    """Split a parenthesised argument list starting at ``text[k] == '('``."""
    depth = 0
    args: list[str] = []
    cur: list[str] = []
    i = k
    n = len(text)
    while i < n:
        c = text[i]
        if c == '"':
            m = re.compile(r'"(?:[^"\\\n]|\\.)*"?').match(text, i)
            cur.append(m.group())
            i = m.end()
            continue
        if c in "([{":
            depth += 1
            if depth > 1:
                cur.append(c)
        elif c in ")]}":
            depth -= 1
            if depth == 0:
                args.append("".join(cur))
                return args, i + 1
            cur.append(c)
        elif c == "," and depth == 1:
            args.append("".join(cur))
            cur = []
        else:
            cur.append(c)
        i += 1
    raise PreprocessError(f"{where}: unterminated macro argument list")


def preprocess(files, defines: dict[str, str | None] | None = None, include_dirs=()) -> SourceUnit:
    """Resolve directives in ``files`` (in order) and merge them."""
    pp = _Preprocessor(defines or {}, include_dirs)
    for f in files:
        path = str(f)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise MissingInclude(f"source file not found: {path}") from None
        _separate(pp)
        pp.process_file(path, text)
    return pp.finish()


def preprocess_sources(
    sources: list[tuple[str, str]],
    defines: dict[str, str | None] | None = None,
    include_dirs=(),
) -> SourceUnit:
    """Same as :func:`preprocess` for in-memory ``(name, text)`` pairs."""
    pp = _Preprocessor(defines or {}, include_dirs)
    for name, text in sources:
        _separate(pp)
        pp.process_file(name, text)
    return pp.finish()


def _separate(pp: _Preprocessor) -> None:
    # Keep consecutive files on separate lines.
    if pp.cur:
        _, file, line = pp.cur[-1]
        pp.emit("\n", file, line)
