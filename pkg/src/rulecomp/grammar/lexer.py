"""Lexer for the MiniHDL subset.

Whitespace, comments and attribute instances ``(* ... *)`` never become
tokens. They are kept as *leading trivia* on the following token (or as the
trailing trivia of the whole unit) so that the original text can always be
rebuilt byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from rulecomp.errors import LexError

KEYWORDS = frozenset(
    """
    module endmodule package endpackage import
    input output inout wire reg logic bit integer int signed unsigned
    parameter localparam assign always always_comb always_ff always_latch
    posedge negedge or if else case casez casex endcase default begin end
    initial function endfunction task endtask generate endgenerate genvar for
    typedef enum struct unique priority
    """.split()
)

# Longest operators first; the regex alternation is ordered.
OPERATORS = (
    "<<<=", ">>>=", "===", "!==", "<<<", ">>>", "**",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~&", "~|", "~^", "^~", "+:", "-:",
    "=", "<", ">", "!", "~", "&", "|", "^", "+", "-", "*", "/", "%", "?", ":",
)
PUNCTUATION = ("::", ";", ",", "(", ")", "[", "]", "{", "}", ".", "#", "@")

TERMINAL_KINDS = frozenset({"kw", "ident", "sysid", "num", "str", "op", "punct"})

_TRIVIA = re.compile(
    r"""
    (?: \s+
      | //[^\n]*
      | /\*.*?\*/
      | \(\*(?!\s*\))(?:.*?)\*\)
    )+
    """,
    re.VERBOSE | re.DOTALL,
)

_BASED = r"(?:[0-9][0-9_]*\s*)?'[sS]?(?:[bB][01xXzZ?_]+|[oO][0-7xXzZ?_]+|[dD][0-9_]+|[hH][0-9a-fA-FxXzZ?_]+)"
_TOKEN = re.compile(
    rf"""
      (?P<num>{_BASED}|'[01xXzZ](?![0-9a-zA-Z_])|[0-9][0-9_]*(?:\.[0-9_]+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*|\\\S+)
    | (?P<sysid>\$[A-Za-z_][A-Za-z0-9_$]*)
    | (?P<str>"(?:[^"\\\n]|\\.)*")
    | (?P<punct>{'|'.join(re.escape(p) for p in PUNCTUATION)})
    | (?P<op>{'|'.join(re.escape(o) for o in OPERATORS)})
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    start: int
    end: int
    trivia: str = ""

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class TokenStream:
    """Tokens of one text plus whatever trivia follows the last token."""

    source: str
    tokens: tuple[Token, ...]
    trailing: str

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def reconstruct(self) -> str:
        return "".join(t.trivia + t.text for t in self.tokens) + self.trailing


def tokenize(source: str) -> TokenStream:
    """Split ``source`` into tokens; raise :class:`LexError` on junk."""
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while True:
        m = _TRIVIA.match(source, pos)
        trivia_start = pos
        if m:
            pos = m.end()
        if pos >= n:
            break
        if source.startswith("/*", pos):
            raise LexError("unterminated block comment", pos)
        m = _TOKEN.match(source, pos)
        if not m:
            raise LexError(f"unrecognized character {source[pos]!r}", pos)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, text, pos, m.end(), source[trivia_start:pos]))
        pos = m.end()
    return TokenStream(source, tuple(tokens), source[trivia_start:])


def count_lexer_tokens(text: str) -> int:
    return len(tokenize(text).tokens)
