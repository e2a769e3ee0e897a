"""Recursive-descent parser for MiniHDL.

MiniHDL is a synthesizable Verilog-2005 flavoured subset (with a few
SystemVerilog conveniences such as ``logic``, ``always_ff`` and packages).
Node kinds follow the SystemVerilog grammar naming so that rule selections
written for other tools carry over.

Statement-level assignments (``blocking_assignment`` and
``nonblocking_assignment``) do not include their terminating ``;``; the
semicolon is a sibling terminal, as in the reference SystemVerilog grammar.
"""

from __future__ import annotations

from rulecomp.errors import ParseError
from rulecomp.grammar.lexer import TERMINAL_KINDS, Token, TokenStream, tokenize
from rulecomp.grammar.tree import Grammar, Node, ParseTree

RULE_NAMES = frozenset(
    """
    compilation_unit module_declaration package_declaration
    parameter_port_list list_of_port_declarations ansi_port_declaration
    port_declaration packed_dimension unpacked_dimension
    parameter_declaration local_parameter_declaration param_assignment
    net_declaration data_declaration net_decl_assignment variable_decl_assignment
    continuous_assignment variable_assignment variable_lvalue
    always_construct initial_construct event_control event_expression event_term
    module_program_interface_instantiation parameter_value_assignment
    named_parameter_assignment ordered_parameter_assignment
    hierarchical_instance named_port_connection ordered_port_connection
    package_import_declaration package_import_item
    blocking_assignment nonblocking_assignment conditional_statement
    case_statement case_item seq_block null_statement
    expression conditional_expression binary_expression unary_expression
    primary number simple_identifier scoped_identifier select
    concatenation multiple_concatenation system_function_call
    """.split()
)

GRAMMAR = Grammar(RULE_NAMES, TERMINAL_KINDS, "compilation_unit")

DIRECTIONS = ("input", "output", "inout")
VAR_TYPES = ("reg", "logic", "bit", "integer", "int")
PARAM_TYPES = ("integer", "int", "logic", "bit", "reg")
ALWAYS_KW = ("always", "always_comb", "always_ff", "always_latch")
CASE_KW = ("case", "casez", "casex")
UNARY_OPS = frozenset(["+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~"])

# Binding power of binary operators; larger binds tighter.
BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4, "~^": 4, "^~": 4,
    "&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}


def _term(tok: Token) -> Node:
    return Node(tok.kind, tok.start, tok.end, (), True)


def _rule(kind: str, children: list[Node]) -> Node:
    return Node(kind, children[0].start, children[-1].end, tuple(children))


class _Parser:
    def __init__(self, stream: TokenStream):
        self.toks = stream.tokens
        self.source = stream.source
        self.pos = 0

    # token helpers ---------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token | None:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def at(self, *texts: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t is not None and t.kind not in ("ident", "num", "str", "sysid") and t.text in texts

    def at_kind(self, kind: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t is not None and t.kind == kind

    def error(self, message: str, expected=()) -> ParseError:
        t = self.peek()
        if t is None:
            offset = len(self.source)
            message = f"{message}, found end of input"
        else:
            offset = t.start
            message = f"{message}, found {t.text!r}"
        return ParseError(message, offset, frozenset(expected))

    def take(self) -> Node:
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return _term(t)

    def expect(self, *texts: str) -> Node:
        if not self.at(*texts):
            raise self.error("unexpected token", texts)
        return self.take()

    def expect_kind(self, kind: str) -> Node:
        if not self.at_kind(kind):
            raise self.error("unexpected token", (kind,))
        return self.take()

    # top level -------------------------------------------------------------

    def compilation_unit(self) -> Node:
        items = []
        while self.peek() is not None:
            if self.at("module"):
                items.append(self.module_declaration())
            elif self.at("package"):
                items.append(self.package_declaration())
            else:
                raise self.error("expected a module or package", ("module", "package"))
        if not items:
            start = len(self.source)
            return Node("compilation_unit", 0, start, ())
        return _rule("compilation_unit", items)

    def identifier(self) -> Node:
        return _rule("simple_identifier", [self.expect_kind("ident")])

    def end_label(self, ch: list[Node]) -> None:
        if self.at(":"):
            ch.append(self.take())
            ch.append(self.identifier())

    def module_declaration(self) -> Node:
        ch = [self.expect("module"), self.identifier()]
        while self.at("import"):
            ch.append(self.package_import_declaration())
        if self.at("#"):
            ch.append(self.parameter_port_list())
        if self.at("("):
            ch.append(self.list_of_port_declarations())
        ch.append(self.expect(";"))
        while not self.at("endmodule"):
            if self.peek() is None:
                raise self.error("unterminated module", ("endmodule",))
            ch.extend(self.module_item())
        ch.append(self.expect("endmodule"))
        self.end_label(ch)
        return _rule("module_declaration", ch)

    def package_declaration(self) -> Node:
        ch = [self.expect("package"), self.identifier(), self.expect(";")]
        while not self.at("endpackage"):
            if self.at("parameter"):
                ch += [self.parameter_declaration(), self.expect(";")]
            elif self.at("localparam"):
                ch += [self.local_parameter_declaration(), self.expect(";")]
            elif self.at("import"):
                ch.append(self.package_import_declaration())
            else:
                raise self.error(
                    "expected a package item", ("parameter", "localparam", "import", "endpackage")
                )
        ch.append(self.expect("endpackage"))
        self.end_label(ch)
        return _rule("package_declaration", ch)

    def package_import_declaration(self) -> Node:
        ch = [self.expect("import"), self.package_import_item()]
        while self.at(","):
            ch += [self.take(), self.package_import_item()]
        ch.append(self.expect(";"))
        return _rule("package_import_declaration", ch)

    def package_import_item(self) -> Node:
        ch = [self.identifier(), self.expect("::")]
        if self.at("*"):
            ch.append(self.take())
        else:
            ch.append(self.identifier())
        return _rule("package_import_item", ch)

    # parameters ------------------------------------------------------------

    def parameter_port_list(self) -> Node:
        ch = [self.expect("#"), self.expect("(")]
        if not self.at(")"):
            ch.append(self.parameter_port_item())
            while self.at(","):
                ch += [self.take(), self.parameter_port_item()]
        ch.append(self.expect(")"))
        return _rule("parameter_port_list", ch)

    def parameter_port_item(self) -> Node:
        if self.at("parameter"):
            return self.parameter_declaration()
        if self.at("localparam"):
            return self.local_parameter_declaration()
        return self.param_assignment()

    def parameter_declaration(self) -> Node:
        return self._param_decl("parameter", "parameter_declaration")

    def local_parameter_declaration(self) -> Node:
        return self._param_decl("localparam", "local_parameter_declaration")

    def _param_decl(self, keyword: str, kind: str) -> Node:
        ch = [self.expect(keyword)]
        if self.at(*PARAM_TYPES):
            ch.append(self.take())
        if self.at("signed", "unsigned"):
            ch.append(self.take())
        while self.at("["):
            ch.append(self.packed_dimension())
        ch.append(self.param_assignment())
        # Greedy: "parameter A = 1, B = 2" is one declaration.
        while self.at(",") and self.at_kind("ident", 1) and self.at("=", ahead=2):
            ch += [self.take(), self.param_assignment()]
        return _rule(kind, ch)

    def param_assignment(self) -> Node:
        ch = [self.identifier()]
        while self.at("["):
            ch.append(self.unpacked_dimension())
        ch += [self.expect("="), self.expression()]
        return _rule("param_assignment", ch)

    def packed_dimension(self) -> Node:
        return _rule(
            "packed_dimension",
            [self.expect("["), self.expression(), self.expect(":"), self.expression(), self.expect("]")],
        )

    def unpacked_dimension(self) -> Node:
        ch = [self.expect("["), self.expression()]
        if self.at(":"):
            ch += [self.take(), self.expression()]
        ch.append(self.expect("]"))
        return _rule("unpacked_dimension", ch)

    # ports -----------------------------------------------------------------

    def list_of_port_declarations(self) -> Node:
        ch = [self.expect("(")]
        if not self.at(")"):
            ch.append(self.ansi_port_declaration())
            while self.at(","):
                ch += [self.take(), self.ansi_port_declaration()]
        ch.append(self.expect(")"))
        return _rule("list_of_port_declarations", ch)

    def _port_type(self, ch: list[Node]) -> None:
        if self.at("wire"):
            ch.append(self.take())
            if self.at("logic"):
                ch.append(self.take())
        elif self.at(*VAR_TYPES):
            ch.append(self.take())
        if self.at("signed", "unsigned"):
            ch.append(self.take())
        while self.at("["):
            ch.append(self.packed_dimension())

    def ansi_port_declaration(self) -> Node:
        ch: list[Node] = []
        if self.at(*DIRECTIONS):
            ch.append(self.take())
        self._port_type(ch)
        ch.append(self.identifier())
        while self.at("["):
            ch.append(self.unpacked_dimension())
        return _rule("ansi_port_declaration", ch)

    def port_declaration(self) -> Node:
        ch = [self.expect(*DIRECTIONS)]
        self._port_type(ch)
        ch.append(self.identifier())
        while self.at(","):
            ch += [self.take(), self.identifier()]
        return _rule("port_declaration", ch)

    # module items ----------------------------------------------------------

    def module_item(self) -> list[Node]:
        if self.at("parameter"):
            return [self.parameter_declaration(), self.expect(";")]
        if self.at("localparam"):
            return [self.local_parameter_declaration(), self.expect(";")]
        if self.at(*DIRECTIONS):
            return [self.port_declaration(), self.expect(";")]
        if self.at("wire"):
            return [self.net_declaration()]
        if self.at(*VAR_TYPES):
            return [self.data_declaration()]
        if self.at("assign"):
            return [self.continuous_assignment()]
        if self.at(*ALWAYS_KW):
            return [self.always_construct()]
        if self.at("initial"):
            return [_rule("initial_construct", [self.take(), *self.statement()])]
        if self.at("import"):
            return [self.package_import_declaration()]
        if self.at_kind("ident") and (self.at_kind("ident", 1) or self.at("#", ahead=1)):
            return [self.module_program_interface_instantiation()]
        raise self.error(
            "expected a module item",
            ("parameter", "localparam", "wire", "reg", "logic", "assign", "always",
             "initial", "import", "endmodule", "ident"),
        )

    def net_declaration(self) -> Node:
        ch = [self.expect("wire")]
        if self.at("logic"):
            ch.append(self.take())
        if self.at("signed", "unsigned"):
            ch.append(self.take())
        while self.at("["):
            ch.append(self.packed_dimension())
        ch.append(self._declarator("net_decl_assignment"))
        while self.at(","):
            ch += [self.take(), self._declarator("net_decl_assignment")]
        ch.append(self.expect(";"))
        return _rule("net_declaration", ch)

    def data_declaration(self) -> Node:
        ch = [self.expect(*VAR_TYPES)]
        if self.at("signed", "unsigned"):
            ch.append(self.take())
        while self.at("["):
            ch.append(self.packed_dimension())
        ch.append(self._declarator("variable_decl_assignment"))
        while self.at(","):
            ch += [self.take(), self._declarator("variable_decl_assignment")]
        ch.append(self.expect(";"))
        return _rule("data_declaration", ch)

    def _declarator(self, kind: str) -> Node:
        ch = [self.identifier()]
        while self.at("["):
            ch.append(self.unpacked_dimension())
        if self.at("="):
            ch += [self.take(), self.expression()]
        return _rule(kind, ch)

    def continuous_assignment(self) -> Node:
        ch = [self.expect("assign"), self.variable_assignment()]
        while self.at(","):
            ch += [self.take(), self.variable_assignment()]
        ch.append(self.expect(";"))
        return _rule("continuous_assignment", ch)

    def variable_assignment(self) -> Node:
        return _rule("variable_assignment", [self.lvalue(), self.expect("="), self.expression()])

    def lvalue(self) -> Node:
        if self.at("{"):
            ch = [self.take(), self.lvalue()]
            while self.at(","):
                ch += [self.take(), self.lvalue()]
            ch.append(self.expect("}"))
            return _rule("variable_lvalue", ch)
        ident = self.identifier()
        if not self.at("["):
            return ident
        ch = [ident]
        while self.at("["):
            ch.append(self.select())
        return _rule("variable_lvalue", ch)

    def always_construct(self) -> Node:
        ch = [self.expect(*ALWAYS_KW)]
        if self.at("@"):
            ch.append(self.event_control())
        ch.extend(self.statement())
        return _rule("always_construct", ch)

    def event_control(self) -> Node:
        ch = [self.expect("@")]
        if self.at("*"):
            ch.append(self.take())
        elif self.at("("):
            ch.append(self.take())
            if self.at("*"):
                ch.append(self.take())
            else:
                ch.append(self.event_expression())
            ch.append(self.expect(")"))
        else:
            ch.append(self.identifier())
        return _rule("event_control", ch)

    def event_expression(self) -> Node:
        ch = [self.event_term()]
        while self.at("or", ","):
            ch += [self.take(), self.event_term()]
        return _rule("event_expression", ch)

    def event_term(self) -> Node:
        ch = []
        if self.at("posedge", "negedge"):
            ch.append(self.take())
        ch.append(self.identifier())
        return _rule("event_term", ch)

    # instantiation ---------------------------------------------------------

    def module_program_interface_instantiation(self) -> Node:
        ch = [self.identifier()]
        if self.at("#"):
            ch.append(self.parameter_value_assignment())
        ch.append(self.hierarchical_instance())
        while self.at(","):
            ch += [self.take(), self.hierarchical_instance()]
        ch.append(self.expect(";"))
        return _rule("module_program_interface_instantiation", ch)

    def parameter_value_assignment(self) -> Node:
        ch = [self.expect("#"), self.expect("(")]
        if not self.at(")"):
            ch.append(self._param_connection())
            while self.at(","):
                ch += [self.take(), self._param_connection()]
        ch.append(self.expect(")"))
        return _rule("parameter_value_assignment", ch)

    def _param_connection(self) -> Node:
        if self.at("."):
            ch = [self.take(), self.identifier(), self.expect("(")]
            if not self.at(")"):
                ch.append(self.expression())
            ch.append(self.expect(")"))
            return _rule("named_parameter_assignment", ch)
        return _rule("ordered_parameter_assignment", [self.expression()])

    def hierarchical_instance(self) -> Node:
        ch = [self.identifier()]
        while self.at("["):
            ch.append(self.unpacked_dimension())
        ch.append(self.expect("("))
        if not self.at(")"):
            ch.append(self._port_connection())
            while self.at(","):
                ch += [self.take(), self._port_connection()]
        ch.append(self.expect(")"))
        return _rule("hierarchical_instance", ch)

    def _port_connection(self) -> Node:
        if self.at("."):
            dot = self.take()
            if self.at("*"):
                return _rule("named_port_connection", [dot, self.take()])
            ch = [dot, self.identifier()]
            if self.at("("):
                ch.append(self.take())
                if not self.at(")"):
                    ch.append(self.expression())
                ch.append(self.expect(")"))
            return _rule("named_port_connection", ch)
        return _rule("ordered_port_connection", [self.expression()])

    # statements ------------------------------------------------------------

    def statement(self) -> list[Node]:
        """One statement; assignments come back as [assignment, ';']."""
        if self.at("begin"):
            return [self.seq_block()]
        if self.at("if") or (self.at("unique", "priority") and self.at("if", ahead=1)):
            return [self.conditional_statement()]
        if self.at(*CASE_KW) or (self.at("unique", "priority") and self.at(*CASE_KW, ahead=1)):
            return [self.case_statement()]
        if self.at(";"):
            return [_rule("null_statement", [self.take()])]
        if self.at_kind("ident") or self.at("{"):
            lhs = self.lvalue()
            if self.at("="):
                node = _rule("blocking_assignment", [lhs, self.take(), self.expression()])
            elif self.at("<="):
                node = _rule("nonblocking_assignment", [lhs, self.take(), self.expression()])
            else:
                raise self.error("expected an assignment operator", ("=", "<="))
            return [node, self.expect(";")]
        raise self.error("expected a statement", ("begin", "if", "case", "ident", ";"))

    def seq_block(self) -> Node:
        ch = [self.expect("begin")]
        self.end_label(ch)
        while not self.at("end"):
            if self.peek() is None:
                raise self.error("unterminated block", ("end",))
            ch.extend(self.statement())
        ch.append(self.expect("end"))
        self.end_label(ch)
        return _rule("seq_block", ch)

    def conditional_statement(self) -> Node:
        ch = []
        if self.at("unique", "priority"):
            ch.append(self.take())
        ch += [self.expect("if"), self.expect("("), self.expression(), self.expect(")")]
        ch.extend(self.statement())
        while self.at("else") and self.at("if", ahead=1):
            ch += [self.take(), self.take(), self.expect("("), self.expression(), self.expect(")")]
            ch.extend(self.statement())
        if self.at("else"):
            ch.append(self.take())
            ch.extend(self.statement())
        return _rule("conditional_statement", ch)

    def case_statement(self) -> Node:
        ch = []
        if self.at("unique", "priority"):
            ch.append(self.take())
        ch += [self.expect(*CASE_KW), self.expect("("), self.expression(), self.expect(")")]
        while not self.at("endcase"):
            if self.peek() is None:
                raise self.error("unterminated case", ("endcase",))
            ch.append(self.case_item())
        ch.append(self.expect("endcase"))
        return _rule("case_statement", ch)

    def case_item(self) -> Node:
        if self.at("default"):
            ch = [self.take()]
            if self.at(":"):
                ch.append(self.take())
        else:
            ch = [self.expression()]
            while self.at(","):
                ch += [self.take(), self.expression()]
            ch.append(self.expect(":"))
        ch.extend(self.statement())
        return _rule("case_item", ch)

    # expressions -----------------------------------------------------------

    def expression(self) -> Node:
        return _rule("expression", [self.ternary()])

    def ternary(self) -> Node:
        cond = self.binary(1)
        if not self.at("?"):
            return cond
        ch = [cond, self.take(), self.ternary(), self.expect(":"), self.ternary()]
        return _rule("conditional_expression", ch)

    def binary(self, min_prec: int) -> Node:
        lhs = self.unary()
        while True:
            t = self.peek()
            if t is None or t.kind != "op" or t.text not in BINARY_PREC:
                return lhs
            prec = BINARY_PREC[t.text]
            if prec < min_prec:
                return lhs
            op = self.take()
            # ** is right associative, everything else left associative
            rhs = self.binary(prec if t.text == "**" else prec + 1)
            lhs = _rule("binary_expression", [lhs, op, rhs])

    def unary(self) -> Node:
        t = self.peek()
        if t is not None and t.kind == "op" and t.text in UNARY_OPS:
            return _rule("unary_expression", [self.take(), self.unary()])
        return self.primary()

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            raise self.error("expected an expression")
        if t.kind == "num":
            return _rule("primary", [_rule("number", [self.take()])])
        if t.kind == "ident":
            if self.at("::", ahead=1):
                ch = [_rule("scoped_identifier", [self.identifier(), self.take(), self.identifier()])]
            else:
                ch = [self.identifier()]
            while self.at("["):
                ch.append(self.select())
            return _rule("primary", ch)
        if t.kind == "sysid":
            return _rule("primary", [self.system_function_call()])
        if self.at("("):
            return _rule("primary", [self.take(), self.expression(), self.expect(")")])
        if self.at("{"):
            return _rule("primary", [self.concatenation_or_replication()])
        raise self.error("expected an expression", ("ident", "num", "(", "{"))

    def select(self) -> Node:
        ch = [self.expect("["), self.expression()]
        if self.at(":", "+:", "-:"):
            ch += [self.take(), self.expression()]
        ch.append(self.expect("]"))
        return _rule("select", ch)

    def system_function_call(self) -> Node:
        ch = [self.expect_kind("sysid")]
        if self.at("("):
            ch += [self.take(), self.expression()]
            while self.at(","):
                ch += [self.take(), self.expression()]
            ch.append(self.expect(")"))
        return _rule("system_function_call", ch)

    def concatenation_or_replication(self) -> Node:
        lbrace = self.expect("{")
        first = self.expression()
        if self.at("{"):
            inner = self.concatenation_or_replication()
            if inner.kind != "concatenation":
                inner = _rule("concatenation", [inner])
            return _rule("multiple_concatenation", [lbrace, first, inner, self.expect("}")])
        ch = [lbrace, first]
        while self.at(","):
            ch += [self.take(), self.expression()]
        ch.append(self.expect("}"))
        return _rule("concatenation", ch)


# Entry points usable as start symbols when a fragment is parsed in isolation.
_ENTRY = {
    "compilation_unit": _Parser.compilation_unit,
    "module_declaration": _Parser.module_declaration,
    "package_declaration": _Parser.package_declaration,
    "ansi_port_declaration": _Parser.ansi_port_declaration,
    "parameter_declaration": _Parser.parameter_declaration,
    "local_parameter_declaration": _Parser.local_parameter_declaration,
    "param_assignment": _Parser.param_assignment,
    "module_program_interface_instantiation": _Parser.module_program_interface_instantiation,
    "continuous_assignment": _Parser.continuous_assignment,
    "variable_assignment": _Parser.variable_assignment,
    "always_construct": _Parser.always_construct,
    "conditional_statement": _Parser.conditional_statement,
    "case_statement": _Parser.case_statement,
    "case_item": _Parser.case_item,
    "seq_block": _Parser.seq_block,
    "expression": _Parser.expression,
    "simple_identifier": _Parser.identifier,
    "package_import_declaration": _Parser.package_import_declaration,
    "net_declaration": _Parser.net_declaration,
    "data_declaration": _Parser.data_declaration,
}


def _bare_assignment(kind: str, op: str):
    def entry(p: _Parser) -> Node:
        return _rule(kind, [p.lvalue(), p.expect(op), p.expression()])

    return entry


_ENTRY["blocking_assignment"] = _bare_assignment("blocking_assignment", "=")
_ENTRY["nonblocking_assignment"] = _bare_assignment("nonblocking_assignment", "<=")


def parse(tokens: TokenStream, start: str = "compilation_unit") -> ParseTree:
    """Parse a token stream into a :class:`ParseTree` rooted at ``start``.

    Raises :class:`ParseError` (with the expected-token set and offset) on
    the first syntax error; no partial tree is ever returned.
    """
    try:
        entry = _ENTRY[start]
    except KeyError:
        raise ValueError(f"{start!r} cannot be used as a start symbol") from None
    p = _Parser(tokens)
    root = entry(p)
    if p.peek() is not None:
        raise p.error("trailing input")
    return ParseTree(tokens.source, root, GRAMMAR, tokens.tokens)


def parse_text(source: str, start: str = "compilation_unit") -> ParseTree:
    return parse(tokenize(source), start)


def entry_rules() -> frozenset[str]:
    return frozenset(_ENTRY)
