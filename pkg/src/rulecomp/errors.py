"""Exception hierarchy shared across the package."""

from __future__ import annotations


class RuleCompError(Exception):
    """Base class for every error raised by rulecomp."""


# grammar ------------------------------------------------------------------


class LexError(RuleCompError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ParseError(RuleCompError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        detail = message
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(f"{detail} at offset {offset}")
        self.offset = offset
        self.expected = expected


class UnknownRule(RuleCompError):
    pass


class SchemaError(RuleCompError):
    pass


class SpanError(RuleCompError):
    pass


# preprocessor -------------------------------------------------------------


class PreprocessError(RuleCompError):
    pass


class MissingInclude(PreprocessError):
    pass


class UnbalancedConditional(PreprocessError):
    pass


class RecursiveInclude(PreprocessError):
    """Include cycle, or macro expansion exceeding the recursion cap."""


class MacroArityMismatch(PreprocessError):
    pass


class UndefinedMacro(PreprocessError):
    pass


class OutOfRange(RuleCompError):
    pass


# sampling / context -------------------------------------------------------


class PlaceholderCollision(RuleCompError):
    pass


class NoEnclosingUnit(RuleCompError):
    pass


class TokenizerFailure(RuleCompError):
    pass


# prompts ------------------------------------------------------------------


class SpanOutOfRange(RuleCompError):
    pass


class TemplateSlotMissing(RuleCompError):
    pass


# verifier -----------------------------------------------------------------


class ElaborationError(RuleCompError):
    """Anything that stops a design from becoming a netlist."""


class UnsupportedConstruct(ElaborationError):
    def __init__(self, what: str, offset: int | None = None):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unsupported construct: {what}{where}")
        self.what = what
        self.offset = offset


class MultipleDrivers(ElaborationError):
    pass


class CombinationalLoop(ElaborationError):
    pass


class WidthMismatch(ElaborationError):
    pass


class InterfaceMismatch(RuleCompError):
    pass


class ExternalToolFailure(RuleCompError):
    def __init__(self, status: int, stderr: str):
        super().__init__(f"external tool exited with status {status}: {stderr.strip()}")
        self.status = status
        self.stderr = stderr


# llm client ---------------------------------------------------------------


class LLMError(RuleCompError):
    pass


class AuthError(LLMError):
    pass


class EndpointUnreachable(LLMError):
    pass


class RetriesExhausted(LLMError):
    pass


class EmptyCompletion(LLMError):
    pass


# harness ------------------------------------------------------------------


class ConfigError(RuleCompError):
    pass


class StageError(RuleCompError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
