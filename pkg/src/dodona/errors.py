"""Error types shared across the package.

A `choose` over an empty list is *not* an error (it is a dead search
branch); everything here is a hard fault that should stop the caller.
"""


class DodonaError(Exception):
    """Base class for all errors raised by this package."""


class SourceSpan:
    """Byte offsets [start, end) into the source text."""

    __slots__ = ("start", "end")

    def __init__(self, start: int, end: int):
        assert start <= end
        self.start = start
        self.end = end

    def __repr__(self):
        return f"SourceSpan({self.start}, {self.end})"

    def __eq__(self, other):
        return (
            isinstance(other, SourceSpan)
            and self.start == other.start
            and self.end == other.end
        )


class LexError(DodonaError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{message} at {span.start}..{span.end}")
        self.span = span


class ParseError(DodonaError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        loc = f" at {span.start}..{span.end}" if span is not None else ""
        super().__init__(message + loc)
        self.span = span


class DodonaRuntimeError(DodonaError):
    """Hard runtime fault: unbound symbol, bad arity, division by zero,
    integer overflow, applying a non-function, and friends."""


class BudgetExceededError(DodonaError):
    """The step budget for one evaluation ran out."""


class GraphTooLargeError(DodonaError):
    """Choicepoint graph construction crossed the node-count guard."""


class OracleFailure(DodonaError):
    """Remote oracle timed out or returned a malformed response."""
