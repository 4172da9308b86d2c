"""Exception hierarchy.

The CLI maps these onto exit codes: ``DataError`` subclasses exit with 2,
``NumericError`` subclasses with 3.
"""

from __future__ import annotations


class NeuroplastError(Exception):
    pass


class DataError(NeuroplastError):
    """Bad input: unreadable files, malformed config, invalid parameters."""


class NumericError(NeuroplastError):
    """A simulation or sampling step could not be carried out."""


class Violation:
    """One failed parameter check."""

    def __init__(self, kind: str, field: str, value=None, bounds=None, message: str = ""):
        self.kind = kind
        self.field = field
        self.value = value
        self.bounds = bounds
        self.message = message

    def __repr__(self) -> str:
        return f"Violation({self.kind!r}, {self.field!r}, value={self.value!r}, bounds={self.bounds!r})"

    def __str__(self) -> str:
        if self.kind == "OutOfRange":
            lo, hi = self.bounds
            return f"{self.field}={self.value!r} outside [{lo}, {hi}]"
        if self.kind == "MissingField":
            return f"missing field {self.field!r}"
        return self.message or f"{self.kind}: {self.field}"


class ParamValidationError(DataError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NonIntegralCellCount(DataError):
    pass


class CflViolation(NumericError):
    def __init__(self, step: int, courant: float):
        self.step = step
        self.courant = courant
        super().__init__(f"CFL number {courant:.6g} > 1 at step {step}")


class HypothesisViolated(NumericError):
    def __init__(self, which: str, detail: str = ""):
        self.which = which
        super().__init__(f"hypothesis proxy failed: {which}" + (f" ({detail})" if detail else ""))


class Unclassifiable(NumericError):
    pass


class UnsupportedDimension(DataError):
    pass


class EmptyResult(NumericError):
    pass


class TooFewRows(NumericError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RangeError(DataError):
    pass


class EmptyCategory(DataError):
    pass


class ConfigError(DataError):
    pass


class UnknownKey(ConfigError):
    pass


class ValidationError(ConfigError):
    """A config value is well-formed JSON but not acceptable."""

    def __init__(self, message: str, violations=None):
        self.violations = list(violations or [])
        super().__init__(message)
