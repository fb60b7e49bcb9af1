"""Exception types shared across the package."""

from __future__ import annotations


class UnlabeledSensingError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(UnlabeledSensingError, ValueError):
    """Operands have incompatible dimensions."""


class NonFinite(UnlabeledSensingError, ValueError):
    """Input contains NaN or Inf; solver paths require finite entries."""


class NoConvergence(UnlabeledSensingError, RuntimeError):
    """An iterative factorization failed to converge."""


class InvalidK(UnlabeledSensingError, ValueError):
    """Requested shuffle count k is not realizable (k = 1 or k out of range)."""


class InvalidRange(UnlabeledSensingError, ValueError):
    """A numeric parameter is outside its admissible range."""


class InvalidConfig(UnlabeledSensingError, ValueError):
    """A configuration object fails validation."""


class InvalidSpec(UnlabeledSensingError, ValueError):
    """A benchmark or validation suite specification is malformed."""


class TooFewIterations(UnlabeledSensingError, ValueError):
    """Relative-change needs at least two recorded objective values."""


class SingularMatrix(UnlabeledSensingError, ValueError):
    """Smallest singular value is (numerically) zero where positivity is required."""


class EmptyBlockRule(UnlabeledSensingError, ValueError):
    """A blocking rule must name at least one column."""


class ParseError(UnlabeledSensingError, ValueError):
    """CSV parsing failed; carries file position context."""

    def __init__(self, message: str, *, path: str | None = None,
                 line: int | None = None, column: str | int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class NonNumeric(ParseError):
    """A cell that must be numeric could not be parsed as a float."""
