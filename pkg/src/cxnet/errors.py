"""Exception types shared across the package."""


class CxnetError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CxnetError, ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigError(CxnetError, ValueError):
    """A configuration object is internally inconsistent."""


class SymmetryError(InvalidInputError):
    """A spectrum expected to be conjugate-symmetric is not, beyond tolerance."""


class DataFormatError(CxnetError, ValueError):
    """An input file does not match the documented schema.

    ``line`` is the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingError(CxnetError, RuntimeError):
    """Training diverged (non-finite loss/gradient). Carries the epoch index."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
