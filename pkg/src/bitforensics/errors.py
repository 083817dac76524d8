"""Exception types shared across the package."""

from __future__ import annotations


class BitForensicsError(Exception):
    """Base class for every error this package raises on bad data or usage."""


class UnknownClassError(BitForensicsError):
    """A class code does not belong to the requested taxonomy."""

    def __init__(self, code: str, kind: str, valid_codes: tuple[str, ...]):
        self.code = code
        self.kind = kind
        self.valid_codes = valid_codes
        super().__init__(
            f"unknown {kind} class {code!r}; valid codes: {', '.join(valid_codes)}"
        )


class ParseError(BitForensicsError):
    """A text input (detection lines, CSV) could not be parsed."""

    def __init__(self, reason: str, line: int | None = None, path=None):
        self.reason = reason
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}:"
        super().__init__(f"{where} {reason}" if where else reason)


class ManifestError(BitForensicsError):
    """A bit manifest violates its schema (duplicate ids, bad view, ...)."""


class MissingFileError(BitForensicsError):
    """A file referenced by a manifest does not exist or cannot be read."""

    def __init__(self, path, detail: str = "file not found"):
        self.path = path
        super().__init__(f"{path}: {detail}")


class GreenConflictError(BitForensicsError):
    """A cause-label row marks green together with another failure cause."""


class ShapeMismatchError(BitForensicsError):
    """Training inputs X and Y disagree in length or width."""


class DimensionMismatchError(BitForensicsError):
    """Prediction features do not match the fitted feature dimension."""


class LengthMismatchError(BitForensicsError):
    """Predicted and true label sequences have different lengths."""


class EmptySetError(BitForensicsError):
    """An operation that needs at least one element received none."""


class NoGroundTruthError(BitForensicsError):
    """Detection evaluation requires at least one class with ground truth."""
