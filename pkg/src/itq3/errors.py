"""Exception types for the itq3 codec.

Every exception carries a short machine-greppable ``ident`` used by the
CLI to emit single-line error identifiers.
"""

from __future__ import annotations


class ItqError(Exception):
    """Base class for all itq3 errors."""

    ident = "error"


class LengthError(ItqError, ValueError):
    """Block or code-stream length is not acceptable (power of two, range, multiple-of-8)."""

    ident = "bad-length"


class DomainError(ItqError, ValueError):
    """A numeric argument is outside its valid domain (non-finite, non-positive, out of range)."""

    ident = "bad-domain"


class ShapeError(ItqError, ValueError):
    """Operand dimensions do not match."""

    ident = "bad-shape"


class CorruptionError(ItqError, ValueError):
    """Serialized data decodes to values that a valid encoder cannot produce."""

    ident = "corrupt-data"


class ContainerError(ItqError):
    """Base class for container stream errors."""

    ident = "bad-container"


class BadMagicError(ContainerError):
    ident = "bad-magic"


class UnsupportedVersionError(ContainerError):
    ident = "bad-version"


class TruncatedStreamError(ContainerError):
    ident = "truncated"


class SizeMismatchError(ContainerError):
    ident = "size-mismatch"
