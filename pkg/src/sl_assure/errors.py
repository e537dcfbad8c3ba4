"""Exception hierarchy shared by all sl_assure modules."""

from __future__ import annotations


class SLAssureError(Exception):
    """Base class for every error raised by this package."""


# -- opinion algebra ---------------------------------------------------------


class InvalidOpinion(SLAssureError, ValueError):
    """Opinion components out of range or mass sum off by more than tolerance."""


class InvalidEvidence(SLAssureError, ValueError):
    """Negative evidence counts or non-positive prior weight."""


class DogmaticOpinion(SLAssureError, ValueError):
    """Opinion with zero uncertainty has no finite Beta representation."""


class BaseRateMismatch(SLAssureError, ValueError):
    """Fused opinions disagree on the base rate."""


class InvalidTarget(SLAssureError, ValueError):
    """Requested uncertainty level is below the opinion's current uncertainty."""


# -- argument graph ----------------------------------------------------------


class SchemaError(SLAssureError, ValueError):
    """Document does not match the expected schema.

    ``path`` locates the offending element, e.g. ``nodes[3].kind``.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.detail = message


class CycleError(SLAssureError, ValueError):
    """Support edges form a cycle."""


class DanglingReference(SLAssureError, ValueError):
    """An edge or SPI attachment names a node that does not exist."""


class UnknownClaim(SLAssureError, KeyError):
    """No node with the requested identifier."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown claim"


class KindMismatch(SLAssureError, ValueError):
    """Operation is not allowed on this node kind."""


class AttachmentError(SLAssureError, ValueError):
    """SPI spec does not belong to the requested claim."""


# -- monitor -----------------------------------------------------------------


class WindowSizeMismatch(SLAssureError, ValueError):
    """A full window was requested but the frame count differs from k."""


class OrderingError(SLAssureError, ValueError):
    """Frame ids are not strictly increasing."""


class LogFormatError(SchemaError):
    """A frame log line is malformed."""
