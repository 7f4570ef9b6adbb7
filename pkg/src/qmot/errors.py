"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so that the command
line front end can turn it into a structured error object.
"""

from __future__ import annotations


class QmotError(Exception):
    code = "E_QMOT"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "context": self.context}


class ParseError(QmotError, ValueError):
    code = "E_PARSE"


class HermitianError(QmotError, ValueError):
    code = "E_HERM"


class NotPositiveDefiniteError(QmotError, ValueError):
    code = "E_PD"


class TraceMismatchError(QmotError, ValueError):
    code = "E_TRACE"


class DimensionError(QmotError, ValueError):
    code = "E_DIM"


class BasisError(QmotError, ValueError):
    """A candidate Lindblad basis does not give an identity-only null space."""

    code = "E_BASIS"


class UsageError(QmotError, ValueError):
    """Bad command line flags."""

    code = "E_USAGE"
