"""Exception hierarchy with machine-readable error kinds.

The CLI maps InputError (and subclasses) to exit code 2 and everything
else to exit code 1; the annotation service maps kinds to HTTP statuses.
"""

from __future__ import annotations


class HypersalError(Exception):
    """Base error. `kind` is a stable machine-readable identifier."""

    default_kind = "internal"

    def __init__(self, message: str, *, kind: str | None = None):
        super().__init__(message)
        self.kind = kind or self.default_kind


class InputError(HypersalError):
    """Invalid or missing user-supplied input."""

    default_kind = "input-invalid"


class ValidationError(InputError):
    """A value violates a type invariant or operation precondition."""

    default_kind = "validation"


class FormatError(InputError):
    """A file exists but does not follow the expected format."""

    default_kind = "format"


class MissingInputError(InputError):
    """A required input file does not exist."""

    default_kind = "input-missing"


class PointOnEdgeError(InputError):
    """An annotated point landed on a barrier pixel."""

    default_kind = "point-on-edge"
