"""Exception types shared across the package.

The three classes mirror the CLI exit-code contract: parse errors (1),
invariant violations (2), size guards (3).
"""


class GraphParseError(ValueError):
    """An input document (edge list, CSV, JSON) is malformed."""


class InvariantViolation(ValueError):
    """A structural invariant or operation precondition is violated."""


class SizeGuardExceeded(ValueError):
    """An exact enumeration was refused because the input is too large."""
