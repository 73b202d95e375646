"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: MalformedInputError and
CapacityError are input/capacity problems (exit 2), InvariantViolation
signals an engine bug (exit 1).
"""


class DynconError(Exception):
    pass


class MalformedInputError(DynconError, ValueError):
    """Bad user input: malformed sequence, unknown op, invalid scenario."""


class CapacityError(DynconError, RuntimeError):
    """An exact enumeration would exceed its configured bound."""


class InvariantViolation(DynconError, AssertionError):
    """An internal invariant failed; indicates a bug, not bad input."""
