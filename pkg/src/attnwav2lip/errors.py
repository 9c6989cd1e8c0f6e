"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/usage problems exit 2,
bad or missing data exits 3, violated runtime invariants exit 4.
"""


class ConfigurationError(Exception):
    """A model or run was configured inconsistently (wrong shapes, bad keys)."""


class DataError(Exception):
    """Input data is missing, malformed, or has the wrong geometry."""


class NumericGuardError(Exception):
    """A numeric precondition failed (zero-norm embedding, score out of range)."""


class InvariantViolation(Exception):
    """An internal contract was broken; indicates a programming error."""
