"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/config problems exit with 2,
capability (resource-limit) problems with 3, verification failures with 4.
"""


class PauliBenchError(Exception):
    """Base class for all package errors."""


class UsageError(PauliBenchError, ValueError):
    """Invalid arguments: mismatched sizes, bad labels, invalid distributions."""


class CapabilityError(PauliBenchError):
    """Request exceeds a documented resource limit (qubit count, memory)."""


class ConfigError(PauliBenchError):
    """Malformed or inconsistent experiment configuration."""


class FitError(PauliBenchError):
    """Decay fit could not be performed (too few usable points)."""
