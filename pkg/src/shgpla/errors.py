"""Exception types shared across the package.

The CLI maps these onto process exit codes (see :mod:`shgpla.cli`).
"""


class ArgumentError(ValueError):
    """Invalid input: out-of-range index, bad block label, malformed state."""


class ConvergenceError(RuntimeError):
    """An eigenvalue bracket failed to isolate exactly one root."""


class CapacityError(RuntimeError):
    """A requested expansion needs blocks beyond the configured size cap."""

    def __init__(self, message, required_s_max=None):
        super().__init__(message)
        self.required_s_max = required_s_max


class UndefinedMeasureError(ValueError):
    """A relative measure was requested for an all-zero reference spectrum."""
