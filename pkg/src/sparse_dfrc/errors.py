"""Exception types shared across the package."""


class DFRCError(Exception):
    """Base class for all package errors."""


class ConfigError(DFRCError, ValueError):
    """Malformed configuration or invalid argument combination."""


class InfeasibleError(DFRCError):
    """An optimization problem has no point satisfying its constraints."""


class NotBooleanError(DFRCError):
    """Sequential convex programming ended on a fractional selection vector."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z
