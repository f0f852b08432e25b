"""Exception hierarchy shared across the package."""


class SpgradError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(SpgradError):
    """Invalid configuration value or mismatched component wiring."""


class NumericError(SpgradError):
    """A computation produced a non-finite or otherwise unusable value."""


class OracleBudgetError(SpgradError):
    """An exact-enumeration oracle would exceed its path budget."""
