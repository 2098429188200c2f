"""Exception hierarchy; the CLI maps each family to an exit code."""


class GrowthNetError(Exception):
    """Base class for all library errors."""


class ValidationError(GrowthNetError, ValueError):
    """Malformed model, configuration or argument."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class CapacityError(GrowthNetError):
    """A computation would exceed a configured resource cap."""

    def __init__(self, message, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class RegimeError(GrowthNetError):
    """Asymptotic formula requested outside its regime."""
