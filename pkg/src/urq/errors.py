"""Exception types raised across the package."""


class ParameterError(ValueError):
    """Invalid dimension, count, or parameter combination."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class VacuousBoundError(ValueError):
    """The requested bound is vacuous for the given parameters (decay base >= 1)."""
