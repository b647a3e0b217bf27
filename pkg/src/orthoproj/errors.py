"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible lengths or shapes."""


class NumericError(ArithmeticError):
    """A computation produced or was handed a non-finite value."""


class ConfigurationError(ValueError):
    """A hyperparameter, config file, or call violates its contract."""


class PreconditionError(ValueError):
    """An operation was invoked outside its documented domain."""
