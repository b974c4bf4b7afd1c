"""Exception types shared across the package."""


class BasisCapacityError(RuntimeError):
    """Basis enumeration would exceed the configured state-count limit."""


class BracketError(ValueError):
    """A root bracket does not isolate the feature it is supposed to."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IntegrationError(RuntimeError):
    """Time integration violated one of its accuracy guarantees."""


class DeltaInstabilityError(RuntimeError):
    """A finite-difference result changed too much under step halving."""


class ConfigError(ValueError):
    """A run configuration failed schema validation."""
