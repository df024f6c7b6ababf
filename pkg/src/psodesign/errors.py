"""Exception types shared across the package."""


class PsoDesignError(Exception):
    """Base class for all package errors."""


class ConfigError(PsoDesignError, ValueError):
    """A configuration, contract, or input-domain violation."""


class SingularDesignError(PsoDesignError, ArithmeticError):
    """An operation required a nonsingular information matrix."""


class InfeasibleSpaceError(PsoDesignError, RuntimeError):
    """No feasible point could be produced for the factor space."""


class RepairFailedError(PsoDesignError, RuntimeError):
    """Boundary repair could not reach the feasible region; caller should resample."""
