"""Exception hierarchy shared across the package."""


class SfdError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(SfdError, ValueError):
    """An operation was called outside its documented preconditions."""


class DimensionError(ContractError):
    """Operand shapes or widths are incompatible."""


class NotPSDError(ContractError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class ScheduleError(SfdError):
    """A (t_s, t_z) pair matches none of the three denoising phases."""


class DivergenceError(SfdError, ArithmeticError):
    """A loss, gradient or ODE state became non-finite."""


class StiffnessError(SfdError, ArithmeticError):
    """The adaptive integrator's step size underflowed."""


class DependencyError(SfdError):
    """A required upstream artifact (dataset, checkpoint) is missing."""


class ConfigError(SfdError, ValueError):
    """Malformed or unknown configuration."""


class CheckpointError(SfdError):
    """A checkpoint file is corrupt or has an unsupported format."""
