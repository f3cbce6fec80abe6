"""Exception types shared across the package."""


class MgffaError(Exception):
    """Base class for package-specific errors."""


class InvalidDimensionError(MgffaError, ValueError):
    """Inputs have incompatible or unsupported shapes."""


class InvalidStateError(MgffaError, ValueError):
    """A model state violates an invariant, e.g. a nonpositive variance."""


class NumericalError(MgffaError, ArithmeticError):
    """A numerical routine broke down (Cholesky failure, weight underflow)."""


class DegenerateError(MgffaError, ValueError):
    """Degenerate input: zero residual, constant chain, empty scenario."""


class UndefinedMetricError(MgffaError, ValueError):
    """A metric is undefined for the given inputs."""


class ValidationError(MgffaError, ValueError):
    """A config file or CLI input failed validation."""


class ChainAbortError(MgffaError, RuntimeError):
    """A parameter update failed; records where the chain stopped."""

    def __init__(self, iteration: int, update: str, cause: BaseException):
        super().__init__(
            f"chain aborted at iteration {iteration} in update '{update}': {cause}"
        )
        self.iteration = iteration
        self.update = update
