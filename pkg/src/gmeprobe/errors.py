"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Tensor extents do not line up."""


class NumericError(ArithmeticError):
    """NaN or Inf appeared in a tensor."""


class CapabilityError(ValueError):
    """Request exceeds a dense-size limit of the implementation."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``best`` holds the best iterate found, in whatever form the solver uses.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateProjectionError(ArithmeticError):
    """Contrast projections annihilated the state."""
