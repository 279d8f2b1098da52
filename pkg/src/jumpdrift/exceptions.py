"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid argument to a public operation."""


class DivergenceError(RuntimeError):
    """Euler state left the finite range; carries the failing location."""

    def __init__(self, step, path_index=None):
        self.step = step
        self.path_index = path_index
        where = f"step {step}" if path_index is None else f"path {path_index}, step {step}"
        super().__init__(f"simulation diverged to a non-finite state at {where}")


class SingularMatrixError(RuntimeError):
    """Cholesky pivot fell below the relative threshold."""


class NumericsError(RuntimeError):
    """Non-finite intermediate value in a numeric routine."""


class DegenerateDataError(RuntimeError):
    """Input data carries no usable information for the request."""


class BundleFormatError(RuntimeError):
    """Malformed bundle file; message names the offending row."""
