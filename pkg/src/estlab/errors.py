"""Exception types shared across the package."""

import numpy as np


class ShapeError(ValueError):
    """An array argument has the wrong shape, size, or structure."""


class ConfigurationError(ValueError):
    """A parameter combination the library does not support."""


class InvalidPilotError(ValueError):
    """Pilot sequence violates the unit-modulus contract."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Cholesky factorization failed; `pivot` is the 0-based failing index."""

    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite (failed at pivot {pivot})")
