"""Input validation helpers for array arguments.

Small sklearn-flavored checkers; all return complex128/float64 ndarrays so the
numeric kernels never have to re-coerce dtypes.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

HERMITIAN_TOL = 1e-9


def as_complex_vector(x, length: int | None = None, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {x.shape}")
    if length is not None and x.shape[0] != length:
        raise ShapeError(f"{name} must have length {length}, got {x.shape[0]}")
    return x


def as_complex_matrix(a, name: str = "A") -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def check_square(a: np.ndarray, name: str = "A") -> np.ndarray:
    a = as_complex_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "A") -> np.ndarray:
    a = check_square(a, name)
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise ShapeError(f"{name} is not Hermitian (max deviation {dev:.3e} > {tol:.0e})")
    return a


def hermitianize(a: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part; output satisfies A == A^H exactly."""
    return (a + a.conj().T) / 2
