"""Complex linear-algebra kernel and reproducible complex-Gaussian sampling.

Everything here is pure and value-typed: dense unitary transforms, Cholesky
solves for Hermitian positive-definite systems, and seeded CN(0,1) draws.
Transforms are built as dense P x P matrices; at the pilot counts this
package targets (P <= 128) that is both fast enough and easier to reason
about than FFT plans.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .errors import ShapeError, SingularMatrixError
from .validation import as_complex_matrix, check_hermitian


def idft_matrix(P: int) -> np.ndarray:
    """Unitary P x P inverse-DFT matrix with entries exp(+2j*pi*p*q/P)/sqrt(P).

    The matching forward transform is the conjugate transpose.
    """
    if P < 1:
        raise ShapeError(f"transform size must be >= 1, got {P}")
    idx = np.arange(P)
    # integer (p*q) mod P keeps the phase argument small and exact
    phase = (np.outer(idx, idx)) % P
    return np.exp(2j * np.pi * phase / P) / np.sqrt(P)


def hermitian_solve(A, B) -> np.ndarray:
    """Solve A @ X = B for Hermitian positive-definite A via Cholesky.

    B may be a vector or a matrix with matching row count.  Raises
    ShapeError when A is visibly non-Hermitian and SingularMatrixError
    (carrying the failing pivot) when the factorization breaks down.
    """
    A = check_hermitian(A)
    B = np.asarray(B, dtype=np.complex128)
    b2d = B.reshape(-1, 1) if B.ndim == 1 else B
    if b2d.ndim != 2 or b2d.shape[0] != A.shape[0]:
        raise ShapeError(
            f"right-hand side rows {B.shape} do not match system size {A.shape[0]}"
        )
    c, info = lapack.zpotrf(A, lower=1)
    if info > 0:
        raise SingularMatrixError(pivot=info - 1)
    if info < 0:
        raise np.linalg.LinAlgError(f"zpotrf: illegal argument {-info}")
    x, info = lapack.zpotrs(c, b2d, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"zpotrs failed with info={info}")
    return x.reshape(B.shape)


def crandn(n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. CN(0,1) samples: real and imaginary parts each N(0, 1/2)."""
    if n < 0:
        raise ShapeError(f"sample count must be >= 0, got {n}")
    z = rng.standard_normal(2 * n)
    return (z[:n] + 1j * z[n:]) / np.sqrt(2)


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator derived from (master_seed, *path).

    Derivation is order-independent: any worker can reconstruct the stream
    for, say, (seed, trial, link) without touching other streams.
    """
    return np.random.default_rng(np.random.SeedSequence((int(master_seed), *map(int, path))))


__all__ = ["idft_matrix", "hermitian_solve", "crandn", "substream"]
