"""Closed-form performance analysis for the linear estimators.

For a linear estimate W @ hhat of h1 from hhat = h1 + c*h2 + noise, the mean
square error has the closed form

    MSE = Tr( W S W^H - W R1 - R1 W^H + R1 ),   S = R1 + C R2 C^H + sigma2 I

with C = diag(c).  `analytic_mse_linear` evaluates that for any filter;
`analytic_mse_f` / `analytic_mse_p` plug in the full-prior and partial-prior
filters.  The values are totals over the pilot grid; divide by P for a
per-subcarrier figure.

`build_phi` expresses a Wiener filter in the delay domain, Phi = F W F^H,
where the two ports live in disjoint half-windows.  The magnitudes of its
diagonal show which delay bins a filter keeps or suppresses.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .numerics import idft_matrix
from .validation import as_complex_matrix, as_complex_vector, check_hermitian, check_square
from .estimators import wiener_filter


def _observation_covariance(R1, R2, c, sigma2: float) -> np.ndarray:
    S = R1 + sigma2 * np.eye(R1.shape[0])
    if R2 is not None:
        S = S + (c[:, None] * R2) * c.conj()[None, :]
    return S


def analytic_mse_linear(W, R1, R2, c, sigma2: float) -> float:
    """Exact MSE of the linear estimate W @ hhat under the true statistics.

    `R2` may be None for a silent second port.  Returns the total over the
    pilot grid (real-valued; the trace's imaginary part is rounding noise).
    """
    W = as_complex_matrix(W, name="W")
    R1 = check_hermitian(R1, name="R1")
    if W.shape != R1.shape:
        raise ShapeError(f"W {W.shape} and R1 {R1.shape} must match")
    if R2 is not None:
        R2 = check_hermitian(R2, name="R2")
        c = as_complex_vector(c, R1.shape[0], "c")
    S = _observation_covariance(R1, R2, c, sigma2)
    Wh = W.conj().T
    mse = np.trace(W @ S @ Wh - W @ R1 - R1 @ Wh + R1)
    return float(mse.real)


def analytic_mse_f(R1, R2, c, sigma2: float) -> float:
    """MSE of the full-prior MMSE filter (the linear-MMSE bound)."""
    W = wiener_filter(R1, R2, c, sigma2)
    return analytic_mse_linear(W, R1, R2, c, sigma2)


def analytic_mse_p(R1, R2, c, sigma2: float) -> float:
    """MSE of the partial-prior filter evaluated under the true statistics.

    The filter is built with R1 substituted for the unknown R2, then scored
    against the actual observation covariance, so the result upper-bounds
    `analytic_mse_f` for the same arguments.
    """
    W = wiener_filter(R1, R1, c, sigma2)
    return analytic_mse_linear(W, R1, R2, c, sigma2)


def build_phi(R_num, R_den2, c, sigma2: float) -> np.ndarray:
    """Delay-domain picture Phi = F W F^H of a two-port Wiener filter.

    W = R_num (R_num + C R_den2 C^H + sigma2 I)^{-1}; pass R_den2=R_num for
    the partial-prior filter and R_den2=R2 for the full-prior one.
    """
    W = wiener_filter(R_num, R_den2, c, sigma2)
    F = idft_matrix(W.shape[0])
    return F @ W @ F.conj().T


def diag_magnitudes(phi) -> np.ndarray:
    """Magnitudes of the diagonal, indexed by delay bin."""
    phi = check_square(as_complex_matrix(phi, name="phi"), name="phi")
    return np.abs(np.diag(phi))
