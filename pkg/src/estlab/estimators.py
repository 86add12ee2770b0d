"""Channel estimators for the two-port pilot model.

Five schemes over the LS-decoupled observation hhat = h1 + c*h2 + noise:

* dft     -- transform to the delay domain, keep the half-window belonging
             to each port, transform back.  Needs no prior knowledge.
* occ     -- combine adjacent pilots with the [1,1]/[1,-1] cover code, then
             Wiener-filter each port on the even pilot sub-grid.
* fmmse   -- linear MMSE using both ports' covariances ("full prior").
* pmmse   -- same filter shape with the unknown other-port covariance
             replaced by the user's own ("partial prior").
* spmmse  -- single-port Wiener filter that ignores the other port entirely;
             optimal when that port is silent.

Each scheme is an sklearn-style estimator: hyperparameters in the
constructor, `fit` builds the data-independent filter from the priors,
`transform` applies it to one observation vector or a batch.  Fitted filters
are plain matrices, so one `fit` serves any number of Monte-Carlo trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dmrs import LsObservation, PilotGrid
from .errors import ConfigurationError, ShapeError
from .numerics import hermitian_solve, idft_matrix
from .validation import as_complex_vector, check_hermitian, hermitianize


@dataclass(frozen=True)
class CovarianceSet:
    """Prior knowledge for the MMSE filters: per-port covariances plus noise power.

    `R2` may be None when the other port's statistics are unknown (the
    partial-prior and single-port schemes never look at it).  `sigma2` is the
    noise variance the filter is designed for, which the caller may choose to
    mismatch against the actual observation noise.
    """

    R1: np.ndarray
    R2: np.ndarray | None
    sigma2: float

    def __post_init__(self):
        R1 = check_hermitian(self.R1, name="R1")
        object.__setattr__(self, "R1", R1)
        if self.R2 is not None:
            R2 = check_hermitian(self.R2, name="R2")
            if R2.shape != R1.shape:
                raise ShapeError(f"R1 {R1.shape} and R2 {R2.shape} must match")
            object.__setattr__(self, "R2", R2)
        if not self.sigma2 > 0:
            raise ConfigurationError(f"filter noise variance must be > 0, got {self.sigma2}")

    @property
    def size(self) -> int:
        return self.R1.shape[0]

    def even_subgrid(self) -> "CovarianceSet":
        """Covariances of every second pilot (the post-combining sub-grid)."""
        return CovarianceSet(
            R1=self.R1[::2, ::2],
            R2=None if self.R2 is None else self.R2[::2, ::2],
            sigma2=self.sigma2,
        )


@dataclass(frozen=True)
class PortEstimates:
    """Per-port channel estimates on the pilot grid."""

    h1_hat: np.ndarray
    h2_hat: np.ndarray
    estimator: str

    def __post_init__(self):
        if not (np.all(np.isfinite(self.h1_hat)) and np.all(np.isfinite(self.h2_hat))):
            raise ShapeError("estimates must be finite")


def wiener_filter(R_self, R_inter, c, sigma2: float) -> np.ndarray:
    """W = R_self @ inv(R_self + diag(c) R_inter diag(c)^H + sigma2*I).

    `R_inter` may be None (no interfering port).  Realized as a Hermitian
    positive-definite solve; no explicit inverse is formed.
    """
    R_self = check_hermitian(R_self, name="R_self")
    S = R_self + sigma2 * np.eye(R_self.shape[0])
    if R_inter is not None:
        c = as_complex_vector(c, R_self.shape[0], "c")
        S = hermitianize(S + (c[:, None] * R_inter) * c.conj()[None, :])
    # W = R S^-1 and both are Hermitian, so W = (S^-1 R)^H
    return hermitian_solve(S, R_self).conj().T


def occ_combine(hhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """[1,1]/[1,-1] combining of adjacent pilots; halves the noise variance.

    Returns per-port length-P/2 estimates on the even pilot positions.
    """
    even = hhat[..., 0::2]
    odd = hhat[..., 1::2]
    return (even + odd) / 2, (even - odd) / 2


class TwoPortEstimatorBase(BaseEstimator):
    """Shared fit/transform plumbing; subclasses fill in the per-port filters."""

    label = "base"

    def _check_fitted(self):
        if not hasattr(self, "fitted_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted; call fit() before transform()")

    def fit(self, cov: CovarianceSet | None = None) -> "TwoPortEstimatorBase":
        """Build the data-independent filters from the priors."""
        self._build(cov)
        self.fitted_ = True
        return self

    def transform(self, hhat) -> np.ndarray:
        """Apply the fitted filters to observations with trailing dimension P.

        Returns an array shaped like the input with the last axis replaced by
        (2, P): index 0 along the new axis is the port-1 estimate, index 1 the
        port-2 estimate (zeros when that port could not be estimated).
        """
        self._check_fitted()
        P = self.pilot_grid.P
        hhat = np.asarray(hhat, dtype=np.complex128)
        if hhat.ndim == 0 or hhat.shape[-1] != P:
            raise ShapeError(f"observations must have trailing dimension {P}")
        lead = hhat.shape[:-1]
        flat = hhat.reshape(-1, P)
        out = self._apply(flat)
        return out.reshape(*lead, 2, P)

    def estimate(self, obs: LsObservation) -> PortEstimates:
        """Single-observation convenience wrapper around transform()."""
        h = self.transform(as_complex_vector(obs.hhat, self.pilot_grid.P, "hhat"))
        return PortEstimates(h1_hat=h[0], h2_hat=h[1], estimator=self.label)

    # subclass hooks -------------------------------------------------------
    def _build(self, cov: CovarianceSet | None):
        raise NotImplementedError

    def _apply(self, flat: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class DftEstimator(TwoPortEstimatorBase):
    """Delay-domain gating: ports occupy disjoint halves of the P-point window.

    Exact when the pilots cover the full band uniformly and each channel is
    shorter than P/2 samples; on a partial band the window leaks (Gibbs) and
    a residual error floor appears.
    """

    label = "dft"

    def __init__(self, pilot_grid: PilotGrid):
        self.pilot_grid = pilot_grid

    def _build(self, cov=None):
        pg = self.pilot_grid
        if pg.P % 2:
            raise ConfigurationError("delay-domain gating requires an even pilot count")
        if pg.delta_cs != pg.P // 2:
            raise ConfigurationError(
                f"delay-domain gating assumes a cyclic shift of P/2, got {pg.delta_cs}")
        self.idft_ = idft_matrix(pg.P)
        gate = np.zeros(pg.P)
        gate[: pg.P // 2] = 1.0  # port-1 half-window, indices 0 .. P/2-1
        self.gate_ = gate

    def _apply(self, flat):
        P = self.pilot_grid.P
        u = flat @ self.idft_.T                       # delay domain, per row
        h1 = (u * self.gate_) @ self.idft_.conj()     # forward transform of gated vector
        # port 2 sits in the upper half-window; rotate it back by P/2 first
        u2 = np.roll(u * (1.0 - self.gate_), -(P // 2), axis=-1)
        h2 = u2 @ self.idft_.conj()
        return np.stack([h1, h2], axis=1)


class OccMmseEstimator(TwoPortEstimatorBase):
    """Cover-code combining followed by per-port Wiener filtering.

    Combining assumes adjacent pilot responses are equal, so the scheme keeps
    an error floor on frequency-selective channels.  The combined noise has
    variance sigma2/2; set `literal_noise_variance=True` to design the filter
    with the unhalved sigma2 instead.  The length-P/2 output is expanded to
    length P by duplicating each value onto the following odd position.
    """

    label = "occ"

    def __init__(self, pilot_grid: PilotGrid, literal_noise_variance: bool = False):
        self.pilot_grid = pilot_grid
        self.literal_noise_variance = literal_noise_variance

    def _build(self, cov: CovarianceSet):
        pg = self.pilot_grid
        if pg.P % 2:
            raise ConfigurationError("cover-code combining requires an even pilot count")
        if pg.delta_cs != pg.P // 2:
            raise ConfigurationError(
                f"cover-code combining requires a cyclic shift of P/2, got {pg.delta_cs}")
        if cov is None:
            raise ConfigurationError("occ needs a CovarianceSet (own-port prior)")
        half = pg.P // 2
        if cov.size == pg.P:
            cov = cov.even_subgrid()
        elif cov.size != half:
            raise ShapeError(
                f"covariances must be {pg.P} x {pg.P} or restricted {half} x {half}")
        noise = cov.sigma2 if self.literal_noise_variance else cov.sigma2 / 2
        self.coef_port1_ = wiener_filter(cov.R1, None, None, noise)
        self.coef_port2_ = (None if cov.R2 is None
                            else wiener_filter(cov.R2, None, None, noise))

    def _apply(self, flat):
        n, P = flat.shape
        comb1, comb2 = occ_combine(flat)
        out = np.zeros((n, 2, P), dtype=np.complex128)
        half1 = comb1 @ self.coef_port1_.T
        out[:, 0, 0::2] = half1
        out[:, 0, 1::2] = half1
        if self.coef_port2_ is not None:
            half2 = comb2 @ self.coef_port2_.T
            out[:, 1, 0::2] = half2
            out[:, 1, 1::2] = half2
        return out


class _WienerTwoPortBase(TwoPortEstimatorBase):
    """Common transform for the full-P Wiener schemes.

    Port 1 filters hhat directly.  Port 2 is estimated by symmetry: rotating
    the observation by conj(c) turns hhat into h2 + conj(c)*h1 + noise, the
    same model with the roles swapped, so the port-1 machinery applies with
    the covariances exchanged and the ramp conjugated.
    """

    def _apply(self, flat):
        n, P = flat.shape
        out = np.zeros((n, 2, P), dtype=np.complex128)
        out[:, 0] = flat @ self.coef_port1_.T
        if self.coef_port2_ is not None:
            out[:, 1] = (flat * self.pilot_grid.c.conj()) @ self.coef_port2_.T
        return out


class FullPriorMmseEstimator(_WienerTwoPortBase):
    """Linear MMSE with both ports' covariances known."""

    label = "fmmse"

    def __init__(self, pilot_grid: PilotGrid):
        self.pilot_grid = pilot_grid

    def _build(self, cov: CovarianceSet):
        if cov is None or cov.R2 is None:
            raise ConfigurationError("fmmse needs both R1 and R2")
        c = self.pilot_grid.c
        self.coef_port1_ = wiener_filter(cov.R1, cov.R2, c, cov.sigma2)
        self.coef_port2_ = wiener_filter(cov.R2, cov.R1, c.conj(), cov.sigma2)


class PartialPriorMmseEstimator(_WienerTwoPortBase):
    """MMSE filter with the other port's covariance replaced by the user's own.

    Each port's user only needs its own covariance; the filter is the
    full-prior one with that substitution.
    """

    label = "pmmse"

    def __init__(self, pilot_grid: PilotGrid):
        self.pilot_grid = pilot_grid

    def _build(self, cov: CovarianceSet):
        if cov is None:
            raise ConfigurationError("pmmse needs the own-port covariance R1")
        c = self.pilot_grid.c
        self.coef_port1_ = wiener_filter(cov.R1, cov.R1, c, cov.sigma2)
        self.coef_port2_ = (None if cov.R2 is None
                            else wiener_filter(cov.R2, cov.R2, c.conj(), cov.sigma2))


class SinglePortMmseEstimator(_WienerTwoPortBase):
    """Wiener filter that models no interfering port at all.

    This is the optimal estimator when the other port is actually silent and
    a lower bound for it otherwise.
    """

    label = "spmmse"

    def __init__(self, pilot_grid: PilotGrid):
        self.pilot_grid = pilot_grid

    def _build(self, cov: CovarianceSet):
        if cov is None:
            raise ConfigurationError("spmmse needs the own-port covariance R1")
        self.coef_port1_ = wiener_filter(cov.R1, None, None, cov.sigma2)
        self.coef_port2_ = (None if cov.R2 is None
                            else wiener_filter(cov.R2, None, None, cov.sigma2))


ESTIMATORS = {
    cls.label: cls
    for cls in (DftEstimator, OccMmseEstimator, FullPriorMmseEstimator,
                PartialPriorMmseEstimator, SinglePortMmseEstimator)
}


def make_estimator(label: str, pilot_grid: PilotGrid, **kwargs) -> TwoPortEstimatorBase:
    if label not in ESTIMATORS:
        raise ConfigurationError(
            f"unknown estimator {label!r} (have: {', '.join(sorted(ESTIMATORS))})")
    return ESTIMATORS[label](pilot_grid, **kwargs)


# functional wrappers ------------------------------------------------------

def dft_estimate(obs: LsObservation, pg: PilotGrid) -> PortEstimates:
    """Delay-domain gating estimate of both ports."""
    return DftEstimator(pg).fit().estimate(obs)


def occ_mmse_estimate(obs: LsObservation, cov: CovarianceSet, pg: PilotGrid) -> PortEstimates:
    """Cover-code combining + Wiener filtering; `cov` is on the even pilot sub-grid."""
    if cov.size != pg.P // 2:
        raise ShapeError(
            f"expected covariances restricted to the even sub-grid "
            f"({pg.P // 2} x {pg.P // 2}), got {cov.size} x {cov.size}")
    return OccMmseEstimator(pg).fit(cov).estimate(obs)


def f_mmse(obs: LsObservation, cov: CovarianceSet, pg: PilotGrid) -> np.ndarray:
    """Full-prior MMSE estimate of the port-1 channel."""
    est = FullPriorMmseEstimator(pg).fit(cov)
    return est.estimate(obs).h1_hat


def p_mmse(obs: LsObservation, cov: CovarianceSet, pg: PilotGrid) -> np.ndarray:
    """Partial-prior MMSE estimate of the port-1 channel (uses R1 only)."""
    est = PartialPriorMmseEstimator(pg).fit(cov)
    return est.estimate(obs).h1_hat


def single_port_mmse(obs: LsObservation, R1: np.ndarray, sigma2: float) -> np.ndarray:
    """Interference-blind Wiener estimate of the port-1 channel."""
    W = wiener_filter(R1, None, None, sigma2)
    return W @ as_complex_vector(obs.hhat, R1.shape[0], "hhat")
