"""Two-port pilot model: shared subcarriers, ports split by a cyclic-shift ramp.

Both ports transmit the same unit-modulus sequence on the same P subcarriers;
port 2 additionally carries the per-subcarrier phasor c_p = exp(2j*pi*p*dcs/P).
With dcs = P/2 (the default) c_p = (-1)^p, i.e. the [1,1]/[1,-1] cover code
over adjacent pilots.  The odd subcarriers of the allocation stay empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import GridSpec
from .errors import ConfigurationError, InvalidPilotError, ShapeError
from .numerics import crandn
from .validation import as_complex_vector

_QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


def shift_phasor(P: int, delta_cs: int) -> np.ndarray:
    """Phase ramp c_p = exp(2j*pi*p*delta_cs/P), exact on the axis points."""
    k = (np.arange(P) * int(delta_cs)) % P
    c = np.exp(2j * np.pi * k / P)
    # pin values that must be exactly +-1 / +-j so orthogonality sums cancel
    c[k == 0] = 1.0
    c[2 * k == P] = -1.0
    c[4 * k == P] = 1.0j
    c[4 * k == 3 * P] = -1.0j
    return c


def gen_pilots(P: int, rng: np.random.Generator) -> np.ndarray:
    """Pseudo-random unit-modulus QPSK pilot sequence of length P (P even)."""
    if P < 2 or P % 2:
        raise ConfigurationError(f"pilot count must be even and >= 2, got {P}")
    return _QPSK_POINTS[rng.integers(0, 4, size=P)]


@dataclass(frozen=True)
class PilotGrid:
    """Pilot sequence and port-2 cyclic shift bound to a subcarrier grid."""

    grid: GridSpec
    x: np.ndarray               # (P,) unit-modulus pilots
    delta_cs: int | None = None  # defaults to P/2
    q: int = 0                  # OFDM-symbol index of the pilot symbol (bookkeeping)
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = as_complex_vector(self.x, self.grid.P, "pilot sequence")
        dev = np.max(np.abs(np.abs(x) - 1.0))
        if dev > 1e-9:
            raise InvalidPilotError(f"pilots must be unit-modulus (max deviation {dev:.3e})")
        dcs = self.grid.P // 2 if self.delta_cs is None else int(self.delta_cs)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "delta_cs", dcs)
        object.__setattr__(self, "c", shift_phasor(self.grid.P, dcs))

    @classmethod
    def random(cls, grid: GridSpec, rng: np.random.Generator,
               delta_cs: int | None = None, q: int = 0) -> "PilotGrid":
        return cls(grid=grid, x=gen_pilots(grid.P, rng), delta_cs=delta_cs, q=q)

    @property
    def P(self) -> int:
        return self.grid.P


@dataclass(frozen=True)
class LsObservation:
    """Pilot-divided observation for one rx antenna: hhat = h1 + c*h2 + noise."""

    hhat: np.ndarray
    sigma2: float


def received_pilots(h1, h2, pg: PilotGrid, sigma2: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Received pilot vector y_p = x_p*h1_p + x_p*c_p*h2_p + noise, CN(0, sigma2).

    Noise is drawn unit-variance then scaled, so a fixed stream yields the
    same underlying draw at every noise level (common random numbers).
    """
    P = pg.P
    h1 = as_complex_vector(h1, P, "h1")
    h2 = as_complex_vector(h2, P, "h2")
    if sigma2 < 0:
        raise ConfigurationError(f"noise variance must be >= 0, got {sigma2}")
    return pg.x * h1 + pg.x * pg.c * h2 + np.sqrt(sigma2) * crandn(P, rng)


def ls_decouple(y, pg: PilotGrid, sigma2: float = 0.0) -> LsObservation:
    """Divide out the known pilots; preserves the noise variance since |x|=1."""
    y = as_complex_vector(y, pg.P, "y")
    dev = np.max(np.abs(np.abs(pg.x) - 1.0))
    if dev > 1e-9:
        raise InvalidPilotError(f"pilots must be unit-modulus (max deviation {dev:.3e})")
    return LsObservation(hhat=y / pg.x, sigma2=float(sigma2))
