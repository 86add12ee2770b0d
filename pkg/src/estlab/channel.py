"""Multipath channel models on a pilot subcarrier grid.

Power delay profiles (exponential, 3GPP TDL-A/TDL-C, equal-power), Rayleigh
tap sampling, frequency responses at pilot subcarriers, and the analytic
auto-covariance of those responses.  All taps are sample-spaced at the
system rate; fading is block-static (no Doppler).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ShapeError
from .numerics import crandn
from .validation import hermitianize

# Normalized delay / power tables from 3GPP TR 38.901, Tables 7.7.2-1 (TDL-A)
# and 7.7.2-3 (TDL-C).  Delays are in units of the desired RMS delay spread,
# powers in dB.
_TDL_TABLES = {
    "tdl-a": (
        np.array([0.0000, 0.3819, 0.4025, 0.5868, 0.4610, 0.5375, 0.6708, 0.5750,
                  0.7618, 1.5375, 1.8978, 2.2242, 2.1718, 2.4942, 2.5119, 3.0582,
                  4.0810, 4.4579, 4.5695, 4.7966, 5.0066, 5.3043, 9.6586]),
        np.array([-13.4, 0.0, -2.2, -4.0, -6.0, -8.2, -9.9, -10.5, -7.5, -15.9,
                  -6.6, -16.7, -12.4, -15.2, -10.8, -11.3, -12.7, -16.2, -18.3,
                  -18.9, -16.6, -19.9, -29.7]),
    ),
    "tdl-c": (
        np.array([0.0000, 0.2099, 0.2219, 0.2329, 0.2176, 0.6366, 0.6448, 0.6560,
                  0.6584, 0.7935, 0.8213, 0.9336, 1.2285, 1.3083, 2.1704, 2.7105,
                  4.2589, 4.6003, 5.4902, 5.6077, 6.3065, 6.6374, 7.0427, 8.6523]),
        np.array([-4.4, -1.2, -3.5, -5.2, -2.5, 0.0, -2.2, -3.9, -7.4, -7.1,
                  -10.7, -11.1, -5.1, -6.8, -8.7, -13.2, -13.9, -13.9, -15.8,
                  -17.1, -16.0, -15.7, -21.6, -22.8]),
    ),
}


@dataclass(frozen=True)
class PowerDelayProfile:
    """Average tap power versus integer sample delay, normalized to unit power."""

    delays: np.ndarray  # int sample indices, strictly increasing, >= 0
    powers: np.ndarray  # positive, sum == 1
    label: str = "custom"

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=np.int64)
        powers = np.asarray(self.powers, dtype=np.float64)
        if delays.ndim != 1 or powers.shape != delays.shape or delays.size == 0:
            raise ShapeError("delays and powers must be equal-length non-empty 1-D arrays")
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ConfigurationError("delays must be non-negative and strictly increasing")
        if np.any(powers <= 0):
            raise ConfigurationError("tap powers must be strictly positive")
        if abs(powers.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"tap powers must sum to 1, got {powers.sum()!r}")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", powers)

    @property
    def n_taps(self) -> int:
        return self.delays.size

    def as_text(self) -> str:
        """Two-column (delay_samples, power) dump for inspection/plotting."""
        lines = [f"# {self.label}", "# delay_samples power"]
        lines += [f"{d} {p:.9g}" for d, p in zip(self.delays, self.powers)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GridSpec:
    """OFDM dimensioning plus the absolute subcarrier indices carrying pilots."""

    M: int                      # total subcarriers
    P: int                      # pilot count
    pilot_indices: np.ndarray   # (P,) absolute indices, strictly increasing
    sample_rate: float = 30.72e6
    cp_samples: int = 144       # kept for documentation; the simulation is frequency-domain

    def __post_init__(self):
        idx = np.asarray(self.pilot_indices, dtype=np.int64)
        if idx.shape != (self.P,):
            raise ShapeError(f"pilot_indices must have shape ({self.P},), got {idx.shape}")
        if np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.M:
            raise ConfigurationError("pilot_indices must be strictly increasing and < M")
        if 2 * self.P > self.M:
            raise ConfigurationError(f"need 2P <= M, got P={self.P}, M={self.M}")
        object.__setattr__(self, "pilot_indices", idx)

    @classmethod
    def with_even_pilots(cls, M: int, P: int, first_subcarrier: int = 0,
                         sample_rate: float = 30.72e6, cp_samples: int = 144) -> "GridSpec":
        """Pilots on every second subcarrier of the allocation: k_p = k0 + 2p."""
        return cls(M=M, P=P, pilot_indices=first_subcarrier + 2 * np.arange(P),
                   sample_rate=sample_rate, cp_samples=cp_samples)

    @classmethod
    def default(cls) -> "GridSpec":
        """120 pilots on even subcarriers of a 2048-subcarrier, 30.72 MHz grid."""
        return cls.with_even_pilots(M=2048, P=120)


def exp_pdp(beta: float, L: int) -> PowerDelayProfile:
    """Exponential profile: tap l in 0..L-1 has pre-normalization power exp(beta*l)."""
    if L < 1:
        raise ShapeError(f"tap count must be >= 1, got {L}")
    if beta > 0:
        raise ConfigurationError(f"decay exponent must be <= 0, got {beta}")
    powers = np.exp(beta * np.arange(L, dtype=np.float64))
    return PowerDelayProfile(np.arange(L), powers / powers.sum(),
                             label=f"exp(beta={beta:g},L={L})")


def tdl_pdp(profile: str, delay_spread: float, sample_rate: float) -> PowerDelayProfile:
    """Sample-spaced PDP from a 3GPP TDL table scaled to `delay_spread` seconds.

    Taps that round onto the same sample are merged by power addition.
    """
    key = profile.strip().lower().replace("_", "-")
    if key.startswith("tdl"):
        key = key[3:].lstrip("-")
    key = "tdl-" + key
    if key not in _TDL_TABLES:
        raise ConfigurationError(f"unknown TDL profile {profile!r} (have: tdl-a, tdl-c)")
    if delay_spread <= 0:
        raise ConfigurationError(f"delay spread must be > 0, got {delay_spread}")
    norm_delays, powers_db = _TDL_TABLES[key]
    samples = np.rint(norm_delays * delay_spread * sample_rate).astype(np.int64)
    powers = 10.0 ** (powers_db / 10.0)
    delays = np.unique(samples)
    merged = np.zeros(delays.size)
    for d, p in zip(samples, powers):
        merged[np.searchsorted(delays, d)] += p
    return PowerDelayProfile(delays, merged / merged.sum(),
                             label=f"{key}(ds={delay_spread * 1e9:g}ns)")


def equal_pdp(max_delay: float, sample_rate: float) -> PowerDelayProfile:
    """Equal-power taps on every sample from 0 to round(max_delay*sample_rate)."""
    if max_delay <= 0:
        raise ConfigurationError(f"max delay must be > 0, got {max_delay}")
    last = int(np.rint(max_delay * sample_rate))
    n = last + 1
    return PowerDelayProfile(np.arange(n), np.full(n, 1.0 / n),
                             label=f"equal(max={max_delay * 1e6:g}us)")


def sample_taps(pdp: PowerDelayProfile, rng: np.random.Generator) -> np.ndarray:
    """One Rayleigh realization: tap l ~ CN(0, power_l), independent across taps."""
    return np.sqrt(pdp.powers) * crandn(pdp.n_taps, rng)


def freq_response(taps: np.ndarray, pdp: PowerDelayProfile, grid: GridSpec) -> np.ndarray:
    """Channel frequency response at the pilot subcarriers.

    h_p = sum_l g_l * exp(-2j*pi * k_p * d_l / M) with k_p the absolute pilot
    index and d_l the tap delay in samples.
    """
    taps = np.asarray(taps, dtype=np.complex128)
    if taps.shape != (pdp.n_taps,):
        raise ShapeError(f"taps must have shape ({pdp.n_taps},), got {taps.shape}")
    if pdp.delays[-1] >= grid.M:
        raise ConfigurationError(
            f"max tap delay {pdp.delays[-1]} is unresolvable on an M={grid.M} grid")
    phase = (np.outer(grid.pilot_indices, pdp.delays)) % grid.M  # ints, exact
    return np.exp(-2j * np.pi * phase / grid.M) @ taps


def covariance(pdp: PowerDelayProfile, grid: GridSpec) -> np.ndarray:
    """Analytic P x P auto-covariance of freq_response draws.

    R[m,n] = sum_l power_l * exp(-2j*pi * (k_m - k_n) * d_l / M); Hermitian
    with unit diagonal, Toeplitz for uniformly spaced pilots.
    """
    if pdp.delays[-1] >= grid.M:
        raise ConfigurationError(
            f"max tap delay {pdp.delays[-1]} is unresolvable on an M={grid.M} grid")
    phase = (np.outer(grid.pilot_indices, pdp.delays)) % grid.M
    E = np.exp(-2j * np.pi * phase / grid.M)  # (P, L)
    return hermitianize((E * pdp.powers) @ E.conj().T)


@dataclass(frozen=True)
class ChannelRealization:
    """Tap gains for every (tx port, rx antenna) link of a 2x2 system.

    gains[t][r] holds the complex tap vector of the link from port t+1 to
    antenna r; port 2 entries are None when that port is silent.
    """

    pdps: tuple            # (pdp_port1, pdp_port2 or None)
    gains: tuple = field(repr=False)  # gains[t][r] -> ndarray or None

    @classmethod
    def draw(cls, pdp1: PowerDelayProfile, pdp2: PowerDelayProfile | None,
             link_rng) -> "ChannelRealization":
        """Draw all links; `link_rng(t, r)` must return an independent Generator."""
        gains = tuple(
            tuple(sample_taps(pdp, link_rng(t, r)) for r in range(2)) if pdp is not None
            else (None, None)
            for t, pdp in enumerate((pdp1, pdp2))
        )
        return cls(pdps=(pdp1, pdp2), gains=gains)

    def response(self, t: int, r: int, grid: GridSpec) -> np.ndarray:
        """Frequency response of link (port t+1 -> antenna r); zeros if silent."""
        if self.gains[t][r] is None:
            return np.zeros(grid.P, dtype=np.complex128)
        return freq_response(self.gains[t][r], self.pdps[t], grid)
