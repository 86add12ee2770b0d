"""Monte-Carlo link simulation: MSE and uncoded-BER sweeps over SNR.

Scenario: one OFDM slot per trial with a block-static channel, one pilot
symbol shared by the two ports, and `data_symbols_per_slot` QPSK data symbols
on the pilot subcarrier positions.  Per-receive-antenna pilot SNR is 1/sigma2
(unit pilot power, unit total channel power per port, sigma2 = 10^(-SNR/10)),
so turning the second port on doubles the received signal power; that is a
property of the scenario, not a normalization bug.

Determinism: every random draw comes from a named substream of the master
seed (domain, trial index, purpose), trials are processed in fixed-size
chunks, chunk partials are reduced in chunk order, and BLAS is pinned to one
thread while a sweep runs.  Two runs with the same ScenarioConfig therefore
produce identical CSV bytes regardless of the worker count; parallelism comes
from running chunks on a thread pool.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import analytic_mse_linear
from .channel import ChannelRealization, GridSpec, PowerDelayProfile, covariance
from .dmrs import PilotGrid
from .errors import ConfigurationError, ShapeError, SingularMatrixError
from .estimators import ESTIMATORS, CovarianceSet, make_estimator
from .numerics import crandn, substream

PERFECT = "perfect"  # pseudo-estimator: the receiver is handed the true channel
_KNOWN_LABELS = frozenset(ESTIMATORS) | {PERFECT}
_ANALYTIC_LABELS = frozenset({"fmmse", "pmmse", "spmmse"})

_CHUNK = 256  # trials per task; fixed so the reduction order never changes

# substream purpose codes, unique per (domain, trial)
_DOM_PILOT = 0
_DOM_MSE = 1
_DOM_BER = 2
_DOM_DUMP = 3
_PURPOSE_LINK = 10      # +2*port+rx
_PURPOSE_PILOT_NOISE = 20   # +rx
_PURPOSE_BITS = 30      # +stream
_PURPOSE_DATA_NOISE = 40    # +rx


def snr_to_sigma2(snr_db: float) -> float:
    return float(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a sweep needs; identical configs give identical reports."""

    grid: GridSpec
    pdp_port1: PowerDelayProfile
    pdp_port2: PowerDelayProfile | None  # None: port 2 silent (1x2 reception)
    estimators: tuple[str, ...]
    snr_db_list: tuple[float, ...]
    trials: int
    data_symbols_per_slot: int = 6
    master_seed: int = 0
    workers: int = 1
    occ_literal_noise_variance: bool = False

    def __post_init__(self):
        labels = tuple(dict.fromkeys(self.estimators))
        unknown = [e for e in labels if e not in _KNOWN_LABELS]
        if unknown:
            raise ConfigurationError(
                f"unknown estimators {unknown} (have: {', '.join(sorted(_KNOWN_LABELS))})")
        if not labels:
            raise ConfigurationError("at least one estimator is required")
        object.__setattr__(self, "estimators", labels)
        snrs = tuple(float(s) for s in self.snr_db_list)
        if not snrs:
            raise ConfigurationError("SNR list must be non-empty")
        object.__setattr__(self, "snr_db_list", snrs)
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.data_symbols_per_slot < 1:
            raise ConfigurationError("data_symbols_per_slot must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigurationError("master_seed must fit in 64 bits")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def port2_active(self) -> bool:
        return self.pdp_port2 is not None

    def pilot_grid(self) -> PilotGrid:
        return PilotGrid.random(self.grid, substream(self.master_seed, _DOM_PILOT))


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    estimator: str
    empirical_mse: float | None
    analytic_mse: float | None
    ber: float | None
    bits_counted: int
    trials: int
    seed: int
    error: str | None = None  # diagnostics only; not serialized

    def __post_init__(self):
        if self.empirical_mse is not None and not self.empirical_mse >= 0:
            raise ShapeError(f"empirical_mse must be >= 0, got {self.empirical_mse}")
        if self.ber is not None and not 0.0 <= self.ber <= 1.0:
            raise ShapeError(f"ber must be in [0, 1], got {self.ber}")


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.rows, key=lambda r: (r.snr_db, r.estimator)))
        object.__setattr__(self, "rows", ordered)

    def failures(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]


# modulation and equalization ----------------------------------------------

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def qpsk_mod(bits) -> np.ndarray:
    """Gray-map consecutive bit pairs (b0, b1) -> ((1-2b0) + j(1-2b1))/sqrt(2)."""
    b = np.asarray(bits)
    if b.ndim != 1 or b.size % 2 != 0:
        raise ShapeError("bits must be a flat vector of even length")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ShapeError("bits must be 0 or 1")
    pairs = b.reshape(-1, 2).astype(np.float64)
    return ((1.0 - 2.0 * pairs[:, 0]) + 1j * (1.0 - 2.0 * pairs[:, 1])) * _INV_SQRT2


def qpsk_demod(symbols) -> np.ndarray:
    """Hard per-axis decisions; a zero component resolves to bit 0."""
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    bits = np.empty((s.size, 2), dtype=np.uint8)
    bits[:, 0] = s.real < 0
    bits[:, 1] = s.imag < 0
    return bits.reshape(-1)


def equalize_2x2(H_est, y) -> np.ndarray:
    """Zero-forcing solve of y = H_est @ s for each trailing 2x2 system.

    Accepts stacked inputs: H_est (..., 2, 2) against y (..., 2) with
    broadcastable leading shapes.  Systems whose condition estimate exceeds
    1e8 fall back to the regularized solve (H^H H + 1e-8 I)^{-1} H^H y.
    """
    H = np.asarray(H_est, dtype=np.complex128)
    Y = np.asarray(y, dtype=np.complex128)
    if H.shape[-2:] != (2, 2):
        raise ShapeError(f"H_est must have trailing shape (2, 2), got {H.shape}")
    if Y.ndim < 1 or Y.shape[-1] != 2:
        raise ShapeError(f"y must have trailing dimension 2, got {Y.shape}")
    a, b = H[..., 0, 0], H[..., 0, 1]
    c, d = H[..., 1, 0], H[..., 1, 1]
    y0, y1 = Y[..., 0], Y[..., 1]
    det = a * d - b * c
    fro2 = (np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2)
    # |det| = s0*s1 and fro2 = s0^2 + s1^2, so fro2/|det| bounds the condition
    # number from below and matches it up to a factor of 2 when ill-conditioned
    ok = np.abs(det) * 1e8 > fro2
    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = (d * y0 - b * y1) / det
        s1 = (a * y1 - c * y0) / det
    if not np.all(ok):
        g00 = np.abs(a) ** 2 + np.abs(c) ** 2 + 1e-8
        g11 = np.abs(b) ** 2 + np.abs(d) ** 2 + 1e-8
        g01 = a.conj() * b + c.conj() * d
        r0 = a.conj() * y0 + c.conj() * y1
        r1 = b.conj() * y0 + d.conj() * y1
        detg = g00 * g11 - np.abs(g01) ** 2  # real, > 0 by construction
        f0 = (g11 * r0 - g01 * r1) / detg
        f1 = (g00 * r1 - g01.conj() * r0) / detg
        s0 = np.where(ok, s0, f0)
        s1 = np.where(ok, s1, f1)
    return np.stack(np.broadcast_arrays(s0, s1), axis=-1)


def mrc_combine(g, y) -> np.ndarray:
    """Maximal-ratio combining of a 1x2 link: (g^H y) / ||g||^2 per subcarrier.

    `g` and `y` hold the two antennas along axis 0 and broadcast elsewhere.
    """
    num = g[0].conj() * y[0] + g[1].conj() * y[1]
    den = np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2
    return num / np.maximum(den, np.finfo(np.float64).tiny)


# sweep machinery -----------------------------------------------------------

def _fit_estimators(cfg: ScenarioConfig, pg: PilotGrid, R1, R2, sigma2: float):
    """Fit every requested estimator at one noise level.

    Returns (fitted, failed): labels that fit map to estimator objects
    (PERFECT maps to None), labels that cannot be configured map to an error
    string so the sweep can mark their rows failed instead of aborting.
    """
    fitted, failed = {}, {}
    cov = CovarianceSet(R1, R2, sigma2)
    for label in cfg.estimators:
        if label == PERFECT:
            fitted[label] = None
            continue
        kwargs = ({"literal_noise_variance": cfg.occ_literal_noise_variance}
                  if label == "occ" else {})
        try:
            fitted[label] = make_estimator(label, pg, **kwargs).fit(cov)
        except (ConfigurationError, ShapeError, SingularMatrixError) as exc:
            failed[label] = f"{type(exc).__name__}: {exc}"
    return fitted, failed


def _run_chunks(cfg: ScenarioConfig, worker: Callable[[int, int], dict]) -> dict:
    """Run worker(start, stop) over fixed chunks and reduce partials in order."""
    spans = [(s, min(s + _CHUNK, cfg.trials)) for s in range(0, cfg.trials, _CHUNK)]
    with threadpool_limits(limits=1):  # single-thread BLAS: bitwise-stable kernels
        if cfg.workers == 1:
            parts = [worker(a, b) for a, b in spans]
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                parts = list(pool.map(lambda span: worker(*span), spans))
    totals: dict = {}
    for part in parts:
        for key, value in part.items():
            totals[key] = totals.get(key, 0) + value
    return totals


def _draw_links(cfg: ScenarioConfig, domain: int, t: int) -> ChannelRealization:
    return ChannelRealization.draw(
        cfg.pdp_port1, cfg.pdp_port2,
        lambda tx, r: substream(cfg.master_seed, domain, t, _PURPOSE_LINK + 2 * tx + r))


def _pilot_signal(pg: PilotGrid, H1, H2):
    # mirror received_pilots() op-for-op so tests can rebuild trials exactly
    return pg.x * H1 + pg.x * pg.c * H2


def _failed_row(snr_db: float, label: str, cfg: ScenarioConfig, message: str) -> SweepRow:
    return SweepRow(snr_db=snr_db, estimator=label, empirical_mse=None,
                    analytic_mse=None, ber=None, bits_counted=0, trials=0,
                    seed=cfg.master_seed, error=message)


def run_mse_sweep(cfg: ScenarioConfig) -> SweepReport:
    """Estimation-error sweep: mean ||h - h_hat||^2 over trials and antennas.

    Emits one aggregate row per (SNR, estimator) plus `/port1` and `/port2`
    breakdown rows; analytic MSE is attached for the Wiener estimators
    (fmmse, pmmse, spmmse).  Estimators that cannot be configured for the
    scenario yield failed rows (empty metrics, trials=0) rather than aborting.
    """
    grid = cfg.grid
    pg = cfg.pilot_grid()
    R1 = covariance(cfg.pdp_port1, grid)
    R2 = covariance(cfg.pdp_port2, grid) if cfg.port2_active else None
    sigmas = [snr_to_sigma2(s) for s in cfg.snr_db_list]
    by_snr = [_fit_estimators(cfg, pg, R1, R2, s2) for s2 in sigmas]

    def worker(start: int, stop: int) -> dict:
        n = stop - start
        P = pg.P
        H1 = np.empty((n, 2, P), dtype=np.complex128)
        H2 = np.zeros((n, 2, P), dtype=np.complex128)
        ETA = np.empty((n, 2, P), dtype=np.complex128)
        for i, t in enumerate(range(start, stop)):
            links = _draw_links(cfg, _DOM_MSE, t)
            for r in range(2):
                H1[i, r] = links.response(0, r, grid)
                if cfg.port2_active:
                    H2[i, r] = links.response(1, r, grid)
                ETA[i, r] = crandn(P, substream(
                    cfg.master_seed, _DOM_MSE, t, _PURPOSE_PILOT_NOISE + r))
        SIG = _pilot_signal(pg, H1, H2)
        part: dict = {}
        for si, s2 in enumerate(sigmas):
            hhat = (SIG + np.sqrt(s2) * ETA) / pg.x
            flat = hhat.reshape(-1, P)
            for label, est in by_snr[si][0].items():
                if label == PERFECT:
                    e1 = e2 = 0.0
                else:
                    Z = est.transform(flat).reshape(n, 2, 2, P)
                    e1 = float(np.sum(np.abs(Z[:, :, 0] - H1) ** 2))
                    e2 = (float(np.sum(np.abs(Z[:, :, 1] - H2) ** 2))
                          if cfg.port2_active else 0.0)
                part[(si, label, 1)] = e1
                part[(si, label, 2)] = e2
        return part

    totals = _run_chunks(cfg, worker)

    rows = []
    n_obs = cfg.trials * 2  # trials x rx antennas per port
    for si, s2 in enumerate(sigmas):
        snr_db = cfg.snr_db_list[si]
        fitted, failed = by_snr[si]
        for label, message in failed.items():
            rows.append(_failed_row(snr_db, label, cfg, message))
        for label, est in fitted.items():
            a1 = a2 = None
            if label in _ANALYTIC_LABELS:
                a1 = analytic_mse_linear(est.coef_port1_, R1, R2, pg.c, s2)
                if cfg.port2_active and est.coef_port2_ is not None:
                    a2 = analytic_mse_linear(est.coef_port2_, R2, R1, pg.c.conj(), s2)
            m1 = totals[(si, label, 1)] / n_obs
            per_port = [(f"{label}/port1", m1, a1)]
            if cfg.port2_active:
                m2 = totals[(si, label, 2)] / n_obs
                per_port.append((f"{label}/port2", m2, a2))
            agg_m = sum(m for _, m, _ in per_port) / len(per_port)
            agg_a = (sum(a for _, _, a in per_port) / len(per_port)
                     if all(a is not None for _, _, a in per_port) else None)
            for name, m, a in [(label, agg_m, agg_a)] + per_port:
                rows.append(SweepRow(snr_db=snr_db, estimator=name,
                                     empirical_mse=m, analytic_mse=a, ber=None,
                                     bits_counted=0, trials=cfg.trials,
                                     seed=cfg.master_seed))
    return SweepReport(rows=tuple(rows))


def run_ber_sweep(cfg: ScenarioConfig) -> SweepReport:
    """End-to-end uncoded BER using estimated CSI for equalization.

    Two active ports: independent QPSK streams, per-subcarrier 2x2
    zero-forcing with the estimated matrix; per-stream rows `/stream1` and
    `/stream2` accompany the aggregate row.  Silent port 2: single stream,
    1x2 maximal-ratio combining with the port-1 estimate.  The label
    "perfect" equalizes with the true channel (genie CSI baseline).
    """
    grid = cfg.grid
    pg = cfg.pilot_grid()
    R1 = covariance(cfg.pdp_port1, grid)
    R2 = covariance(cfg.pdp_port2, grid) if cfg.port2_active else None
    sigmas = [snr_to_sigma2(s) for s in cfg.snr_db_list]
    by_snr = [_fit_estimators(cfg, pg, R1, R2, s2) for s2 in sigmas]
    nsym = cfg.data_symbols_per_slot
    n_streams = 2 if cfg.port2_active else 1

    def worker(start: int, stop: int) -> dict:
        P = pg.P
        part: dict = {}
        for t in range(start, stop):
            links = _draw_links(cfg, _DOM_BER, t)
            H1 = np.stack([links.response(0, r, grid) for r in range(2)])
            H2 = np.stack([links.response(1, r, grid) for r in range(2)])
            eta_p = np.stack([
                crandn(P, substream(cfg.master_seed, _DOM_BER, t, _PURPOSE_PILOT_NOISE + r))
                for r in range(2)])
            bits = [substream(cfg.master_seed, _DOM_BER, t, _PURPOSE_BITS + s)
                    .integers(0, 2, size=2 * nsym * P).astype(np.uint8)
                    for s in range(n_streams)]
            sym = [qpsk_mod(b).reshape(nsym, P) for b in bits]
            eta_d = np.stack([
                crandn(nsym * P, substream(
                    cfg.master_seed, _DOM_BER, t, _PURPOSE_DATA_NOISE + r)).reshape(nsym, P)
                for r in range(2)])
            SIGP = _pilot_signal(pg, H1, H2)
            if cfg.port2_active:
                SIGD = H1[:, None, :] * sym[0] + H2[:, None, :] * sym[1]
            else:
                SIGD = H1[:, None, :] * sym[0]
            for si, s2 in enumerate(sigmas):
                root = np.sqrt(s2)
                hhat = (SIGP + root * eta_p) / pg.x
                y = SIGD + root * eta_d  # (rx, nsym, P)
                for label, est in by_snr[si][0].items():
                    if label == PERFECT:
                        G1, G2 = H1, H2
                    else:
                        Z = est.transform(hhat)  # (rx, 2, P)
                        G1, G2 = Z[:, 0], Z[:, 1]
                    if cfg.port2_active:
                        Hm = np.empty((P, 2, 2), dtype=np.complex128)
                        Hm[:, 0, 0], Hm[:, 0, 1] = G1[0], G2[0]
                        Hm[:, 1, 0], Hm[:, 1, 1] = G1[1], G2[1]
                        Ym = np.stack([y[0], y[1]], axis=-1)  # (nsym, P, 2)
                        shat = equalize_2x2(Hm, Ym)
                        streams = [shat[..., 0], shat[..., 1]]
                    else:
                        streams = [mrc_combine(G1, y)]
                    for s, est_sym in enumerate(streams):
                        bhat = qpsk_demod(est_sym.reshape(-1))
                        nerr = int(np.count_nonzero(bhat != bits[s]))
                        key = (si, label, s)
                        part[key] = part.get(key, 0) + nerr
        return part

    totals = _run_chunks(cfg, worker)

    rows = []
    bits_per_stream = cfg.trials * nsym * pg.P * 2
    for si in range(len(sigmas)):
        snr_db = cfg.snr_db_list[si]
        fitted, failed = by_snr[si]
        for label, message in failed.items():
            rows.append(_failed_row(snr_db, label, cfg, message))
        for label in fitted:
            errs = [totals.get((si, label, s), 0) for s in range(n_streams)]
            named = [(label, sum(errs), n_streams * bits_per_stream)]
            if n_streams == 2:
                named += [(f"{label}/stream{s + 1}", errs[s], bits_per_stream)
                          for s in range(2)]
            for name, nerr, nbits in named:
                rows.append(SweepRow(snr_db=snr_db, estimator=name,
                                     empirical_mse=None, analytic_mse=None,
                                     ber=nerr / nbits, bits_counted=nbits,
                                     trials=cfg.trials, seed=cfg.master_seed))
    return SweepReport(rows=tuple(rows))


def channel_snapshot(cfg: ScenarioConfig):
    """One noisy pilot observation and its estimates, for plotting.

    Uses the first (typically only) SNR in the config and a dedicated random
    domain, so snapshots never perturb sweep reproducibility.  Returns
    (column_names, columns, failures): columns[0] is |h1| at antenna 0,
    followed by |h1_hat| per estimator that could be configured; failures
    maps skipped labels to their error strings.
    """
    grid = cfg.grid
    pg = cfg.pilot_grid()
    R1 = covariance(cfg.pdp_port1, grid)
    R2 = covariance(cfg.pdp_port2, grid) if cfg.port2_active else None
    s2 = snr_to_sigma2(cfg.snr_db_list[0])
    fitted, failed = _fit_estimators(cfg, pg, R1, R2, s2)
    links = _draw_links(cfg, _DOM_DUMP, 0)
    H1 = np.stack([links.response(0, r, grid) for r in range(2)])
    H2 = np.stack([links.response(1, r, grid) for r in range(2)])
    eta = np.stack([
        crandn(pg.P, substream(cfg.master_seed, _DOM_DUMP, 0, _PURPOSE_PILOT_NOISE + r))
        for r in range(2)])
    hhat = (_pilot_signal(pg, H1, H2) + np.sqrt(s2) * eta) / pg.x
    names, cols = ["true"], [np.abs(H1[0])]
    for label, est in fitted.items():
        est1 = H1[0] if label == PERFECT else est.transform(hhat[0])[0]
        names.append(label)
        cols.append(np.abs(est1))
    return names, np.column_stack(cols), failed


# report I/O ----------------------------------------------------------------

CSV_HEADER = ("snr_db", "estimator", "empirical_mse", "analytic_mse", "ber",
              "bits_counted", "trials", "seed")


def _fmt(value: float | None) -> str:
    return "" if value is None else format(float(value), ".9g")


def report_csv(report: SweepReport) -> str:
    """CSV text: floats at 9 significant digits, rows sorted by
    (snr_db, estimator), failed rows serialized with empty metric fields."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        writer.writerow([_fmt(r.snr_db), r.estimator,
                         _fmt(r.empirical_mse), _fmt(r.analytic_mse),
                         _fmt(r.ber), r.bits_counted, r.trials, r.seed])
    return buf.getvalue()


def write_report(report: SweepReport, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(report_csv(report))
    except OSError as exc:
        raise OSError(f"cannot write report to {path!r}: {exc}") from exc


def read_report(path) -> SweepReport:
    """Read back a CSV written by write_report (empty fields become None)."""

    def opt(s: str) -> float | None:
        return None if s == "" else float(s)

    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_HEADER:
                raise ConfigurationError(f"unexpected report header {header} in {path!r}")
            rows = tuple(
                SweepRow(snr_db=float(rec[0]), estimator=rec[1],
                         empirical_mse=opt(rec[2]), analytic_mse=opt(rec[3]),
                         ber=opt(rec[4]), bits_counted=int(rec[5]),
                         trials=int(rec[6]), seed=int(rec[7]))
                for rec in reader)
    except OSError as exc:
        raise OSError(f"cannot read report from {path!r}: {exc}") from exc
    return SweepReport(rows=rows)
