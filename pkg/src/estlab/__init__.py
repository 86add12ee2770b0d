"""estlab: link-level benchmarks for two-port pilot channel estimation.

A small OFDM simulation library built around one question: how well can a
receiver separate and estimate two channels whose pilots share the same
subcarriers, distinguished only by a cyclic-shift phase ramp?  It provides
the classical delay-domain (DFT) estimator, cover-code combining with Wiener
filtering, and full-/partial-prior linear MMSE estimators, plus closed-form
MSE analysis and deterministic Monte-Carlo MSE/BER sweeps.
"""

from .errors import (ConfigurationError, InvalidPilotError, ShapeError,
                     SingularMatrixError)
from .numerics import crandn, hermitian_solve, idft_matrix, substream
from .channel import (ChannelRealization, GridSpec, PowerDelayProfile,
                      covariance, equal_pdp, exp_pdp, freq_response,
                      sample_taps, tdl_pdp)
from .dmrs import (LsObservation, PilotGrid, gen_pilots, ls_decouple,
                   received_pilots, shift_phasor)
from .estimators import (ESTIMATORS, CovarianceSet, DftEstimator,
                         FullPriorMmseEstimator, OccMmseEstimator,
                         PartialPriorMmseEstimator, PortEstimates,
                         SinglePortMmseEstimator, dft_estimate, f_mmse,
                         make_estimator, occ_combine, occ_mmse_estimate,
                         p_mmse, single_port_mmse, wiener_filter)
from .analysis import (analytic_mse_f, analytic_mse_linear, analytic_mse_p,
                       build_phi, diag_magnitudes)
from .harness import (PERFECT, ScenarioConfig, SweepReport, SweepRow,
                      channel_snapshot, equalize_2x2, mrc_combine, qpsk_demod,
                      qpsk_mod, read_report, report_csv, run_ber_sweep,
                      run_mse_sweep, snr_to_sigma2, write_report)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "InvalidPilotError", "ShapeError", "SingularMatrixError",
    "crandn", "hermitian_solve", "idft_matrix", "substream",
    "ChannelRealization", "GridSpec", "PowerDelayProfile", "covariance",
    "equal_pdp", "exp_pdp", "freq_response", "sample_taps", "tdl_pdp",
    "LsObservation", "PilotGrid", "gen_pilots", "ls_decouple",
    "received_pilots", "shift_phasor",
    "ESTIMATORS", "CovarianceSet", "DftEstimator", "FullPriorMmseEstimator",
    "OccMmseEstimator", "PartialPriorMmseEstimator", "PortEstimates",
    "SinglePortMmseEstimator", "dft_estimate", "f_mmse", "make_estimator",
    "occ_combine", "occ_mmse_estimate", "p_mmse", "single_port_mmse",
    "wiener_filter",
    "analytic_mse_f", "analytic_mse_linear", "analytic_mse_p", "build_phi",
    "diag_magnitudes",
    "PERFECT", "ScenarioConfig", "SweepReport", "SweepRow", "channel_snapshot",
    "equalize_2x2", "mrc_combine", "qpsk_demod", "qpsk_mod", "read_report",
    "report_csv", "run_ber_sweep", "run_mse_sweep", "snr_to_sigma2",
    "write_report",
]
