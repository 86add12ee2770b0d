"""End-to-end acceptance checks at the benchmark configuration.

Each test prints one `acceptance N: PASS/FAIL` line with the measured
numbers (bypassing capture so the line always reaches the console), then
asserts.  Regression constants were frozen from the first verified run on
this code base; tolerances on Monte-Carlo numbers leave room for a few
bit-level decision flips under BLAS or platform drift while still catching
algorithmic changes.
"""

import time

import numpy as np
import pytest

from estlab import (CovarianceSet, GridSpec, LsObservation, PilotGrid,
                    ScenarioConfig, analytic_mse_f, analytic_mse_p, build_phi,
                    covariance, crandn, diag_magnitudes, dft_estimate,
                    equal_pdp, exp_pdp, f_mmse, freq_response, ls_decouple,
                    p_mmse, received_pilots, report_csv, run_ber_sweep,
                    run_mse_sweep, sample_taps, shift_phasor, substream,
                    tdl_pdp, wiener_filter)

GRID = GridSpec.with_even_pilots(M=2048, P=120)
FS = GRID.sample_rate
PDP1 = exp_pdp(-0.0005, 40)
PDP2 = exp_pdp(-0.05, 40)


def verdict(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"\nacceptance {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"acceptance criterion {num} failed: {detail}"


def rows_by(report):
    return {(r.snr_db, r.estimator): r for r in report.rows}


class TestCriterion1:
    def test_analytic_matches_empirical_mse(self, capsys):
        t0 = time.time()
        cfg = ScenarioConfig(grid=GRID, pdp_port1=PDP1, pdp_port2=PDP2,
                             estimators=("fmmse", "pmmse"),
                             snr_db_list=(0.0, 10.0, 20.0, 30.0), trials=10_000)
        rep = run_mse_sweep(cfg)
        elapsed = time.time() - t0
        worst = 0.0
        for r in rep.rows:
            if r.analytic_mse is not None:
                worst = max(worst, abs(r.empirical_mse - r.analytic_mse)
                            / r.analytic_mse)
        ok = worst < 0.03 and elapsed < 120.0
        verdict(capsys, 1, ok,
                f"fmmse/pmmse empirical vs closed-form MSE, 4 SNRs x 1e4 "
                f"trials: worst rel err {worst:.4f} (< 0.03), {elapsed:.0f}s "
                f"(< 120s)")


class TestCriterion2:
    def test_regressed_filter_matches_wiener(self, capsys):
        grid = GridSpec.with_even_pilots(M=16, P=8)
        pg = PilotGrid.random(grid, substream(200, 0))
        pdp1, pdp2 = exp_pdp(-0.4, 2), exp_pdp(-0.9, 2)
        s2 = 0.1
        want = wiener_filter(covariance(pdp1, grid), covariance(pdp2, grid),
                             pg.c, s2)

        n_total, chunk = 1_000_000, 100_000
        A = np.zeros((8, 8), dtype=np.complex128)  # sum h1 hhat^H
        B = np.zeros((8, 8), dtype=np.complex128)  # sum hhat hhat^H
        rng = substream(200, 1)
        V1 = np.exp(-2j * np.pi * np.outer(grid.pilot_indices, pdp1.delays) / grid.M)
        V2 = np.exp(-2j * np.pi * np.outer(grid.pilot_indices, pdp2.delays) / grid.M)
        a1, a2 = np.sqrt(pdp1.powers), np.sqrt(pdp2.powers)
        for _ in range(n_total // chunk):
            h1 = (crandn(chunk * 2, rng).reshape(chunk, 2) * a1) @ V1.T
            h2 = (crandn(chunk * 2, rng).reshape(chunk, 2) * a2) @ V2.T
            hhat = (h1 + pg.c * h2
                    + np.sqrt(s2) * crandn(chunk * 8, rng).reshape(chunk, 8))
            A += h1.T @ hhat.conj()
            B += hhat.T @ hhat.conj()
        W_emp = np.linalg.solve(B.T, A.T).T
        err = float(np.max(np.abs(W_emp - want)))
        verdict(capsys, 2, err < 0.02,
                f"least-squares filter regressed from 1e6 samples vs Wiener "
                f"matrix: entrywise max err {err:.5f} (< 0.02)")


class TestCriterion3:
    def test_partial_prior_filter_gates_other_port(self, capsys):
        # thresholds tightened from the generic 0.1 to the observed margins
        # (suppression 1.24e-3, insensitivity 1.86e-4 on the first run)
        R1, R2 = covariance(PDP1, GRID), covariance(PDP2, GRID)
        c = shift_phasor(120, 60)
        s2 = 1e-3  # 30 dB
        dp = diag_magnitudes(build_phi(R1, R1, c, s2))
        df = diag_magnitudes(build_phi(R1, R2, c, s2))
        top = dp.max()
        suppression = dp[55:66].max() / top
        insensitivity = np.max(np.abs(dp - df)) / top
        ok = suppression < 0.01 and insensitivity < 0.002
        verdict(capsys, 3, ok,
                f"delay-domain diag: bins 55..65 at {suppression:.2e} of max "
                f"(< 0.01), pmmse-vs-fmmse diag diff {insensitivity:.2e} "
                f"(< 0.002)")


class TestCriterion4:
    def test_mse_ordering(self, capsys):
        cfg = ScenarioConfig(grid=GRID, pdp_port1=PDP1, pdp_port2=PDP2,
                             estimators=("dft", "fmmse", "pmmse"),
                             snr_db_list=(10.0, 20.0, 30.0, 40.0), trials=2000)
        rows = rows_by(run_mse_sweep(cfg))
        ordered = all(
            rows[(snr, "fmmse")].empirical_mse
            <= rows[(snr, "pmmse")].empirical_mse
            < rows[(snr, "dft")].empirical_mse
            for snr in (10.0, 20.0, 30.0, 40.0))

        rng = np.random.default_rng(123)
        c = shift_phasor(120, 60)
        violations = 0
        for _ in range(50):
            b1, b2 = -rng.uniform(0.0001, 0.5, size=2)
            L1, L2 = rng.integers(1, 59, size=2)
            R1 = covariance(exp_pdp(b1, int(L1)), GRID)
            R2 = covariance(exp_pdp(b2, int(L2)), GRID)
            s2 = float(10 ** -rng.uniform(0, 4))
            if not (analytic_mse_f(R1, R2, c, s2)
                    <= analytic_mse_p(R1, R2, c, s2) + 1e-12):
                violations += 1
        ok = ordered and violations == 0
        verdict(capsys, 4, ok,
                f"fmmse <= pmmse < dft at 10..40 dB: {ordered}; analytic "
                f"fmmse <= pmmse on 50 random PDP pairs: "
                f"{violations} violations")


class TestCriterion5:
    def test_occ_error_floor(self, capsys):
        cfg = ScenarioConfig(grid=GRID, pdp_port1=PDP1, pdp_port2=PDP2,
                             estimators=("occ", "fmmse"),
                             snr_db_list=(30.0, 40.0), trials=2000)
        rows = rows_by(run_mse_sweep(cfg))
        occ_ratio = (rows[(40.0, "occ")].empirical_mse
                     / rows[(30.0, "occ")].empirical_mse)
        f_ratio = (rows[(40.0, "fmmse")].empirical_mse
                   / rows[(30.0, "fmmse")].empirical_mse)

        flat = exp_pdp(-1.0, 1)
        cfg_flat = ScenarioConfig(grid=GRID, pdp_port1=flat, pdp_port2=flat,
                                  estimators=("occ",),
                                  snr_db_list=(20.0, 30.0), trials=4000)
        fr = rows_by(run_mse_sweep(cfg_flat))
        scale = (fr[(20.0, "occ")].empirical_mse
                 / fr[(30.0, "occ")].empirical_mse)
        ok = occ_ratio > 0.5 and f_ratio < 0.3 and abs(scale - 10.0) < 1.0
        verdict(capsys, 5, ok,
                f"occ MSE(40dB)/MSE(30dB) {occ_ratio:.3f} (> 0.5) vs fmmse "
                f"{f_ratio:.3f} (< 0.3); flat channel MSE scales with noise: "
                f"x{scale:.3f} per 10 dB (10 +- 1)")


class TestCriterion6:
    # frozen on the first verified run, seed 0, 350 trials (1,008,000 bits)
    FROZEN = {
        "exp": (0.0006319444444444444, 0.0006339285714285714),
        "tdl": (0.0005416666666666666, 0.0005416666666666666),
        "mixed": (0.0006835317460317461, 0.0010873015873015873),
    }

    def scenarios(self):
        return {
            "exp": (PDP1, PDP2),
            "tdl": (tdl_pdp("tdla", 100e-9, FS), tdl_pdp("tdlc", 300e-9, FS)),
            "mixed": (tdl_pdp("tdlc", 300e-9, FS), equal_pdp(9.6586e-6, FS)),
        }

    def test_partial_prior_tracks_full_prior_ber(self, capsys):
        gaps, drifts = {}, {}
        for name, (p1, p2) in self.scenarios().items():
            cfg = ScenarioConfig(grid=GRID, pdp_port1=p1, pdp_port2=p2,
                                 estimators=("fmmse", "pmmse"),
                                 snr_db_list=(30.0,), trials=350)
            rows = rows_by(run_ber_sweep(cfg))
            f = rows[(30.0, "fmmse")].ber
            p = rows[(30.0, "pmmse")].ber
            assert rows[(30.0, "fmmse")].bits_counted >= 10 ** 6
            gaps[name] = abs(p - f) / f
            ff, pf = self.FROZEN[name]
            drifts[name] = max(abs(f - ff) / ff, abs(p - pf) / pf)
        frozen_ok = all(d < 0.05 for d in drifts.values())
        bound_ok = all(g < 0.25 for g in gaps.values())
        detail = ("pmmse-vs-fmmse BER gap at 30 dB: "
                  + ", ".join(f"{n} {g:.1%}" for n, g in gaps.items())
                  + " (each < 25%); frozen-value drift "
                  + ", ".join(f"{n} {d:.1%}" for n, d in drifts.items()))
        # the mixed scenario structurally exceeds the bound in this harness:
        # a flat 9.6586 us interferer spans ~35 delay bins while the port-1
        # substitute prior covers ~9, leaving 0.24 of unsuppressed
        # interference power (vs 1.3e-4 for the full prior), so stream-1
        # decisions degrade ~59% relative at 30 dB even though the gap is
        # 0.3%/5.3% at 10/20 dB
        verdict(capsys, 6, frozen_ok and bound_ok, detail)


class TestCriterion7:
    FROZEN = 6.15079365079365e-07  # both schemes, seed 0, 35000 trials

    def test_partial_prior_tracks_single_port_optimum(self, capsys):
        cfg = ScenarioConfig(grid=GRID, pdp_port1=PDP1, pdp_port2=None,
                             estimators=("pmmse", "spmmse"),
                             snr_db_list=(30.0,), trials=35_000)
        rows = rows_by(run_ber_sweep(cfg))
        b_p = rows[(30.0, "pmmse")].ber
        b_s = rows[(30.0, "spmmse")].ber
        bits = rows[(30.0, "pmmse")].bits_counted
        gap = 0.0 if b_p == b_s else abs(b_p - b_s) / b_s
        drift = max(abs(b_p - self.FROZEN), abs(b_s - self.FROZEN)) / self.FROZEN
        ok = gap < 0.25 and drift < 0.15
        verdict(capsys, 7, ok,
                f"silent port 2: pmmse BER {b_p:.3e} vs single-port optimum "
                f"{b_s:.3e} over {bits} bits, gap {gap:.1%} (< 25%), frozen "
                f"drift {drift:.1%}")


class TestCriterion8:
    def test_exactness_suite(self, capsys):
        # full-band grid (M = 2P): every tap delay is an integer bin, so the
        # half-window gate separates the ports with no leakage
        grid = GridSpec.with_even_pilots(M=240, P=120)
        pg = PilotGrid.random(grid, substream(300, 0))
        pdp = exp_pdp(-0.01, 59)
        h1 = freq_response(sample_taps(pdp, substream(300, 1)), pdp, grid)
        obs = ls_decouple(
            received_pilots(h1, np.zeros(120), pg, 0.0, substream(300, 2)), pg)
        pe = dft_estimate(obs, pg)
        e_recover = float(np.sum(np.abs(pe.h1_hat - h1) ** 2))
        e_leak = float(np.sum(np.abs(pe.h2_hat) ** 2))
        dft_ok = e_recover <= 1e-10 and e_leak <= 1e-10

        R1 = covariance(PDP1, GRID)
        pgp = PilotGrid.random(GRID, substream(301, 0))
        o = LsObservation(hhat=(np.arange(120) * (0.01 - 0.003j) + 0.5),
                          sigma2=1e-3)
        bitwise = np.array_equal(p_mmse(o, CovarianceSet(R1, None, 1e-3), pgp),
                                 f_mmse(o, CovarianceSet(R1, R1, 1e-3), pgp))

        c = pgp.c
        unitary = (np.array_equal(np.abs(c), np.ones(120))
                   and np.array_equal(c * c.conj(), np.ones(120)))
        # complex multiply contracts to FMA here, so x.conj()*(c*x) keeps
        # ~1e-17 imaginary dust; the real-arithmetic form is exactly zero
        orth = (np.sum(c.real * np.abs(pgp.x) ** 2) == 0.0
                and np.sum(c) == 0.0
                and abs(np.vdot(pgp.x, c * pgp.x)) < 1e-15)
        ok = dft_ok and bitwise and unitary and orth
        verdict(capsys, 8, ok,
                f"full-band dft recovery err {e_recover:.1e} / leak "
                f"{e_leak:.1e} (<= 1e-10); pmmse == fmmse with R2 := R1 "
                f"bitwise: {bitwise}; shift unitarity and pilot "
                f"orthogonality exact: {unitary and orth}")


class TestCriterion9:
    def test_reports_are_byte_identical(self, capsys):
        kw = dict(grid=GRID, pdp_port1=PDP1, pdp_port2=PDP2,
                  estimators=("dft", "occ", "fmmse", "pmmse"),
                  snr_db_list=(10.0, 30.0))
        m_ref = report_csv(run_mse_sweep(ScenarioConfig(trials=300, **kw)))
        m_rerun = report_csv(run_mse_sweep(ScenarioConfig(trials=300, **kw)))
        m_pool = report_csv(run_mse_sweep(ScenarioConfig(trials=300, workers=4, **kw)))
        b_ref = report_csv(run_ber_sweep(ScenarioConfig(trials=60, **kw)))
        b_pool = report_csv(run_ber_sweep(ScenarioConfig(trials=60, workers=4, **kw)))
        ok = m_ref == m_rerun == m_pool and b_ref == b_pool
        verdict(capsys, 9, ok,
                f"CSV bytes identical across reruns and worker counts: "
                f"mse {m_ref == m_rerun == m_pool}, ber {b_ref == b_pool}")
