"""Detuning sweeps, window metrics, dephasing scan, determinism."""

from __future__ import annotations

import io
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from nit_sim import (
    ConfigError,
    DegenerateSteadyStateError,
    DomainError,
    SingularityError,
    SweepConfig,
    SystemParams,
    analyze_windows,
    compare,
    dephasing_scan,
    detuning_grid,
    steady_state,
    sweep,
    to_csv_text,
)
from nit_sim.quantum import HilbertSpec
from nit_sim.spectra import CSV_HEADER, MIN_WINDOW_POINTS, worker_count

from conftest import (
    decoupled_system,
    matched_system,
    unbalanced_system,
    weak_drive_system,
)


def matched_sweep(n_points=1501, **kwargs) -> SweepConfig:
    return SweepConfig(matched_system(), -1.5, 1.5, n_points, **kwargs)


class TestDetuningGrid:
    def test_symmetric_request_mirrors_bitwise(self):
        grid = detuning_grid(-1.5, 1.5, 1501)
        assert grid.shape == (1501,)
        assert np.array_equal(grid, -grid[::-1])
        assert grid[750] == 0.0
        assert grid[0] == -1.5 and grid[-1] == 1.5

    def test_general_request_is_plain_linspace(self):
        assert np.array_equal(detuning_grid(-1.0, 2.0, 7), np.linspace(-1.0, 2.0, 7))


class TestWorkerCount:
    def test_defaults_to_one(self, monkeypatch):
        monkeypatch.delenv("NIT_SIM_THREADS", raising=False)
        assert worker_count() == 1

    def test_reads_environment(self, monkeypatch):
        monkeypatch.setenv("NIT_SIM_THREADS", "4")
        assert worker_count() == 4

    @pytest.mark.parametrize("bad", ["zero?", "0", "-2"])
    def test_rejects_bad_values(self, monkeypatch, bad):
        monkeypatch.setenv("NIT_SIM_THREADS", bad)
        with pytest.raises(ConfigError):
            worker_count()


class TestSweep:
    def test_config_validation(self):
        with pytest.raises(DomainError):
            SweepConfig(matched_system(), 1.0, -1.0, 11)
        with pytest.raises(DomainError):
            SweepConfig(matched_system(), -1.0, 1.0, 1)
        with pytest.raises(DomainError, match="backend"):
            SweepConfig(matched_system(), -1.0, 1.0, 11, backend="exact")

    def test_arrays_are_frozen(self):
        spectrum = sweep(matched_sweep(61))
        with pytest.raises(ValueError):
            spectrum.absorption[0] = 1.0

    def test_backends_agree_on_a_coarse_grid(self):
        cfg_a = matched_sweep(51)
        cfg_m = matched_sweep(51, backend="meanfield")
        report = compare(sweep(cfg_a), sweep(cfg_m))
        assert report.max_abs < 1e-6

    def test_quantum_backend_tracks_the_closed_form(self):
        base = weak_drive_system()
        cfg_q = SweepConfig(
            base, -0.6, 0.6, 3, backend="quantum", quantum_spec=HilbertSpec(4, 4)
        )
        cfg_a = SweepConfig(base, -0.6, 0.6, 3)
        s_q = sweep(cfg_q)
        report = compare(sweep(cfg_a), s_q)
        assert report.max_rel < 0.02
        assert s_q.backend == "quantum"
        assert s_q.quantum_spec == HilbertSpec(4, 4)

    def test_normalizes_the_base_parameters(self):
        scaled = matched_system(
            kappa_a=2.0, lam=1.0, g=1.0, epsilon=0.06,
            kappa_b=2e-3, gamma=2e-3, gamma_phi=2e-3,
        )
        s1 = sweep(SweepConfig(scaled, -1.5, 1.5, 61))
        s2 = sweep(matched_sweep(61))
        assert compare(s1, s2).max_abs < 1e-15

    def test_single_singular_point_aborts(self):
        bare = SystemParams(
            delta_p=0.0, lam=0.0, g=0.0, epsilon=0.03,
            kappa_a=1.0, kappa_b=0.0, gamma=0.0, gamma_phi=0.0,
        )
        with pytest.raises(SingularityError) as err:
            sweep(SweepConfig(bare, -1.0, 1.0, 3))
        assert err.value.delta_p == 0.0

    def test_quantum_failure_names_the_detuning(self):
        undamped = SystemParams(
            delta_p=0.0, lam=0.0, g=0.0, epsilon=0.0,
            kappa_a=1.0, kappa_b=0.0, gamma=0.0, gamma_phi=0.0,
        )
        cfg = SweepConfig(
            undamped, -1.0, 1.0, 3, backend="quantum", quantum_spec=HilbertSpec(2, 2)
        )
        with pytest.raises(DegenerateSteadyStateError, match="at delta_p="):
            sweep(cfg)


class TestCsv:
    def test_round_trips_every_bit(self):
        spectrum = sweep(matched_sweep(61))
        text = to_csv_text(spectrum)
        assert text.startswith(CSV_HEADER + "\n")
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 0], spectrum.detunings)
        assert np.array_equal(data[:, 1], spectrum.a_re)
        assert np.array_equal(data[:, 2], spectrum.a_im)
        assert np.array_equal(data[:, 3], spectrum.absorption)

    def test_repeated_sweeps_are_byte_identical(self):
        cfg = matched_sweep(201, backend="meanfield")
        assert to_csv_text(sweep(cfg)) == to_csv_text(sweep(cfg))


class TestWindows:
    def test_decoupled_lorentzian_metrics(self):
        spectrum = sweep(SweepConfig(decoupled_system(), -3.0, 3.0, 601))
        report = analyze_windows(spectrum)
        assert len(report.peaks) == 1 and not report.dips
        peak = report.peaks[0]
        assert peak.detuning == 0.0
        assert peak.height == pytest.approx(0.06, rel=1e-12)
        # half-width crossings sit 2 grid steps (0.02) from the exact kappa_a
        assert abs(peak.fwhm - 1.0) <= 0.02

    def test_matched_coupling_window_structure(self):
        report = analyze_windows(sweep(matched_sweep()))
        assert len(report.peaks) == 3
        assert len(report.dips) == 2
        central = report.peaks[1]
        assert central.detuning == 0.0
        assert central.height == pytest.approx(0.05982053892161838, rel=1e-12)
        assert central.fwhm == pytest.approx(0.4460944657675985, rel=1e-12)
        for dip in report.dips:
            assert dip.depth > 0.9

    def test_dips_sit_at_the_numerator_roots(self):
        base = matched_system()
        grid_step = 3.0 / 1500
        report = analyze_windows(sweep(matched_sweep()))

        def numerator_magnitude(d):
            db = complex(d, -0.5 * base.kappa_b)
            dq = complex(d, -0.5 * base.kappa_q)
            return abs(db * dq - base.g**2)

        root = minimize_scalar(
            numerator_magnitude, bounds=(0.3, 0.7), method="bounded",
            options={"xatol": 1e-12},
        ).x
        assert root == pytest.approx(0.5, abs=1e-5)
        for dip in report.dips:
            assert abs(abs(dip.detuning) - root) <= 2 * grid_step
            assert abs(abs(dip.detuning) - 0.5) <= 0.02

    def test_mirror_symmetry_is_exact(self):
        spectrum = sweep(matched_sweep())
        assert np.array_equal(spectrum.absorption, spectrum.absorption[::-1])
        report = analyze_windows(spectrum)
        assert report.asymmetry == 0.0
        assert report.peaks[0].detuning == pytest.approx(
            -report.peaks[2].detuning, rel=1e-12
        )

    def test_detuned_qubit_breaks_the_symmetry(self):
        spectrum = sweep(
            SweepConfig(matched_system(delta_q_offset=0.3), -1.5, 1.5, 1501)
        )
        assert analyze_windows(spectrum).asymmetry > 0.05

    def test_grid_refinement_pins_the_extrema(self):
        coarse = analyze_windows(sweep(matched_sweep(801)))
        fine = analyze_windows(sweep(matched_sweep(1601)))
        step = 3.0 / 800
        for p_c, p_f in zip(coarse.peaks, fine.peaks):
            assert abs(p_c.detuning - p_f.detuning) < step
        for d_c, d_f in zip(coarse.dips, fine.dips):
            assert abs(d_c.detuning - d_f.detuning) < step

    def test_window_contrast_fades_with_damping(self):
        contrasts = []
        for rate in (1e-3, 0.1, 0.5):
            base = matched_system(kappa_b=rate, gamma=rate, gamma_phi=rate)
            spectrum = sweep(SweepConfig(base, -1.5, 1.5, 601))
            i_dip = int(np.argmin(np.abs(spectrum.detunings - 0.5)))
            contrasts.append(
                1.0 - spectrum.absorption[i_dip] / spectrum.absorption.max()
            )
        assert contrasts[0] > contrasts[1] > contrasts[2]

    def test_needs_enough_points(self):
        with pytest.raises(DomainError, match=str(MIN_WINDOW_POINTS)):
            analyze_windows(sweep(matched_sweep(50)))

    def test_flat_response_warns(self):
        spectrum = sweep(SweepConfig(matched_system(epsilon=0.0), -1.5, 1.5, 61))
        with pytest.warns(UserWarning, match="degenerate"):
            report = analyze_windows(spectrum)
        assert not report.peaks
        assert math.isnan(report.asymmetry)

    def test_report_serializes(self):
        d = analyze_windows(sweep(matched_sweep(201))).to_dict()
        assert set(d) == {"peaks", "dips", "asymmetry"}
        assert all(set(p) == {"detuning", "height", "fwhm"} for p in d["peaks"])


class TestCompare:
    def test_self_comparison_is_zero(self):
        s = sweep(matched_sweep(61))
        report = compare(s, s)
        assert report.max_abs == 0.0 and report.mean_abs == 0.0
        assert report.max_rel == 0.0

    def test_grid_mismatch_is_rejected(self):
        s1 = sweep(matched_sweep(61))
        s2 = sweep(SweepConfig(matched_system(), -1.5, 1.5, 62))
        with pytest.raises(DomainError, match="grid"):
            compare(s1, s2)


class TestDephasingScan:
    def test_frozen_reference_heights(self):
        heights = dephasing_scan(matched_system(), [1e-3, 1e-1, 1.0])
        assert heights[0] == pytest.approx(0.05982053892161838, rel=1e-12)
        assert heights[1] == pytest.approx(0.04996004831830809, rel=1e-12)
        assert heights[2] == pytest.approx(0.020019993333335553, rel=1e-12)
        assert heights[0] > heights[1] > heights[2]

    def test_single_value_matches_direct_evaluation(self):
        height = dephasing_scan(matched_system(), [0.7])[0]
        direct = steady_state(matched_system(gamma_phi=0.7)).absorption
        assert height == pytest.approx(direct, rel=1e-14)

    def test_strong_dephasing_limit(self):
        s = matched_system()
        limit = abs(s.epsilon) * (s.kappa_b / 2) / (s.lam**2 + s.kappa_a * s.kappa_b / 4)
        assert dephasing_scan(s, [1e7])[0] == pytest.approx(limit, rel=1e-3)

    def test_warns_off_the_matched_regime(self):
        with pytest.warns(UserWarning, match="lam == g"):
            dephasing_scan(unbalanced_system(), [1e-3])
