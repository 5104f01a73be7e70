#!/usr/bin/env python3
"""
Monte-Carlo harness, rate fits and small-scale study runs.
"""

import math
import os
import sys

import numpy as np
import pandas as pd
import pytest

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from tfwave_core.errors import (
    DegenerateLadderError,
    GridMismatchError,
    ModelValidationError,
    ReferenceResolutionError,
)
from tfwave_core.experiments import (
    RESULT_COLUMNS,
    ErrorReport,
    LevelResult,
    crn_pilot,
    fem_error_study,
    fit_rate,
    holder_probe,
    modeling_error_study,
    ms_error,
    regularity_probe,
    run_monte_carlo,
    stability_probe,
    total_error_study,
)
from tfwave_core.model import ModelSpec, NonlinearitySpec
from tfwave_core.solver import ModalTrajectory

SEED = 20240611


class TestFitRate:
    def test_exact_square_law(self):
        x = 2.0 ** -np.arange(1, 7)
        fit = fit_rate(x, x ** 2)
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.ci[0] == pytest.approx(2.0, abs=1e-8)
        assert fit.ci[1] == pytest.approx(2.0, abs=1e-8)

    def test_intercept(self):
        x = np.array([0.5, 0.25, 0.125, 0.0625])
        fit = fit_rate(x, 3.0 * x ** 1.5)
        assert fit.slope == pytest.approx(1.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)

    def test_noisy_band_contains_truth(self):
        x = 2.0 ** -np.arange(1, 7)
        noise = 0.05 * np.array([1, -1, 1, -1, 1, -1])
        fit = fit_rate(x, x ** 2 * np.exp(noise))
        assert fit.ci[0] < fit.slope < fit.ci[1]
        assert fit.ci[0] < 2.0 < fit.ci[1]

    @pytest.mark.parametrize("levels, values", [
        ([0.5, 0.25], [1.0, 0.5]),
        ([0.5, 0.25, 0.125], [1.0, 0.0, 0.5]),
        ([0.5, -0.25, 0.125], [1.0, 0.5, 0.25]),
        ([0.5, 0.25, 0.125], [1.0, 0.5]),
    ])
    def test_degenerate_input(self, levels, values):
        with pytest.raises(DegenerateLadderError):
            fit_rate(levels, values)


def constant_trajectory(model, values, n_steps=4):
    coeffs = np.tile(np.asarray(values, dtype=float), (n_steps + 1, 1))
    return ModalTrajectory(1.0 / n_steps, n_steps, coeffs, model)


class TestMeanSquareError:
    def test_identical_trajectories(self):
        model = ModelSpec.benchmark(3)
        traj = constant_trajectory(model, [1.0, 2.0, 3.0])
        mean, stderr = ms_error([(traj, traj), (traj, traj)], 0.0, 1.0)
        assert mean == 0.0 and stderr == 0.0

    def test_first_mode_perturbation(self):
        model = ModelSpec.benchmark(3)
        eps, s = 1e-3, 0.5
        ref = constant_trajectory(model, [0.0, 0.0, 0.0])
        cand = constant_trajectory(model, [eps, 0.0, 0.0])
        mean, _ = ms_error([(ref, cand)], s, 1.0)
        assert mean == pytest.approx(eps ** 2 * math.pi ** (2 * s), rel=1e-12)

    def test_different_truncations_are_padded(self):
        ref = constant_trajectory(ModelSpec.benchmark(4), [0.0, 0.0, 0.0, 1.0])
        cand = constant_trajectory(ModelSpec.benchmark(2), [0.0, 0.0])
        mean, _ = ms_error([(ref, cand)], 0.0, 0.5)
        assert mean == pytest.approx(1.0)

    def test_time_off_grid(self):
        traj = constant_trajectory(ModelSpec.benchmark(2), [1.0, 0.0])
        with pytest.raises(GridMismatchError):
            ms_error([(traj, traj)], 0.0, 0.3)


class TestErrorReport:
    def test_levels_strictly_decreasing(self):
        ladder = [LevelResult(0.25, 1.0, 0.1, 10), LevelResult(0.25, 0.5, 0.1, 10)]
        with pytest.raises(ModelValidationError):
            ErrorReport("modeling-error", ladder)

    def test_nonnegative_mse(self):
        with pytest.raises(ModelValidationError):
            ErrorReport("modeling-error", [LevelResult(0.5, -1.0, 0.1, 10)])

    def test_frame_layout(self):
        ladder = [LevelResult(0.5, 1.0, 0.1, 10), LevelResult(0.25, 0.25, 0.02, 10)]
        frame = ErrorReport("holder", ladder, fitted_rate=2.0, rate_ci=(1.9, 2.1)).to_frame()
        assert list(frame.columns) == RESULT_COLUMNS
        assert list(frame["row"]) == ["level", "level", "summary"]
        assert frame.iloc[-1]["fitted_rate"] == 2.0
        assert pd.isna(frame.iloc[0]["fitted_rate"])


def indexed_batch(indices):
    out = np.array([[np.random.default_rng([SEED, i]).normal(), float(i)] for i in indices])
    return out, np.zeros(2)


class TestMonteCarlo:
    def test_thread_count_does_not_change_values(self):
        one = run_monte_carlo(37, 2, indexed_batch, threads=1, batch_size=4, round_batches=2)
        four = run_monte_carlo(37, 2, indexed_batch, threads=4, batch_size=4, round_batches=2)
        assert np.array_equal(one.values, four.values)
        assert np.array_equal(one.values[:, 1], np.arange(37))

    def test_early_stop_at_round_boundary(self):
        def nearly_constant(indices):
            return np.array([[1.0 + 0.01 * (i % 2)] for i in indices]), np.zeros(1)

        result = run_monte_carlo(100, 1, nearly_constant, batch_size=4, round_batches=2, stop_rel=0.05)
        assert result.n_samples == 8

    def test_no_stop_without_target(self):
        result = run_monte_carlo(20, 2, indexed_batch, batch_size=4, round_batches=2)
        assert result.n_samples == 20
        assert not np.any(np.isnan(result.values))


class TestStabilityProbe:
    def test_default_grid_passes(self):
        result = stability_probe(1.8)
        assert result.passed
        assert len(result.constants_T) == 9

    def test_frame(self):
        frame = stability_probe(1.8, lam_betas=(1.0,), nus=(0.0, 1.0)).to_frame()
        assert list(frame.columns) == ["study", "lam_beta", "nu", "C_T", "C_S", "envelope_ok"]
        assert len(frame) == 2

    def test_tight_bound_fails(self):
        assert not stability_probe(1.8, lam_betas=(1.0,), nus=(0.0,), bound=0.5).passed


class TestModelingStudy:
    def test_small_run(self):
        model = ModelSpec.benchmark(4)
        report = modeling_error_study(model, [2 ** -2, 2 ** -3, 2 ** -4], 8, SEED, ref_tau=2 ** -6, batch_size=4)
        assert report.study == "modeling-error"
        assert list(report.levels) == [0.25, 0.125, 0.0625]
        assert np.all(report.mses > 0)
        assert report.mses[0] > report.mses[-1]
        assert math.isfinite(report.fitted_rate)
        assert report.extras["reference_tau"] == 2 ** -6

    def test_threads_do_not_change_report(self):
        model = ModelSpec.benchmark(4)
        kwargs = dict(ref_tau=2 ** -5, batch_size=2)
        one = modeling_error_study(model, [2 ** -2, 2 ** -3, 2 ** -4], 6, SEED, threads=1, **kwargs)
        three = modeling_error_study(model, [2 ** -2, 2 ** -3, 2 ** -4], 6, SEED, threads=3, **kwargs)
        pd.testing.assert_frame_equal(one.to_frame(), three.to_frame())

    def test_ladder_must_be_dyadic(self):
        with pytest.raises(DegenerateLadderError):
            modeling_error_study(ModelSpec.benchmark(2), [0.3, 0.15, 0.075], 2, SEED, ref_tau=2 ** -6)

    def test_reference_must_be_finer(self):
        with pytest.raises(DegenerateLadderError):
            modeling_error_study(ModelSpec.benchmark(2), [0.5, 0.25, 0.125], 2, SEED, ref_tau=0.125)

    @pytest.mark.slow
    def test_rate_on_benchmark(self):
        model = ModelSpec.benchmark(16)
        report = modeling_error_study(
            model, [2 ** -3, 2 ** -4, 2 ** -5, 2 ** -6], 400, SEED, ref_tau=2 ** -9, threads=4,
        )
        assert 1.7 <= report.fitted_rate <= 2.3


class TestFemStudy:
    def test_reference_resolution(self):
        with pytest.raises(ReferenceResolutionError):
            fem_error_study(ModelSpec.benchmark(4), [0.5, 0.25, 0.125], 0.25, 2, SEED)

    def test_small_run(self):
        model = ModelSpec.benchmark(16)
        report = fem_error_study(model, [0.5, 0.25], 0.125, 4, SEED, batch_size=2)
        assert list(report.levels) == [0.5, 0.25]
        assert report.mses[0] > report.mses[1] > 0
        assert report.extras["gamma_tilde"] == pytest.approx([0.5, 1.0])
        assert report.extras["monotone"] is True


def test_total_error_small_run():
    model = ModelSpec.benchmark(16)
    report = total_error_study(model, 0.25, [2 ** -2, 2 ** -3, 2 ** -4], 4, SEED, ref_tau=2 ** -6, batch_size=2)
    assert len(report.ladder) == 3
    assert report.extras["floor"] == report.mses[-1]
    assert report.extras["h_bar"] == 0.25


class TestHolderProbe:
    def test_zero_data_has_zero_increments(self):
        zero = NonlinearitySpec.zero()
        model = ModelSpec.benchmark(4).updated(init_a=np.zeros(4), f_spec=zero, g_spec=zero, h_spec=zero)
        report = holder_probe(model, [0.25, 0.125, 0.0625], 4, SEED)
        assert np.all(report.mses == 0.0)
        assert math.isnan(report.fitted_rate)
        assert report.extras["target_rate"] == pytest.approx(1.6)

    def test_lags_inside_half_horizon(self):
        with pytest.raises(ModelValidationError):
            holder_probe(ModelSpec.benchmark(2), [0.6, 0.25, 0.125], 2, SEED)

    def test_lags_on_grid(self):
        with pytest.raises(GridMismatchError):
            holder_probe(ModelSpec.benchmark(2), [0.25, 0.1, 0.0625], 2, SEED, tau=0.0625)


def test_regularity_probe_small_run():
    result = regularity_probe(ModelSpec.benchmark(4), 1.0 / 16, 6, SEED, batch_size=3)
    assert result.n_samples == 6
    assert result.gamma_tilde == pytest.approx((0.5, 1.0))
    assert all(math.isfinite(v) and v > 0 for v in result.sup_solution + result.sup_derivative)
    # H^{2g} norms grow with g
    assert result.sup_solution[1] >= result.sup_solution[0]


def test_common_random_numbers_reduce_variance():
    var_paired, var_indep = crn_pilot(ModelSpec.benchmark(4), 0.25, 2 ** -5, 40, SEED)
    assert var_paired < var_indep
