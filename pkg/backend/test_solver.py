#!/usr/bin/env python3
"""
Modal solver tests: exactness on linear problems, variance oracles for
additive noise, derivative and residual checks.
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import integrate

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from tfwave_core.errors import GridMismatchError, ModelValidationError, NonlinearityMismatchError
from tfwave_core.kernels import KernelTable, ModeKernelCtx, eval_dT, eval_R, eval_S, eval_T
from tfwave_core.model import (
    CoeffSequences,
    ModelSpec,
    NonlinearitySpec,
    SequenceRule,
    hs_norm,
    parabola_coefficients,
)
from tfwave_core.noise import NoisePath, fgn_covariance, sample_path
from tfwave_core.solver import (
    ModalTrajectory,
    exact_linear,
    residual_check,
    solve_regularized,
    solve_regularized_batch,
    time_derivative,
)
from tfwave_core.special import MlfParams, ml

SEED = 7


def linear_model(n_modes=32, nu=1.0, init_b=None, **changes):
    model = ModelSpec(
        alpha=1.8, beta=0.9, nu=nu, hurst=0.75, domain_len=1.0, horizon=1.0, n_modes=n_modes,
        init_a=parabola_coefficients(n_modes),
        init_b=np.zeros(n_modes) if init_b is None else init_b,
    )
    return model.updated(**changes) if changes else model


def quiet_path(model, n_steps):
    zeros = np.zeros((model.n_modes, n_steps))
    return NoisePath(model.horizon / n_steps, n_steps, zeros, zeros, model.hurst, SEED)


def additive_model(channel, c=1.0, nu=0.0):
    """Single mode with lambda^beta = 1, no drift, constant noise intensity c on one channel."""
    additive = NonlinearitySpec.affine(c, 0.0)
    spec = {"g_spec": additive} if channel == "white" else {"h_spec": additive}
    return ModelSpec(
        alpha=1.8, beta=1.0, nu=nu, hurst=0.75, domain_len=math.pi, horizon=1.0, n_modes=1,
        init_a=np.zeros(1), init_b=np.zeros(1),
        noise_coeffs=CoeffSequences(SequenceRule(decay=1.0), SequenceRule(decay=1.0)),
        **spec,
    )


class TestExactLinear:
    def test_initial_values(self):
        model = linear_model(4, init_b=np.linspace(1.0, 0.0, 4))
        traj = exact_linear(model, np.linspace(0.0, 1.0, 9))
        assert np.array_equal(traj.coeffs[0], model.init_a)

    def test_initial_velocity(self):
        b = np.linspace(1.0, 0.0, 4)
        model = linear_model(4, init_b=b).updated(init_a=np.zeros(4))
        tau = 1e-4
        traj = exact_linear(model, tau * np.arange(3))
        slope = (traj.coeffs[1] - traj.coeffs[0]) / tau
        assert np.allclose(slope, b, rtol=0.0, atol=2e-4)

    def test_single_mode_value(self):
        model = ModelSpec(
            alpha=1.8, beta=0.9, nu=0.0, hurst=0.75, domain_len=math.pi, horizon=1.0, n_modes=1,
            init_a=np.ones(1), init_b=np.zeros(1),
        )
        traj = exact_linear(model, np.linspace(0.0, 1.0, 5))
        assert traj.coeffs[-1, 0] == pytest.approx(ml(MlfParams(1.8, 1.0), -1.0), rel=1e-13)

    def test_tempering_matches_kernels(self):
        model = linear_model(3, nu=4.0, init_b=np.array([0.5, 0.0, -1.0]))
        t = np.linspace(0.0, 1.0, 9)
        traj = exact_linear(model, t)
        for k in range(3):
            ctx = ModeKernelCtx(model.lam_beta[k], model.alpha, model.nu)
            expected = [model.init_a[k] * eval_T(ctx, s) + model.init_b[k] * eval_R(ctx, s) for s in t]
            assert np.allclose(traj.coeffs[:, k], expected, rtol=1e-12, atol=1e-15)

    def test_rejects_nonlinear_model(self):
        with pytest.raises(NonlinearityMismatchError):
            exact_linear(ModelSpec.benchmark(4), np.linspace(0.0, 1.0, 5))


class TestRegularizedSolve:
    def test_exact_on_linear_homogeneous_problem(self):
        model = linear_model(32, init_b=0.3 * parabola_coefficients(32))
        n_steps = 2 ** 9
        traj = solve_regularized(model, quiet_path(model, n_steps))
        exact = exact_linear(model, traj.t_grid)
        assert np.max(np.abs(traj.coeffs - exact.coeffs)) < 1e-10

    def test_zero_data_gives_zero_solution(self):
        model = linear_model(4).updated(init_a=np.zeros(4))
        path = sample_path(4, 16, 1.0 / 16, 0.75, SEED)
        traj = solve_regularized(model, path)
        assert np.all(traj.coeffs == 0.0)

    def test_deterministic_forcing_matches_quadrature(self):
        # f = c: u(t) = c * G(t) for zero data and nu = 0
        model = linear_model(2, nu=0.0).updated(
            init_a=np.zeros(2), f_spec=NonlinearitySpec.affine(0.5, 0.0),
        )
        traj = solve_regularized(model, quiet_path(model, 32))
        table = KernelTable(model.lam_beta, model.alpha, 1.0 / 32, 32)
        assert np.allclose(traj.coeffs, 0.5 * table.g, rtol=1e-12, atol=1e-15)

    def test_batch_members_are_independent(self):
        model = ModelSpec.benchmark(8)
        paths = [sample_path(8, 32, 1.0 / 32, 0.75, SEED, i) for i in range(3)]
        batch = solve_regularized_batch(model, paths)
        single = solve_regularized(model, paths[1])
        assert np.array_equal(batch[1].coeffs, single.coeffs)
        assert batch[2].sample_index == 2

    def test_grid_must_cover_horizon(self):
        model = linear_model(4)
        path = sample_path(4, 10, 0.05, 0.75, SEED)
        with pytest.raises(GridMismatchError):
            solve_regularized(model, path)

    def test_path_needs_enough_modes(self):
        model = linear_model(4)
        path = sample_path(2, 16, 1.0 / 16, 0.75, SEED)
        with pytest.raises(GridMismatchError):
            solve_regularized(model, path)

    def test_step_cap(self):
        model = linear_model(2)
        with pytest.raises(ModelValidationError):
            solve_regularized(model, quiet_path(model, 64), max_steps=32)

    def test_trajectory_lookup(self):
        model = linear_model(2)
        traj = solve_regularized(model, quiet_path(model, 8))
        assert np.array_equal(traj.at(0.5), traj.coeffs[4])
        with pytest.raises(GridMismatchError):
            traj.at(0.3)
        padded = traj.to_continuous(4)
        assert padded.shape == (9, 4) and np.all(padded[:, 2:] == 0.0)


def white_variance_oracle(t_end=1.0, c=1.0, sigma=math.exp(-1.0)):
    value, _ = integrate.quad(lambda s: eval_S(ModeKernelCtx(1.0, 1.8), t_end - s) ** 2, 0.0, t_end, limit=200)
    return (c * sigma) ** 2 * value


def regularized_white_variance(n_steps, c=1.0, sigma=math.exp(-1.0)):
    """Exact variance of the regularised solution: sum_i W_i^2 / tau."""
    table = KernelTable(np.array([1.0]), 1.8, 1.0 / n_steps, n_steps)
    weights = table.weights[:, 0]
    return (c * sigma) ** 2 * np.sum(weights ** 2) * n_steps


def endpoint_variance(model, n_steps, n_paths):
    """Sample variance of u_1(T) over n_paths independent samples, with its standard error."""
    paths = [sample_path(1, n_steps, model.horizon / n_steps, model.hurst, SEED, i) for i in range(n_paths)]
    trajs = solve_regularized_batch(model, paths)
    endpoint = np.array([tr.coeffs[-1, 0] for tr in trajs])
    estimate = endpoint.var(ddof=1)
    return estimate, estimate * math.sqrt(2.0 / (endpoint.size - 1))


def regularized_fractional_variance(n_steps, hurst=0.75):
    tau = 1.0 / n_steps
    weights = KernelTable(np.array([1.0]), 1.8, tau, n_steps).weights[::-1, 0] / tau
    rho = math.exp(-1.0)
    return rho ** 2 * weights @ fgn_covariance(n_steps, hurst, tau) @ weights


class TestAdditiveNoise:
    def test_regularisation_bias_shrinks(self):
        oracle = white_variance_oracle()
        coarse = abs(regularized_white_variance(32) - oracle)
        fine = abs(regularized_white_variance(64) - oracle)
        assert fine < coarse

    def test_white_noise_variance(self):
        estimate, stderr = endpoint_variance(additive_model("white"), 64, 10_000)
        expected = regularized_white_variance(64)
        assert abs(estimate - expected) <= 3 * stderr
        assert expected == pytest.approx(white_variance_oracle(), rel=0.05)

    def test_fractional_noise_variance(self):
        estimate, stderr = endpoint_variance(additive_model("fractional"), 64, 10_000)
        assert abs(estimate - regularized_fractional_variance(64)) <= 3 * stderr

    @pytest.mark.slow
    def test_white_noise_variance_large_ensemble(self):
        estimate, stderr = endpoint_variance(additive_model("white"), 128, 10_000)
        assert abs(estimate - regularized_white_variance(128)) <= 3 * stderr

    @pytest.mark.slow
    def test_fractional_noise_variance_large_ensemble(self):
        estimate, stderr = endpoint_variance(additive_model("fractional"), 128, 10_000)
        assert abs(estimate - regularized_fractional_variance(128)) <= 3 * stderr


class TestDerivativeAndResidual:
    def test_constant_trajectory(self):
        model = linear_model(2)
        traj = ModalTrajectory(0.1, 10, np.ones((11, 2)), model)
        assert np.allclose(time_derivative(traj).coeffs, 0.0)

    def test_derivative_of_linear_solution(self):
        model = linear_model(3, nu=0.5)
        n_steps = 512
        traj = exact_linear(model, np.linspace(0.0, 1.0, n_steps + 1))
        deriv = time_derivative(traj).coeffs
        t = traj.t_grid
        for k in range(3):
            ctx = ModeKernelCtx(model.lam_beta[k], model.alpha, model.nu)
            exact = np.array([model.init_a[k] * eval_dT(ctx, s) for s in t[64:]])
            assert np.max(np.abs(deriv[64:, k] - exact)) < 1e-3 * max(1.0, np.max(np.abs(exact)))

    def test_derivative_needs_two_steps(self):
        traj = ModalTrajectory(0.5, 1, np.zeros((2, 1)), linear_model(1))
        with pytest.raises(ModelValidationError):
            time_derivative(traj)

    def test_zero_solution_has_zero_residual(self):
        model = linear_model(3).updated(init_a=np.zeros(3))
        traj = solve_regularized(model, quiet_path(model, 64))
        assert np.all(residual_check(traj, model) == 0.0)

    def test_linear_homogeneous_residual(self):
        model = linear_model(8)
        n_steps = 512
        tau = 1.0 / n_steps
        traj = solve_regularized(model, quiet_path(model, n_steps))
        residual = residual_check(traj, model)
        bound = 50 * tau ** (3 - model.alpha) * np.linalg.norm(model.init_a)
        assert np.all(residual[10:] <= bound)

    def test_forced_residual(self):
        model = linear_model(4, nu=0.0).updated(f_spec=NonlinearitySpec.affine(1.0, 0.0))
        n_steps = 512
        tau = 1.0 / n_steps
        traj = solve_regularized(model, quiet_path(model, n_steps))
        residual = residual_check(traj, model)
        bound = 50 * tau ** (3 - model.alpha) * max(np.linalg.norm(model.init_a), 1.0)
        assert np.all(residual[10:] <= bound)


class TestRegularity:
    def test_derivative_norm_bounded(self):
        model = ModelSpec.benchmark(16)
        n_steps = 64
        paths = [sample_path(16, n_steps, 1.0 / n_steps, 0.75, SEED, i) for i in range(100)]
        trajs = solve_regularized_batch(model, paths)
        g = model.gamma_tilde_candidates()[0]
        exponent = 2 * g - 2 * model.beta / model.alpha
        norms = np.array([hs_norm(time_derivative(tr).coeffs, exponent) for tr in trajs])
        assert np.all(np.isfinite(norms))
        mean_sq = np.mean(norms ** 2, axis=0)
        assert mean_sq.max() < 1e3
