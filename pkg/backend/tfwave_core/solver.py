"""
Modal solvers.

The regularised problem replaces the noises by their piecewise-constant
derivatives on the grid t_i = i tau. In the conjugated variable v = e^{nu t} u
the tempering leaves the kernels, and each mode satisfies

    v_k(t_m) = a_k E_{a,1}(-lam t_m^a) + (nu a_k + b_k) t_m E_{a,2}(-lam t_m^a)
             + sum_{i<m} [G(t_m - t_i) - G(t_m - t_{i+1})] F_{k,i}

with F_i = e^{nu t_i} [f + g sigma^n dW/tau + h rho^n dW^H/tau] frozen at the
left point t_i. The weights are exact; the left-point freeze is the only
quadrature in the scheme.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from app.core.config import settings

from .calculus import TimeSeries, tempered_caputo
from .errors import GridMismatchError, ModelValidationError, NonlinearityMismatchError, SolverOverflowError
from .kernels import KernelTable
from .model import ModelSpec, drift_image, hs_norm, noise_operator_apply
from .noise import NoisePath
from .special import ml_array

logger = logging.getLogger(__name__)

Forcing = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ModalTrajectory:
    """
    Modal coefficients of one solution path on t_m = m tau.

    Attributes:
        tau: Time step
        n_steps: N
        coeffs: (N+1) x K, row m holds u(t_m)
        model: Model the path solves
        seed: Master seed of the driving noise (None for deterministic solves)
        sample_index: Monte-Carlo sample of the driving noise
        space: FEM space when coefficients refer to the discrete eigenbasis
    """
    tau: float
    n_steps: int
    coeffs: np.ndarray
    model: ModelSpec
    seed: Optional[int] = None
    sample_index: int = 0
    space: Optional[Any] = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != self.n_steps + 1:
            raise ModelValidationError(f"coeffs has N+1={self.n_steps + 1} rows")
        if not np.all(np.isfinite(coeffs)):
            raise ModelValidationError("trajectory entries are finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def t_grid(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    @property
    def basis(self) -> str:
        return "spectral" if self.space is None else "fem"

    def at(self, t: float) -> np.ndarray:
        """Coefficients at a grid time t."""
        m = t / self.tau
        idx = int(round(m))
        if abs(m - idx) > 1e-9 or not 0 <= idx <= self.n_steps:
            raise GridMismatchError(f"t={t} is not on the grid of step {self.tau}")
        return self.coeffs[idx]

    def to_continuous(self, n_modes: int, rows: Optional[np.ndarray] = None) -> np.ndarray:
        """Coefficients in the first n_modes continuous sine modes."""
        data = self.coeffs if rows is None else np.atleast_2d(rows)
        if self.space is not None:
            return data @ self.space.prolongation(n_modes)
        out = np.zeros(data.shape[:-1] + (n_modes,))
        m = min(n_modes, data.shape[-1])
        out[..., :m] = data[..., :m]
        return out


# ---------------------------------------------------------------------------
# Marching core
# ---------------------------------------------------------------------------

def march(table: KernelTable, hom: np.ndarray, nu: float, forcing: Forcing, n_paths: int) -> np.ndarray:
    """
    Advance the conjugated convolution for a batch of paths.

    Args:
        table: Kernel table on the step grid
        hom: Conjugated homogeneous part, (N+1, K)
        nu: Tempering rate
        forcing: (i, u(t_i)) -> phi_i of shape (S, K), without the e^{nu t_i} factor
        n_paths: Batch size S

    Returns:
        u of shape (N+1, S, K)

    The history sum runs over the time axis only, so a path's values do not
    depend on the other members of its batch.
    """
    n_steps, n_modes = table.n_steps, table.lam_beta.size
    guard = settings.SOLVER_OVERFLOW_GUARD
    t = table.t_grid
    lift = np.exp(nu * t)
    v = np.empty((n_steps + 1, n_paths, n_modes))
    v[0] = hom[0]
    history = np.empty((n_steps, n_paths, n_modes))
    reversed_weights = table.weights[::-1]
    for m in range(1, n_steps + 1):
        u_prev = v[m - 1] / lift[m - 1]
        history[m - 1] = lift[m - 1] * forcing(m - 1, u_prev)
        w = reversed_weights[n_steps - m:]
        conv = (w[:, None, :] * history[:m]).sum(axis=0)
        v[m] = hom[m] + conv
        bad = ~np.isfinite(v[m]) | (np.abs(v[m]) > guard)
        if np.any(bad):
            s, k = np.argwhere(bad)[0]
            raise SolverOverflowError(m, int(k), float(abs(v[m, s, k])))
    return v / lift[:, None, None]


def _coefficient_tables(model: ModelSpec, tau: float, n_steps: int, exact: bool):
    t = tau * np.arange(n_steps)
    seq = model.noise_coeffs
    if exact:
        return seq.sigma_k(t, model.n_modes, model.horizon), seq.rho_k(t, model.n_modes, model.horizon)
    return seq.sigma_k_n(t, model.n_modes, model.horizon), seq.rho_k_n(t, model.n_modes, model.horizon)


def build_forcing(
    model: ModelSpec,
    paths: Sequence[NoisePath],
    *,
    exact_coefficients: bool = False,
    prolong: Optional[np.ndarray] = None,
) -> Forcing:
    """
    Left-point forcing phi_i for a batch of paths.

    When prolong (discrete x continuous) is given, states are mapped to
    continuous modal coefficients before the nonlinearities act and the
    images are projected back onto the discrete basis.
    """
    tau = paths[0].tau
    n_steps = paths[0].n_steps
    k = model.n_modes
    sigma, rho = _coefficient_tables(model, tau, n_steps, exact_coefficients)
    t = tau * np.arange(n_steps)
    need_bm = not model.g_spec.is_zero
    need_fbm = not model.h_spec.is_zero
    bm = np.stack([p.bm_incr[:k].T for p in paths], axis=1) / tau if need_bm else None
    fbm = np.stack([p.fbm_incr[:k].T for p in paths], axis=1) / tau if need_fbm else None

    def forcing(i: int, u: np.ndarray) -> np.ndarray:
        uc = u if prolong is None else u @ prolong
        out = drift_image(model.f_spec, t[i], uc)
        if need_bm:
            out = out + noise_operator_apply(model.g_spec, t[i], uc, sigma[i] * bm[i])
        if need_fbm:
            out = out + noise_operator_apply(model.h_spec, t[i], uc, rho[i] * fbm[i])
        return out if prolong is None else out @ prolong.T

    return forcing


def check_grid(model: ModelSpec, paths: Sequence[NoisePath], max_steps: Optional[int] = None) -> None:
    """Paths share one grid that covers [0, T] with enough modes."""
    if not paths:
        raise GridMismatchError("no noise paths supplied")
    first = paths[0]
    for p in paths:
        if p.n_steps != first.n_steps or p.tau != first.tau:
            raise GridMismatchError("paths in a batch share one time grid")
        if p.n_modes < model.n_modes:
            raise GridMismatchError(f"path carries {p.n_modes} modes, model needs {model.n_modes}")
    if not math.isclose(first.tau * first.n_steps, model.horizon, rel_tol=1e-12):
        raise GridMismatchError(f"path horizon {first.tau * first.n_steps} != model horizon {model.horizon}")
    cap = settings.SOLVER_MAX_STEPS if max_steps is None else max_steps
    if first.n_steps > cap:
        raise ModelValidationError(f"N <= {cap} (got N={first.n_steps}); raise the step cap explicitly")


def solve_regularized_batch(
    model: ModelSpec,
    paths: Sequence[NoisePath],
    *,
    table: Optional[KernelTable] = None,
    exact_coefficients: bool = False,
    max_steps: Optional[int] = None,
) -> List[ModalTrajectory]:
    """
    Mild solution of the regularised problem for several paths at once.

    Args:
        model: Model; its nonlinearities are frozen at left points
        paths: Noise paths on a common grid
        table: Kernel table for (model.lam_beta, alpha, tau, N); built when omitted
        exact_coefficients: Use sigma_k, rho_k instead of sigma_k^n, rho_k^n
        max_steps: Override of the step cap

    Returns:
        One ModalTrajectory per path
    """
    check_grid(model, paths, max_steps)
    tau, n_steps = paths[0].tau, paths[0].n_steps
    if table is None:
        table = KernelTable(model.lam_beta, model.alpha, tau, n_steps)
    elif table.n_steps != n_steps or not math.isclose(table.tau, tau, rel_tol=1e-12):
        raise GridMismatchError("kernel table and noise grid differ")
    hom = table.homogeneous(model.init_a, model.init_b, model.nu)
    forcing = build_forcing(model, paths, exact_coefficients=exact_coefficients)
    u = march(table, hom, model.nu, forcing, len(paths))
    return [
        ModalTrajectory(tau, n_steps, u[:, s, :], model, seed=p.seed, sample_index=p.sample_index)
        for s, p in enumerate(paths)
    ]


def solve_regularized(
    model: ModelSpec,
    path: NoisePath,
    *,
    table: Optional[KernelTable] = None,
    exact_coefficients: bool = False,
    max_steps: Optional[int] = None,
) -> ModalTrajectory:
    """Mild solution of the regularised problem on one noise path."""
    return solve_regularized_batch(
        model, [path], table=table, exact_coefficients=exact_coefficients, max_steps=max_steps
    )[0]


def exact_linear(model: ModelSpec, t_grid: np.ndarray) -> ModalTrajectory:
    """
    Closed-form solution of the linear homogeneous problem,
    u_k(t) = e^{-nu t}[a_k (E_{a,1} + nu t E_{a,2}) + b_k t E_{a,2}].

    Raises:
        NonlinearityMismatchError: f, g or h is not the zero kind
    """
    if not model.is_linear_homogeneous:
        raise NonlinearityMismatchError("exact_linear requires f = g = h = 0")
    t = np.asarray(t_grid, dtype=float)
    series = TimeSeries(t, np.zeros_like(t))
    z = -(t ** model.alpha)[:, None] * model.lam_beta[None, :]
    e1 = ml_array(model.alpha, 1.0, z)
    e2 = ml_array(model.alpha, 2.0, z)
    tt = t[:, None]
    a, b = model.init_a[None, :], model.init_b[None, :]
    coeffs = np.exp(-model.nu * tt) * (a * (e1 + model.nu * tt * e2) + b * tt * e2)
    return ModalTrajectory(series.tau, t.size - 1, coeffs, model)


def time_derivative(traj: ModalTrajectory) -> ModalTrajectory:
    """Second-order finite differences in time (one-sided at both ends)."""
    if traj.n_steps < 2:
        raise ModelValidationError("time derivative needs N >= 2")
    d = np.gradient(traj.coeffs, traj.tau, axis=0, edge_order=2)
    return ModalTrajectory(traj.tau, traj.n_steps, d, traj.model, traj.seed, traj.sample_index, traj.space)


def residual_check(traj: ModalTrajectory, model: ModelSpec, path: Optional[NoisePath] = None) -> np.ndarray:
    """
    H^0 norm of D^{a,nu} u + lambda^beta u - rhs at every grid point.

    The right-hand side on (t_{m-1}, t_m] is the left-point forcing of that
    interval. Meaningful in the deterministic or linear regime, where the
    Caputo quadrature is the only error.
    """
    if traj.space is not None:
        raise ModelValidationError("residual_check applies to spectral trajectories")
    t = traj.t_grid
    u = traj.coeffs
    if path is None:
        path = NoisePath(
            traj.tau, traj.n_steps, np.zeros((model.n_modes, traj.n_steps)),
            np.zeros((model.n_modes, traj.n_steps)), model.hurst, 0,
        )
    forcing = build_forcing(model, [path])
    rhs = np.empty_like(u)
    decay = math.exp(-model.nu * traj.tau)
    for i in range(traj.n_steps):
        rhs[i + 1] = decay * forcing(i, u[i][None, :])[0]
    rhs[0] = rhs[1]
    derivative = tempered_caputo(TimeSeries(t, u), model.alpha, model.nu, initial_slope=model.init_b).values
    residual = derivative + model.lam_beta[None, :] * u - rhs
    return hs_norm(residual, 0.0, model.domain_len)
