"""
Monte-Carlo error studies.

Samples are processed in fixed-size batches keyed by sample index and
dispatched to a thread pool round by round. Per-sample results are stored by
index and reduced in index order, and the early-stopping rule is evaluated only
at round boundaries, so every number a study reports depends on
(configuration, master seed) and never on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from app.core.config import settings

from .errors import DegenerateLadderError, GridMismatchError, ModelValidationError, ReferenceResolutionError
from .fem import build_space, solve_fem_batch
from .kernels import KernelTable
from .model import ModelSpec, hs_norm
from .noise import coarsen, sample_path
from .solver import ModalTrajectory, solve_regularized_batch, time_derivative
from .special import ml_array

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["study", "row", "level", "mse", "stderr", "n", "fitted_rate", "ci_low", "ci_high"]
TIMING_COLUMNS = ["study", "level", "wall_ms"]


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class LevelResult:
    """One ladder level: parameter value, E||.||^2 estimate, its standard error."""
    level: float
    mse: float
    stderr: float
    n_samples: int
    wall_ms: float = 0.0


@dataclass
class RateFit:
    slope: float
    intercept: float
    ci: Tuple[float, float]


@dataclass
class ErrorReport:
    """
    Ladder of Monte-Carlo estimates with a fitted log-log rate.

    Attributes:
        study: Study name
        ladder: Levels in strictly decreasing parameter order
        fitted_rate: Least-squares slope of log mse against log level
        rate_ci: 95% confidence band of the slope
        intercept: Fitted intercept
        extras: Study-specific diagnostics (corrected rates, floors, regularity indices)
    """
    study: str
    ladder: List[LevelResult]
    fitted_rate: float = math.nan
    rate_ci: Tuple[float, float] = (math.nan, math.nan)
    intercept: float = math.nan
    extras: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        levels = [r.level for r in self.ladder]
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise ModelValidationError("ladder parameters strictly decreasing")
        if any(r.mse < 0 for r in self.ladder):
            raise ModelValidationError("mse >= 0")

    @property
    def levels(self) -> np.ndarray:
        return np.array([r.level for r in self.ladder])

    @property
    def mses(self) -> np.ndarray:
        return np.array([r.mse for r in self.ladder])

    def to_frame(self) -> pd.DataFrame:
        """Level rows followed by one summary row."""
        rows = [
            {
                "study": self.study, "row": "level", "level": r.level, "mse": r.mse,
                "stderr": r.stderr, "n": r.n_samples, "fitted_rate": np.nan,
                "ci_low": np.nan, "ci_high": np.nan,
            }
            for r in self.ladder
        ]
        rows.append({
            "study": self.study, "row": "summary", "level": np.nan, "mse": np.nan, "stderr": np.nan,
            "n": max((r.n_samples for r in self.ladder), default=0),
            "fitted_rate": self.fitted_rate, "ci_low": self.rate_ci[0], "ci_high": self.rate_ci[1],
        })
        return pd.DataFrame(rows, columns=RESULT_COLUMNS)

    def timing_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"study": self.study, "level": r.level, "wall_ms": r.wall_ms} for r in self.ladder],
            columns=TIMING_COLUMNS,
        )


def fit_rate(levels: Sequence[float], values: Sequence[float]) -> RateFit:
    """
    Ordinary least squares of log(values) on log(levels).

    Args:
        levels: Ladder parameters, at least 3, positive
        values: Positive measurements

    Returns:
        Slope, intercept and 95% confidence interval of the slope

    Raises:
        DegenerateLadderError: fewer than 3 points or non-positive entries
    """
    x = np.asarray(levels, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise DegenerateLadderError(f"rate fit needs >= 3 paired points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DegenerateLadderError("rate fit needs positive finite values")
    fit = stats.linregress(np.log(x), np.log(y))
    half = stats.t.ppf(0.975, x.size - 2) * fit.stderr
    return RateFit(float(fit.slope), float(fit.intercept), (float(fit.slope - half), float(fit.slope + half)))


# ---------------------------------------------------------------------------
# Mean-square errors
# ---------------------------------------------------------------------------

def _continuous_size(traj: ModalTrajectory) -> int:
    return traj.model.n_modes if traj.space is not None else traj.n_modes


def squared_errors(
    traj_pairs: Sequence[Tuple[ModalTrajectory, ModalTrajectory]], s: float, t_eval: float
) -> np.ndarray:
    """Per-pair ||ref(t_eval) - cand(t_eval)||^2 in H^s."""
    out = np.empty(len(traj_pairs))
    for i, (ref, cand) in enumerate(traj_pairs):
        if not math.isclose(ref.model.domain_len, cand.model.domain_len):
            raise GridMismatchError("trajectories live on different domains")
        n = max(_continuous_size(ref), _continuous_size(cand))
        a = ref.to_continuous(n, ref.at(t_eval))[0]
        b = cand.to_continuous(n, cand.at(t_eval))[0]
        out[i] = float(hs_norm(a - b, s, ref.model.domain_len) ** 2)
    return out


def ms_error(
    traj_pairs: Sequence[Tuple[ModalTrajectory, ModalTrajectory]], s: float, t_eval: float
) -> Tuple[float, float]:
    """
    Sample mean and standard error of ||ref - cand||^2_{H^s} at t_eval.

    FEM candidates are mapped to continuous modal coefficients; spectral
    trajectories of different truncation are zero-padded.

    Raises:
        GridMismatchError: t_eval not on a trajectory grid, or different domains
    """
    values = squared_errors(traj_pairs, s, t_eval)
    return _mean_stderr(values)


def _mean_stderr(values: np.ndarray) -> Tuple[float, float]:
    n = values.shape[0]
    mean = float(np.mean(values, axis=0)) if values.ndim == 1 else np.mean(values, axis=0)
    if n < 2:
        return mean, 0.0 * mean
    stderr = np.std(values, axis=0, ddof=1) / math.sqrt(n)
    return mean, (float(stderr) if values.ndim == 1 else stderr)


# ---------------------------------------------------------------------------
# Parallel Monte-Carlo harness
# ---------------------------------------------------------------------------

BatchFn = Callable[[range], Tuple[np.ndarray, np.ndarray]]


@dataclass
class MonteCarloResult:
    values: np.ndarray
    wall_ms: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


def run_monte_carlo(
    n_samples: int,
    n_outputs: int,
    batch_fn: BatchFn,
    *,
    threads: int = 1,
    batch_size: Optional[int] = None,
    round_batches: Optional[int] = None,
    stop_rel: Optional[float] = None,
    label: str = "study",
) -> MonteCarloResult:
    """
    Run batch_fn over fixed sample batches.

    Args:
        n_samples: Maximum number of samples
        n_outputs: Values returned per sample
        batch_fn: range of sample indices -> (values (S, n_outputs), wall seconds per output)
        threads: Worker threads
        batch_size: Samples per batch
        round_batches: Batches per round between stopping checks
        stop_rel: Stop once stderr <= stop_rel * mean for every output (None disables)
        label: Name used in log messages

    Returns:
        Per-sample values in sample-index order and accumulated wall time per output
    """
    batch_size = batch_size or settings.MC_BATCH_SIZE
    round_batches = round_batches or settings.MC_ROUND_BATCHES
    batches = [range(b, min(b + batch_size, n_samples)) for b in range(0, n_samples, batch_size)]
    values = np.full((n_samples, n_outputs), np.nan)
    wall = np.zeros(n_outputs)
    lock = threading.Lock()
    done = 0

    def work(indices: range) -> np.ndarray:
        out, seconds = batch_fn(indices)
        with lock:
            wall[:] += seconds
        return out

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        for start in range(0, len(batches), round_batches):
            round_ = batches[start:start + round_batches]
            for indices, out in zip(round_, executor.map(work, round_)):
                values[indices.start:indices.stop] = out
            done = round_[-1].stop
            if stop_rel is not None and done >= 2 and done < n_samples:
                mean, stderr = _mean_stderr(values[:done])
                if np.all(stderr <= stop_rel * np.abs(mean)):
                    logger.warning(f"{label}: stderr target reached after {done}/{n_samples} samples")
                    break
            logger.debug(f"{label}: {done}/{n_samples} samples")
    return MonteCarloResult(values[:done], wall * 1e3)


def _ladder_report(
    study: str, levels: Sequence[float], mc: MonteCarloResult, fit: bool = True, extras: Optional[dict] = None
) -> ErrorReport:
    mean, stderr = _mean_stderr(mc.values)
    ladder = [
        LevelResult(float(lv), float(m), float(e), mc.n_samples, float(w))
        for lv, m, e, w in zip(levels, np.atleast_1d(mean), np.atleast_1d(stderr), mc.wall_ms)
    ]
    report = ErrorReport(study, ladder, extras=dict(extras or {}))
    if fit:
        positive = [(r.level, r.mse) for r in ladder if r.mse > 0]
        if len(positive) >= 3:
            rate = fit_rate(*zip(*positive))
            report.fitted_rate, report.rate_ci, report.intercept = rate.slope, rate.ci, rate.intercept
        else:
            logger.warning(f"{study}: too few positive levels for a rate fit")
    return report


def _dyadic_steps(horizon: float, tau: float) -> int:
    n = horizon / tau
    steps = int(round(n))
    if abs(n - steps) > 1e-9 * n or steps < 1 or steps & (steps - 1):
        raise DegenerateLadderError(f"ladder must be dyadic: T/tau = {n} is not a power of two")
    return steps


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

def modeling_error_study(
    model: ModelSpec,
    tau_ladder: Sequence[float],
    n_samples: int,
    seed: int,
    *,
    ref_tau: Optional[float] = None,
    s: float = 0.0,
    threads: int = 1,
    batch_size: Optional[int] = None,
    stop_rel: Optional[float] = None,
) -> ErrorReport:
    """
    E||u - u_n||^2 at t = T along a dyadic tau ladder.

    The reference is solved on the finest grid with the exact coefficients
    sigma_k, rho_k; candidates use the coarsened increments of the same paths
    and the approximate coefficients sigma_k^n, rho_k^n.
    """
    taus = sorted((float(t) for t in tau_ladder), reverse=True)
    ref_tau = ref_tau if ref_tau is not None else taus[-1] / 8.0
    n_ref = _dyadic_steps(model.horizon, ref_tau)
    factors = []
    for tau in taus:
        n = _dyadic_steps(model.horizon, tau)
        if n >= n_ref:
            raise DegenerateLadderError(f"reference step {ref_tau} must be finer than {tau}")
        factors.append(n_ref // n)

    ref_table = KernelTable(model.lam_beta, model.alpha, ref_tau, n_ref)
    tables = [ref_table.coarsen(f) for f in factors]
    logger.info(f"modeling-error: {len(taus)} levels, reference N={n_ref}, K={model.n_modes}")

    def batch(indices: range):
        seconds = np.zeros(len(taus))
        paths = [sample_path(model.n_modes, n_ref, ref_tau, model.hurst, seed, i) for i in indices]
        refs = solve_regularized_batch(model, paths, table=ref_table, exact_coefficients=True, max_steps=n_ref)
        out = np.empty((len(paths), len(taus)))
        for j, (factor, table) in enumerate(zip(factors, tables)):
            started = time.perf_counter()
            coarse = [coarsen(p, factor) for p in paths]
            cands = solve_regularized_batch(model, coarse, table=table, max_steps=n_ref)
            out[:, j] = squared_errors(list(zip(refs, cands)), s, model.horizon)
            seconds[j] = time.perf_counter() - started
        return out, seconds

    mc = run_monte_carlo(
        n_samples, len(taus), batch, threads=threads, batch_size=batch_size,
        stop_rel=stop_rel, label="modeling-error",
    )
    extras = {
        "reference_tau": ref_tau,
        "modeling_floor": model.noise_coeffs.modeling_floor(model.n_modes),
        "gamma_tilde": list(model.gamma_tilde_candidates()),
    }
    return _ladder_report("modeling-error", taus, mc, extras=extras)


def fem_error_study(
    model: ModelSpec,
    h_ladder: Sequence[float],
    tau_fixed: float,
    n_samples: int,
    seed: int,
    *,
    s: float = 0.0,
    threads: int = 1,
    batch_size: Optional[int] = None,
    stop_rel: Optional[float] = None,
    spectral_trunc: Optional[int] = None,
) -> ErrorReport:
    """
    E||u_n - u_n^h||^2 at t = T along a mesh ladder, with the spectral solution
    at truncation K (model.n_modes) as reference on the same paths.

    Raises:
        ReferenceResolutionError: K < 4M for the finest mesh
    """
    hs = sorted((float(h) for h in h_ladder), reverse=True)
    m_max = int(round(model.domain_len / hs[-1])) - 1
    if model.n_modes < 4 * m_max:
        raise ReferenceResolutionError(f"reference needs K >= 4M = {4 * m_max}, got K={model.n_modes}")
    n_steps = int(round(model.horizon / tau_fixed))
    if not math.isclose(n_steps * tau_fixed, model.horizon, rel_tol=1e-12):
        raise GridMismatchError(f"tau={tau_fixed} does not divide T={model.horizon}")

    spaces = [build_space(h, model.domain_len, model.beta, spectral_trunc) for h in hs]
    ref_table = KernelTable(model.lam_beta, model.alpha, tau_fixed, n_steps)
    tables = [KernelTable(space.eig_vals, model.alpha, tau_fixed, n_steps) for space in spaces]
    logger.info(f"fem-error: meshes {hs}, K={model.n_modes}, N={n_steps}")

    def batch(indices: range):
        seconds = np.zeros(len(hs))
        paths = [sample_path(model.n_modes, n_steps, tau_fixed, model.hurst, seed, i) for i in indices]
        refs = solve_regularized_batch(model, paths, table=ref_table, max_steps=n_steps)
        out = np.empty((len(paths), len(hs)))
        for j, (space, table) in enumerate(zip(spaces, tables)):
            started = time.perf_counter()
            cands = solve_fem_batch(model, space, paths, table=table, max_steps=n_steps)
            out[:, j] = squared_errors(list(zip(refs, cands)), s, model.horizon)
            seconds[j] = time.perf_counter() - started
        return out, seconds

    mc = run_monte_carlo(
        n_samples, len(hs), batch, threads=threads, batch_size=batch_size,
        stop_rel=stop_rel, label="fem-error",
    )
    gamma_tilde = model.gamma_tilde_candidates()
    report = _ladder_report(
        "fem-error", hs, mc,
        extras={"gamma_tilde": list(gamma_tilde), "target_rate": [4.0 * g for g in gamma_tilde]},
    )
    positive = [(r.level, r.mse / abs(math.log(r.level))) for r in report.ladder if r.mse > 0 and r.level < 1]
    if len(positive) >= 3:
        corrected = fit_rate(*zip(*positive))
        report.extras["log_corrected_rate"] = corrected.slope
        report.extras["log_corrected_ci"] = list(corrected.ci)
    mses = report.mses
    report.extras["monotone"] = bool(np.all(np.diff(mses) < 0))
    return report


def total_error_study(
    model: ModelSpec,
    h_bar: float,
    tau_ladder: Sequence[float],
    n_samples: int,
    seed: int,
    *,
    ref_tau: Optional[float] = None,
    s: float = 0.0,
    threads: int = 1,
    batch_size: Optional[int] = None,
    stop_rel: Optional[float] = None,
) -> ErrorReport:
    """
    E||u - u_n^h||^2 at fixed mesh along a tau ladder. The reference is the
    fine-grid spectral solution with exact coefficients; the error flattens at
    the mesh-dependent floor once the time error drops below it.
    """
    taus = sorted((float(t) for t in tau_ladder), reverse=True)
    ref_tau = ref_tau if ref_tau is not None else taus[-1] / 8.0
    n_ref = _dyadic_steps(model.horizon, ref_tau)
    factors = [n_ref // _dyadic_steps(model.horizon, tau) for tau in taus]
    if min(factors) < 2:
        raise DegenerateLadderError("reference step must be finer than every ladder step")
    space = build_space(h_bar, model.domain_len, model.beta)
    if model.n_modes < 4 * space.M_dim:
        raise ReferenceResolutionError(f"reference needs K >= 4M = {4 * space.M_dim}, got K={model.n_modes}")
    ref_table = KernelTable(model.lam_beta, model.alpha, ref_tau, n_ref)
    fem_fine = KernelTable(space.eig_vals, model.alpha, ref_tau, n_ref)
    tables = [fem_fine.coarsen(f) for f in factors]

    def batch(indices: range):
        seconds = np.zeros(len(taus))
        paths = [sample_path(model.n_modes, n_ref, ref_tau, model.hurst, seed, i) for i in indices]
        refs = solve_regularized_batch(model, paths, table=ref_table, exact_coefficients=True, max_steps=n_ref)
        out = np.empty((len(paths), len(taus)))
        for j, (factor, table) in enumerate(zip(factors, tables)):
            started = time.perf_counter()
            coarse = [coarsen(p, factor) for p in paths]
            cands = solve_fem_batch(model, space, coarse, table=table, max_steps=n_ref)
            out[:, j] = squared_errors(list(zip(refs, cands)), s, model.horizon)
            seconds[j] = time.perf_counter() - started
        return out, seconds

    mc = run_monte_carlo(
        n_samples, len(taus), batch, threads=threads, batch_size=batch_size,
        stop_rel=stop_rel, label="total-error",
    )
    report = _ladder_report("total-error", taus, mc, extras={"h_bar": h_bar, "reference_tau": ref_tau})
    mses = report.mses
    report.extras["floor"] = float(mses[-1])
    report.extras["flattening_ratio"] = float(mses[-1] / mses[-2]) if mses.size > 1 and mses[-2] > 0 else math.nan
    return report


def holder_probe(
    model: ModelSpec,
    lag_set: Sequence[float],
    n_samples: int,
    seed: int,
    *,
    tau: Optional[float] = None,
    threads: int = 1,
    batch_size: Optional[int] = None,
) -> ErrorReport:
    """
    Slope of log E||u(theta + d) - u(theta)||^2 against log d at theta = T/2.
    """
    lags = sorted((float(d) for d in lag_set), reverse=True)
    if not all(0 < d < model.horizon / 2 for d in lags):
        raise ModelValidationError("lags lie in (0, T/2)")
    tau = tau if tau is not None else min(lags)
    n_steps = int(round(model.horizon / tau))
    theta = model.horizon / 2
    offsets = [int(round(d / tau)) for d in lags]
    if any(abs(o * tau - d) > 1e-9 * d for o, d in zip(offsets, lags)) or n_steps % 2:
        raise GridMismatchError("lags and T/2 must be multiples of the time step")
    table = KernelTable(model.lam_beta, model.alpha, tau, n_steps)
    base = n_steps // 2

    def batch(indices: range):
        started = time.perf_counter()
        paths = [sample_path(model.n_modes, n_steps, tau, model.hurst, seed, i) for i in indices]
        trajs = solve_regularized_batch(model, paths, table=table, max_steps=n_steps)
        out = np.empty((len(paths), len(lags)))
        for i, traj in enumerate(trajs):
            for j, off in enumerate(offsets):
                out[i, j] = float(hs_norm(traj.coeffs[base + off] - traj.coeffs[base], 0.0, model.domain_len) ** 2)
        return out, np.full(len(lags), (time.perf_counter() - started) / len(lags))

    mc = run_monte_carlo(n_samples, len(lags), batch, threads=threads, batch_size=batch_size, label="holder")
    return _ladder_report(
        "holder", lags, mc, extras={"theta": theta, "target_rate": 2.0 * model.alpha - 2.0}
    )


@dataclass
class StabilityResult:
    """Measured decay constants of T and S over a (lambda^beta, nu) grid."""
    constants_T: Dict[Tuple[float, float], float]
    constants_S: Dict[Tuple[float, float], float]
    envelope_ok: Dict[Tuple[float, float], bool]
    bound: float

    @property
    def passed(self) -> bool:
        return (
            all(self.envelope_ok.values())
            and max(self.constants_T.values()) <= self.bound
            and max(self.constants_S.values()) <= self.bound
        )

    def to_frame(self, study: str = "stability") -> pd.DataFrame:
        rows = [
            {"study": study, "lam_beta": lam, "nu": nu, "C_T": self.constants_T[(lam, nu)],
             "C_S": self.constants_S[(lam, nu)], "envelope_ok": int(self.envelope_ok[(lam, nu)])}
            for (lam, nu) in sorted(self.constants_T)
        ]
        return pd.DataFrame(rows)


def stability_probe(
    alpha: float,
    lam_betas: Sequence[float] = (1.0, 1e2, 1e4),
    nus: Sequence[float] = (0.0, 1.0, 5.0),
    t_grid: Optional[np.ndarray] = None,
    bound: Optional[float] = None,
) -> StabilityResult:
    """
    Measure max_t |T| e^{nu t}(1 + lam t^a)/(1 + nu t) and max_t |S| e^{nu t} t^{1-a}(1 + lam t^a),
    and check that |T| e^{nu t}/(1 + nu t) never exceeds its initial value 1.
    """
    t = np.geomspace(1e-3, 10.0, 200) if t_grid is None else np.asarray(t_grid, dtype=float)
    bound = settings.STABILITY_BOUND if bound is None else bound
    c_t, c_s, env = {}, {}, {}
    for lam in lam_betas:
        z = -lam * t ** alpha
        e1 = ml_array(alpha, 1.0, z)
        e2 = ml_array(alpha, 2.0, z)
        ea = ml_array(alpha, alpha, z)
        for nu in nus:
            # e^{nu t} T(t) = E_{a,1} + nu t E_{a,2}
            scaled_t = np.abs(e1 + nu * t * e2) / (1.0 + nu * t)
            c_t[(lam, nu)] = float(np.max(scaled_t * (1.0 + lam * t ** alpha)))
            c_s[(lam, nu)] = float(np.max(np.abs(ea) * (1.0 + lam * t ** alpha)))
            env[(lam, nu)] = bool(np.all(np.maximum.accumulate(scaled_t) <= 1.0 + 1e-9))
    return StabilityResult(c_t, c_s, env, bound)


@dataclass
class RegularityResult:
    """sup_t E||u||^2 and sup_t E||du/dt||^2 in the norms of the regularity bound, per gamma~ candidate."""
    gamma_tilde: Tuple[float, float]
    sup_solution: Tuple[float, float]
    sup_derivative: Tuple[float, float]
    n_samples: int


def regularity_probe(
    model: ModelSpec,
    tau: float,
    n_samples: int,
    seed: int,
    *,
    threads: int = 1,
    batch_size: Optional[int] = None,
) -> RegularityResult:
    """
    Monte-Carlo estimates of sup_t E||u_n(t)||^2_{H^{2g}} and sup_t E||du_n/dt||^2_{H^{2g - 2beta/alpha}}
    for both candidate indices g.
    """
    n_steps = int(round(model.horizon / tau))
    table = KernelTable(model.lam_beta, model.alpha, tau, n_steps)
    candidates = model.gamma_tilde_candidates()
    exponents = [2 * g for g in candidates] + [2 * g - 2 * model.beta / model.alpha for g in candidates]
    width = n_steps + 1

    def batch(indices: range):
        started = time.perf_counter()
        paths = [sample_path(model.n_modes, n_steps, tau, model.hurst, seed, i) for i in indices]
        trajs = solve_regularized_batch(model, paths, table=table, max_steps=n_steps)
        out = np.empty((len(paths), 4 * width))
        for i, traj in enumerate(trajs):
            deriv = time_derivative(traj).coeffs
            for j, e in enumerate(exponents):
                data = traj.coeffs if j < 2 else deriv
                out[i, j * width:(j + 1) * width] = hs_norm(data, e, model.domain_len) ** 2
        return out, np.full(4 * width, (time.perf_counter() - started) / (4 * width))

    mc = run_monte_carlo(n_samples, 4 * width, batch, threads=threads, batch_size=batch_size, label="regularity")
    means = np.mean(mc.values, axis=0).reshape(4, width)
    sups = means.max(axis=1)
    return RegularityResult(
        candidates, (float(sups[0]), float(sups[1])), (float(sups[2]), float(sups[3])), mc.n_samples
    )


def crn_pilot(model: ModelSpec, tau: float, ref_tau: float, n_samples: int, seed: int) -> Tuple[float, float]:
    """
    Variance of the per-sample squared error with paired paths and with an
    independent candidate path, on a small pilot.
    """
    n_ref = _dyadic_steps(model.horizon, ref_tau)
    factor = n_ref // _dyadic_steps(model.horizon, tau)
    table = KernelTable(model.lam_beta, model.alpha, ref_tau, n_ref)
    coarse_table = table.coarsen(factor)
    indices = range(n_samples)
    paths = [sample_path(model.n_modes, n_ref, ref_tau, model.hurst, seed, i) for i in indices]
    other = [sample_path(model.n_modes, n_ref, ref_tau, model.hurst, seed + 1, i) for i in indices]
    refs = solve_regularized_batch(model, paths, table=table, exact_coefficients=True)
    paired = solve_regularized_batch(model, [coarsen(p, factor) for p in paths], table=coarse_table)
    independent = solve_regularized_batch(model, [coarsen(p, factor) for p in other], table=coarse_table)
    var_paired = float(np.var(squared_errors(list(zip(refs, paired)), 0.0, model.horizon), ddof=1))
    var_indep = float(np.var(squared_errors(list(zip(refs, independent)), 0.0, model.horizon), ddof=1))
    return var_paired, var_indep
