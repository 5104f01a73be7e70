"""
Mild-solution kernels per spectral mode.

With z = -lambda^beta t^alpha:
    T(t) = e^{-nu t} (E_{a,1}(z) + nu t E_{a,2}(z))
    R(t) = t e^{-nu t} E_{a,2}(z)
    S(t) = t^{a-1} e^{-nu t} E_{a,a}(z)

The solver integrates the untempered S exactly over each subinterval through
G(t) = t^a E_{a,a+1}(-lambda^beta t^a), an antiderivative of t^{a-1} E_{a,a}.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ModelValidationError
from .special import MlfParams, ml, ml_array

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModeKernelCtx:
    """Per-mode kernel factors: lam_beta = lambda_k^beta, alpha, nu."""
    lam_beta: float
    alpha: float
    nu: float = 0.0

    def __post_init__(self):
        if self.lam_beta < 0:
            raise ModelValidationError(f"lam_beta >= 0 (got {self.lam_beta})")
        if not 0 < self.alpha <= 2:
            raise ModelValidationError(f"0 < alpha <= 2 (got {self.alpha})")
        if self.nu < 0:
            raise ModelValidationError(f"nu >= 0 (got {self.nu})")

    def _e(self, beta_ml: float, t: float) -> float:
        return ml(MlfParams(self.alpha, beta_ml), -self.lam_beta * t ** self.alpha)


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0:
        raise ValueError(f"kernel time must be >= 0, got {t}")
    return t


def eval_T(ctx: ModeKernelCtx, t: float) -> float:
    """Fundamental solution T(t) = e^{-nu t}(E_{a,1} + nu t E_{a,2})."""
    t = _check_time(t)
    return math.exp(-ctx.nu * t) * (ctx._e(1.0, t) + ctx.nu * t * ctx._e(2.0, t))


def eval_R(ctx: ModeKernelCtx, t: float) -> float:
    """R(t) = t e^{-nu t} E_{a,2}."""
    t = _check_time(t)
    return t * math.exp(-ctx.nu * t) * ctx._e(2.0, t)


def eval_S(ctx: ModeKernelCtx, t: float) -> float:
    """S(t) = t^{a-1} e^{-nu t} E_{a,a}; S(0) = 0 for alpha > 1."""
    t = _check_time(t)
    if t == 0.0:
        return 0.0
    return t ** (ctx.alpha - 1.0) * math.exp(-ctx.nu * t) * ctx._e(ctx.alpha, t)


def eval_dT(ctx: ModeKernelCtx, t: float) -> float:
    """Time derivative of T."""
    t = _check_time(t)
    if t == 0.0:
        raise ValueError("dT is evaluated for t > 0")
    e1 = ctx._e(1.0, t)
    e2 = ctx._e(2.0, t)
    ea = ctx._e(ctx.alpha, t)
    damp = math.exp(-ctx.nu * t)
    return -ctx.nu * damp * (e1 + ctx.nu * t * e2) + damp * (-ctx.lam_beta * t ** (ctx.alpha - 1.0) * ea + ctx.nu * e1)


def antiderivative_G(ctx: ModeKernelCtx, t: float) -> float:
    """G(t) = t^a E_{a,a+1}(-lambda^beta t^a)."""
    t = _check_time(t)
    if t == 0.0:
        return 0.0
    return t ** ctx.alpha * ctx._e(ctx.alpha + 1.0, t)


def conv_weight(ctx: ModeKernelCtx, t_right: float, t_left: float) -> float:
    """
    Exact integral of s^{a-1} E_{a,a}(-lambda^beta s^a) over [t_left, t_right].

    Weights are untempered; the solver works in the conjugated variable.
    """
    if ctx.nu != 0.0:
        raise ModelValidationError("conv_weight uses an untempered context (nu = 0)")
    if not 0.0 <= t_left <= t_right:
        raise ValueError(f"need 0 <= t_left <= t_right, got [{t_left}, {t_right}]")
    if t_left == t_right:
        return 0.0
    return antiderivative_G(ctx, t_right) - antiderivative_G(ctx, t_left)


class KernelTable:
    """
    Memoised kernel values on the (lag, mode) lattice t_j = j tau, j = 0..N.

    Attributes:
        e1: E_{a,1}(-lambda^beta t_j^a), shape (N+1, K)
        e2: E_{a,2}(-lambda^beta t_j^a), shape (N+1, K)
        g: G(t_j), shape (N+1, K)
        weights: W[j] = G(t_{j+1}) - G(t_j), shape (N, K)
    """

    def __init__(
        self,
        lam_beta: np.ndarray,
        alpha: float,
        tau: float,
        n_steps: int,
        *,
        tol: Optional[float] = None,
        _values: Optional[tuple] = None,
    ):
        self.lam_beta = np.asarray(lam_beta, dtype=float)
        self.alpha = float(alpha)
        self.tau = float(tau)
        self.n_steps = int(n_steps)
        if _values is not None:
            self.e1, self.e2, self.g = _values
        else:
            started = time.perf_counter()
            t = self.tau * np.arange(self.n_steps + 1)
            t_alpha = t ** self.alpha
            z = -t_alpha[:, None] * self.lam_beta[None, :]
            self.e1 = ml_array(self.alpha, 1.0, z, tol)
            self.e2 = ml_array(self.alpha, 2.0, z, tol)
            self.g = t_alpha[:, None] * ml_array(self.alpha, self.alpha + 1.0, z, tol)
            logger.debug(
                f"kernel table K={self.lam_beta.size} N={self.n_steps} built in "
                f"{time.perf_counter() - started:.2f}s"
            )
        self.weights = np.diff(self.g, axis=0)
        for arr in (self.e1, self.e2, self.g, self.weights):
            arr.setflags(write=False)

    @property
    def t_grid(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)

    def coarsen(self, factor: int) -> "KernelTable":
        """Table for step factor * tau, read off the fine lattice."""
        if factor < 1 or self.n_steps % factor != 0:
            raise ModelValidationError(f"factor {factor} divides N={self.n_steps}")
        if factor == 1:
            return self
        values = (
            np.array(self.e1[::factor]),
            np.array(self.e2[::factor]),
            np.array(self.g[::factor]),
        )
        return KernelTable(self.lam_beta, self.alpha, self.tau * factor, self.n_steps // factor, _values=values)

    def homogeneous(self, init_a: np.ndarray, init_b: np.ndarray, nu: float) -> np.ndarray:
        """Conjugated homogeneous part a E_{a,1} + (nu a + b) t E_{a,2}, shape (N+1, K)."""
        t = self.t_grid[:, None]
        return init_a[None, :] * self.e1 + (nu * init_a + init_b)[None, :] * t * self.e2
