"""
Discrete fractional calculus on uniform grids.

Fractional integrals use product-trapezoid integration: the kernel
(t - s)^{alpha-1} is integrated exactly against the piecewise-linear
interpolant of u. Caputo derivatives of order 1 < alpha < 2 are obtained in
Riemann-Liouville form, d^2/dt^2 I^{2-alpha}[u - u(0) - t u'(0)], with
second differences of the product-trapezoid integral.

Tempered operators are conjugations: multiply by e^{nu t}, apply the untempered
operator, multiply by e^{-nu t}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as sp
from scipy.signal import fftconvolve

from .errors import InsufficientPointsError, ModelValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeSeries:
    """
    Samples of u on a uniform grid starting at 0.

    Attributes:
        t_grid: Sample times, t_grid[0] == 0, uniform spacing
        values: Shape (n,) or (n, K); row m holds u(t_m)
    """
    t_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 3:
            raise InsufficientPointsError(f"time series needs at least 3 points, got {t.size}")
        if t[0] != 0.0:
            raise ModelValidationError("t_grid[0] = 0")
        steps = np.diff(t)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ModelValidationError("t_grid uniformly spaced and strictly increasing")
        if v.shape[0] != t.size:
            raise ModelValidationError("one value row per time sample")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)

    @property
    def tau(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @classmethod
    def uniform(cls, tau: float, n_steps: int, values: np.ndarray) -> "TimeSeries":
        return cls(np.arange(n_steps + 1) * tau, values)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.t_grid, values)


def _time_factor(series: TimeSeries, nu: float, sign: float) -> np.ndarray:
    factor = np.exp(sign * nu * series.t_grid)
    return factor if series.values.ndim == 1 else factor[:, None]


def product_trapezoid_weights(alpha: float, n: int):
    """
    Weights of the product-trapezoid rule for I^alpha on n+1 points.

    Returns (w, c): w[k] multiplies u_{m-k} for k < m, c[m] multiplies u_0.
    The rule reads I_m = tau^alpha / Gamma(alpha + 2) * (c[m] u_0 + sum_{j=1}^m w[m-j] u_j).
    """
    k = np.arange(n + 1, dtype=float)
    a1 = alpha + 1.0
    w = np.empty(n + 1)
    w[0] = 1.0
    if n >= 1:
        kk = k[1:]
        w[1:] = (kk + 1.0) ** a1 - 2.0 * kk ** a1 + (kk - 1.0) ** a1
    c = np.zeros(n + 1)
    if n >= 1:
        m = k[1:]
        c[1:] = (m - 1.0) ** a1 - (m - alpha - 1.0) * m ** alpha
    return w, c


def _frac_integral_values(values: np.ndarray, tau: float, alpha: float) -> np.ndarray:
    n = values.shape[0] - 1
    w, c = product_trapezoid_weights(alpha, n)
    rest = values[1:]
    if values.ndim == 1:
        history = fftconvolve(w[:n], rest)[:n]
        c_term = c[1:] * values[0]
    else:
        history = fftconvolve(w[:n, None], rest, axes=0)[:n]
        c_term = c[1:, None] * values[0][None, :]
    out = np.zeros_like(values)
    out[1:] = tau ** alpha * float(sp.rgamma(alpha + 2.0)) * (c_term + history)
    return out


def frac_integral(series: TimeSeries, alpha: float) -> TimeSeries:
    """
    Left fractional integral I^alpha u at every grid point.

    Args:
        series: Samples of u
        alpha: Order, alpha > 0

    Returns:
        TimeSeries of (I^alpha u)(t_m)
    """
    if not alpha > 0:
        raise ModelValidationError(f"alpha > 0 (got {alpha})")
    return series.with_values(_frac_integral_values(series.values, series.tau, alpha))


def tempered_frac_integral(series: TimeSeries, alpha: float, nu: float) -> TimeSeries:
    """Tempered fractional integral e^{-nu t} I^alpha[e^{nu s} u(s)]."""
    if nu < 0:
        raise ModelValidationError(f"nu >= 0 (got {nu})")
    lifted = series.with_values(series.values * _time_factor(series, nu, 1.0))
    integral = frac_integral(lifted, alpha)
    return series.with_values(integral.values * _time_factor(series, nu, -1.0))


def _second_difference(w: np.ndarray, tau: float) -> np.ndarray:
    n = w.shape[0]
    d2 = np.empty_like(w)
    if n == 3:
        centre = w[0] - 2.0 * w[1] + w[2]
        d2[:] = centre
    else:
        d2[1:-1] = w[2:] - 2.0 * w[1:-1] + w[:-2]
        d2[0] = 2.0 * w[0] - 5.0 * w[1] + 4.0 * w[2] - w[3]
        d2[-1] = 2.0 * w[-1] - 5.0 * w[-2] + 4.0 * w[-3] - w[-4]
    return d2 / tau ** 2


def caputo(series: TimeSeries, alpha: float, initial_slope: Optional[np.ndarray] = None) -> TimeSeries:
    """
    Caputo derivative of order 1 < alpha < 2.

    Args:
        series: Samples of u, at least 3 points
        alpha: Order in (1, 2)
        initial_slope: u'(0); estimated by a one-sided 3-point difference when omitted

    Returns:
        TimeSeries of the Caputo derivative at the grid points
    """
    if not 1.0 < alpha < 2.0:
        raise ModelValidationError(f"1 < alpha < 2 (got {alpha})")
    u = series.values
    tau = series.tau
    if initial_slope is None:
        initial_slope = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * tau)
    t = series.t_grid if u.ndim == 1 else series.t_grid[:, None]
    shifted = u - u[0] - t * np.asarray(initial_slope, dtype=float)
    w = _frac_integral_values(shifted, tau, 2.0 - alpha)
    return series.with_values(_second_difference(w, tau))


def tempered_caputo(
    series: TimeSeries, alpha: float, nu: float, initial_slope: Optional[np.ndarray] = None
) -> TimeSeries:
    """Tempered Caputo derivative e^{-nu t} D^alpha[e^{nu s} u(s)]."""
    if nu < 0:
        raise ModelValidationError(f"nu >= 0 (got {nu})")
    lifted = series.with_values(series.values * _time_factor(series, nu, 1.0))
    lifted_slope = None
    if initial_slope is not None:
        lifted_slope = nu * series.values[0] + np.asarray(initial_slope, dtype=float)
    derivative = caputo(lifted, alpha, lifted_slope)
    return series.with_values(derivative.values * _time_factor(series, nu, -1.0))
