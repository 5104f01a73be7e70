"""
Special functions: Gamma and the two-parameter Mittag-Leffler function.

E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha*k + beta) is evaluated on the real
line with a certified relative accuracy. Arguments are expected to be real and,
for the solver, non-positive (z = -lambda^beta * t^alpha).

Evaluation routes for z < 0:
    1. Taylor series when the cancellation loss stays below tol.
    2. Real-axis asymptotic series with smallest-term truncation, plus the
       closed-form contribution of the two complex poles (1 < alpha <= 2).
    3. Adaptive quadrature of the branch-cut integral plus the pole part.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate, special as sp

from app.core.config import settings

from .errors import GammaOverflowError, GammaPoleError, MittagLefflerConvergenceError, ModelValidationError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_GAMMA_MAX = 171.6
_RHO_MAX = 80.0


def _is_pole(x: float) -> bool:
    return x <= 0.0 and float(x).is_integer()


def gamma(x: float) -> float:
    """
    Gamma function with explicit pole and overflow signalling.

    Args:
        x: Finite real argument, not a non-positive integer

    Returns:
        Gamma(x)

    Raises:
        GammaPoleError: x in {0, -1, -2, ...}
        GammaOverflowError: x > 171.6
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma argument must be finite, got {x}")
    if _is_pole(x):
        raise GammaPoleError(f"Gamma has a pole at x={x:g}")
    if x > _GAMMA_MAX:
        raise GammaOverflowError(f"Gamma({x:g}) overflows double precision")
    return float(sp.gamma(x))


@dataclass(frozen=True)
class MlfParams:
    """
    Parameters of E_{alpha,beta}.

    Attributes:
        alpha: First parameter, 0 < alpha <= 2
        beta_ml: Second parameter (any real)
        tol: Relative accuracy target
    """
    alpha: float
    beta_ml: float
    tol: float = field(default_factory=lambda: settings.ML_TOL)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ModelValidationError(f"0 < alpha <= 2 (got alpha={self.alpha})")
        if not self.tol > 0.0:
            raise ModelValidationError(f"tol > 0 (got tol={self.tol})")


# ---------------------------------------------------------------------------
# Taylor series
# ---------------------------------------------------------------------------

def _series_terms(alpha: float, beta: float, z: float, k: np.ndarray) -> np.ndarray:
    x = alpha * k + beta
    out = np.zeros_like(x)
    small = x <= 150.0
    with np.errstate(over="ignore", invalid="ignore"):
        out[small] = np.power(z, k[small]) * sp.rgamma(x[small])
        big = ~small
        if np.any(big):
            # x > 150 is positive, so gammaln is the true log-magnitude
            logmag = k[big] * math.log(abs(z)) - sp.gammaln(x[big])
            sign = np.where((z < 0) & (k[big] % 2 == 1), -1.0, 1.0)
            out[big] = sign * np.exp(logmag)
    out[~np.isfinite(out)] = np.inf
    return out


def _ml_series(alpha: float, beta: float, z: float, max_terms: int) -> Tuple[float, float]:
    """Sum the Taylor series; returns (value, absolute error estimate)."""
    chunk = 32
    collected = []
    max_abs = 0.0
    start = 0
    while start < max_terms:
        k = np.arange(start, start + chunk, dtype=float)
        terms = _series_terms(alpha, beta, z, k)
        if not np.all(np.isfinite(terms)):
            return math.nan, math.inf
        collected.extend(terms.tolist())
        mags = np.abs(terms)
        max_abs = max(max_abs, float(mags.max()))
        partial = math.fsum(collected)
        decreasing = np.all(np.diff(mags[mags > 0]) <= 0) if np.count_nonzero(mags) > 1 else True
        if decreasing and mags[-1] <= 0.01 * _EPS * max(abs(partial), 1e-300):
            tail = float(mags[-1])
            return partial, 4.0 * _EPS * max_abs + tail
        start += chunk
    return math.fsum(collected), math.inf


# ---------------------------------------------------------------------------
# Negative real axis: pole contribution, asymptotic series, branch-cut integral
# ---------------------------------------------------------------------------

def _pole_part(alpha: float, beta: float, x: float) -> float:
    """Contribution of the poles s = x^{1/alpha} e^{+-i pi/alpha}, present for 1 < alpha <= 2."""
    if alpha <= 1.0:
        return 0.0
    r = x ** (1.0 / alpha)
    phase = r * math.sin(math.pi / alpha) + math.pi * (1.0 - beta) / alpha
    return (2.0 / alpha) * x ** ((1.0 - beta) / alpha) * math.exp(r * math.cos(math.pi / alpha)) * math.cos(phase)


def _ml_asymptotic(alpha: float, beta: float, x: float, n_terms: int) -> Tuple[float, float]:
    """-sum_k (-x)^{-k}/Gamma(beta - alpha k), truncated before the smallest nonzero term."""
    k = np.arange(1, n_terms + 1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = -np.power(-x, -k) * sp.rgamma(beta - alpha * k)
    mags = np.abs(terms)
    nonzero = np.isfinite(mags) & (mags > 0)
    if not np.any(nonzero):
        return 0.0, 0.0
    candidates = np.where(nonzero, mags, np.inf)
    k_star = int(np.argmin(candidates))
    value = math.fsum(terms[:k_star].tolist())
    return value, float(mags[k_star])


def _cut_integrand(alpha: float, beta: float, x: float):
    s1 = math.sin(math.pi * beta)
    s2 = math.sin(math.pi * (beta - alpha))
    c = math.cos(math.pi * alpha)

    def f(rho: float) -> float:
        ra = rho ** alpha
        return math.exp(-rho) * (ra * s1 + x * s2) / (ra * ra + 2.0 * x * ra * c + x * x) / math.pi

    return f


def _ml_integral(alpha: float, beta: float, x: float, tol: float) -> Tuple[float, float, float]:
    """Branch-cut integral for E_{alpha,beta}(-x), beta < alpha + 1; returns (value, err, magnitude)."""
    f = _cut_integrand(alpha, beta, x)
    opts = dict(epsabs=0.0, epsrel=max(tol, 50 * _EPS), limit=400)
    pieces = []
    head, head_err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(alpha - beta, 0.0), **opts)
    pieces.append((head, head_err))

    def g(rho: float) -> float:
        return rho ** (alpha - beta) * f(rho)

    breaks = [1.0]
    c = math.cos(math.pi * alpha)
    if c < 0.0:
        peak = (-x * c) ** (1.0 / alpha)
        if 1.0 < peak < _RHO_MAX:
            breaks.append(peak)
    breaks.append(max(_RHO_MAX, breaks[-1] + _RHO_MAX))
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, err = integrate.quad(g, lo, hi, **opts)
        pieces.append((val, err))
    value = math.fsum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    magnitude = sum(abs(p[0]) for p in pieces)
    return value, err, magnitude


def _ml_alpha_one(beta: float, z: float, tol: float) -> Tuple[float, float]:
    """E_{1,beta}(z) for z < 0 from the Euler-type integral."""
    if beta == 1.0:
        return math.exp(z), 0.0
    if beta > 1.0:
        opts = dict(epsabs=0.0, epsrel=max(tol, 50 * _EPS), limit=200)
        val, err = integrate.quad(lambda t: math.exp(z * t), 0.0, 1.0, weight="alg", wvar=(0.0, beta - 2.0), **opts)
        scale = float(sp.rgamma(beta - 1.0))
        return scale * val, abs(scale) * err
    upper, upper_err = _ml_alpha_one(beta + 1.0, z, tol)
    return float(sp.rgamma(beta)) + z * upper, abs(z) * upper_err


def _ml_negative(alpha: float, beta: float, z: float, tol: float) -> float:
    x = -z
    radius = settings.ML_SERIES_RADIUS
    slack = settings.ML_CERT_SLACK

    if x <= radius:
        value, err = _ml_series(alpha, beta, z, settings.ML_MAX_TERMS)
        if err <= tol * abs(value):
            return value

    if alpha == 1.0:
        value, err = _ml_alpha_one(beta, z, tol)
        if err > slack * tol * max(abs(value), 1e-300):
            raise MittagLefflerConvergenceError(f"E_(1,{beta:g})({z:g}) not certified", err / max(abs(value), 1e-300))
        return value

    pole = _pole_part(alpha, beta, x)
    if x > radius:
        asym, err = _ml_asymptotic(alpha, beta, x, settings.ML_ASYMPTOTIC_TERMS)
        value = pole + asym
        if err <= tol * abs(value):
            return value
        if x <= 40.0:
            value, err = _ml_series(alpha, beta, z, settings.ML_MAX_TERMS)
            if err <= tol * abs(value):
                return value

    if beta >= alpha + 1.0:
        # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        lower = _ml_negative(alpha, beta - alpha, z, tol)
        return (lower - float(sp.rgamma(beta - alpha))) / z

    integral, err, magnitude = _ml_integral(alpha, beta, x, tol)
    value = pole + integral
    reference = abs(pole) + magnitude
    if err > slack * tol * reference:
        raise MittagLefflerConvergenceError(
            f"E_({alpha:g},{beta:g})({z:g}) not certified by quadrature", err / max(reference, 1e-300)
        )
    return value


def ml(params: MlfParams, z: float) -> float:
    """
    Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for real z.

    Args:
        params: Function parameters and accuracy target
        z: Real argument; z <= 0, or 0 < z <= settings.ML_POSITIVE_MAX

    Returns:
        E_{alpha,beta}(z) to relative accuracy params.tol

    Raises:
        ModelValidationError: z exceeds settings.ML_POSITIVE_MAX
        MittagLefflerConvergenceError: no evaluation route certifies params.tol
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"Mittag-Leffler argument must be finite, got {z}")
    alpha, beta = float(params.alpha), float(params.beta_ml)
    if z == 0.0:
        return float(sp.rgamma(beta))
    if alpha == 1.0 and beta == 1.0:
        return math.exp(z)
    if z > 0.0:
        if z > settings.ML_POSITIVE_MAX:
            raise ModelValidationError(
                f"Mittag-Leffler argument {z:g} exceeds the positive limit {settings.ML_POSITIVE_MAX:g}"
            )
        value, err = _ml_series(alpha, beta, z, settings.ML_MAX_TERMS)
        if not math.isfinite(value):
            raise MittagLefflerConvergenceError(f"E_({alpha:g},{beta:g})({z:g}) overflows", math.inf)
        if err > params.tol * abs(value):
            raise MittagLefflerConvergenceError(
                f"E_({alpha:g},{beta:g})({z:g}) series not certified", err / max(abs(value), 1e-300)
            )
        return value
    return _ml_negative(alpha, beta, z, params.tol)


def ml_array(alpha: float, beta_ml: float, z: ArrayLike, tol: Optional[float] = None) -> np.ndarray:
    """Vectorised E_{alpha,beta} over an array of real arguments; repeated arguments are evaluated once."""
    params = MlfParams(alpha=alpha, beta_ml=beta_ml, tol=tol if tol is not None else settings.ML_TOL)
    z = np.asarray(z, dtype=float)
    unique, inverse = np.unique(z.ravel(), return_inverse=True)
    values = np.fromiter((ml(params, zz) for zz in unique), dtype=float, count=unique.size)
    return values[inverse].reshape(z.shape)


def decay_constant(params: MlfParams, z_grid: ArrayLike) -> float:
    """Measured constant C with |E_{alpha,beta}(z)| <= C / (1 + |z|) on a non-positive grid."""
    z_grid = np.asarray(z_grid, dtype=float)
    if np.any(z_grid > 0):
        raise ValueError("decay constant is measured on z <= 0")
    values = ml_array(params.alpha, params.beta_ml, z_grid, params.tol)
    return float(np.max(np.abs(values) * (1.0 + np.abs(z_grid))))
