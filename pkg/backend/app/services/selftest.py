import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
import pandas as pd
from scipy import special as sp

from tfwave_core.calculus import TimeSeries, caputo, frac_integral
from tfwave_core.special import MlfParams, decay_constant, gamma, ml_array

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """단일 점검 결과"""
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


@dataclass
class SelftestResult:
    """자체 점검 스위트 결과"""
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"check": c.name, "error": c.error, "tolerance": c.tolerance, "passed": int(c.passed)}
             for c in self.checks],
            columns=["check", "error", "tolerance", "passed"],
        )


# 점검별 허용 오차
GAMMA_TOL = 1e-13
ML_EXPONENTIAL_TOL = 1e-12
ML_COSINE_TOL = 1e-10
ML_IDENTITY_TOL = 1e-6
# |E_{1.8,b}(z)| (1 + |z|) 의 상한; 극 기여의 최댓값이 약 12
ML_DECAY_PRODUCT_BOUND = 20.0
FRAC_INTEGRAL_TOL = 1e-12
CAPUTO_LINEAR_TOL = 1e-9
# 2차 정확도 (tau = 1/512 에서 약 1.6e-6)
CAPUTO_QUADRATIC_TOL = 1e-5
# tau = 1/1024 에서 약 4.2e-7
CAPUTO_EIGENRELATION_TOL = 2e-6


def _relative_error(measured: np.ndarray, expected: np.ndarray) -> float:
    """최대 상대 오차"""
    return float(np.max(np.abs(measured - expected) / np.abs(expected)))


def _central_derivative(f: Callable[[np.ndarray], np.ndarray], t: np.ndarray, step: float = 2e-3) -> np.ndarray:
    """4차 중심 차분"""
    return (f(t - 2 * step) - 8 * f(t - step) + 8 * f(t + step) - f(t + 2 * step)) / (12 * step)


def _check_gamma() -> float:
    expected = {1.0: 1.0, 0.5: math.sqrt(math.pi), 5.0: 24.0, -0.5: -2.0 * math.sqrt(math.pi)}
    return max(abs(gamma(x) - v) / abs(v) for x, v in expected.items())


def _check_exponential() -> float:
    x = np.linspace(-10.0, 5.0, 61)
    return float(np.max(np.abs(ml_array(1.0, 1.0, x) - np.exp(x)) / np.exp(x)))


def _check_cosine() -> float:
    x = np.linspace(0.0, 6.0, 61)
    return float(np.max(np.abs(ml_array(2.0, 1.0, -x * x) - np.cos(x))))


def _check_derivative_identity(alpha: float = 1.8) -> float:
    """d/dt E_{a,1}(-lam t^a) = -lam t^{a-1} E_{a,a}(-lam t^a)"""
    t = np.linspace(0.1, 5.0, 25)
    worst = 0.0
    for lam in (1.0, 10.0):
        f = lambda s: ml_array(alpha, 1.0, -lam * s ** alpha)
        fd = _central_derivative(f, t)
        exact = -lam * t ** (alpha - 1.0) * ml_array(alpha, alpha, -lam * t ** alpha)
        worst = max(worst, _relative_error(fd, exact))
    return worst


def _check_integral_identity(alpha: float = 1.8) -> float:
    """d/dt [t E_{a,2}(-lam t^a)] = E_{a,1}(-lam t^a)"""
    t = np.linspace(0.1, 5.0, 25)
    worst = 0.0
    for lam in (1.0, 10.0):
        f = lambda s: s * ml_array(alpha, 2.0, -lam * s ** alpha)
        fd = _central_derivative(f, t)
        exact = ml_array(alpha, 1.0, -lam * t ** alpha)
        worst = max(worst, _relative_error(fd, exact))
    return worst


def _check_decay() -> float:
    z = -np.geomspace(1e-3, 1e3, 121)
    return max(decay_constant(MlfParams(1.8, b), z) for b in (1.0, 1.8, 2.0, 2.8))


def _check_frac_integral() -> float:
    tau = 1.0 / 512
    series = TimeSeries.uniform(tau, 512, tau * np.arange(513))
    value = frac_integral(series, 1.8).values[-1]
    return abs(value - float(sp.rgamma(3.8))) * sp.gamma(3.8)


def _check_caputo_quadratic() -> float:
    tau = 1.0 / 512
    t = tau * np.arange(513)
    derivative = caputo(TimeSeries(t, t * t), 1.8).values
    exact = 2.0 * t ** 0.2 / sp.gamma(1.2)
    mask = t >= 0.25
    return float(np.max(np.abs(derivative[mask] - exact[mask]) / exact[mask]))


def _check_caputo_linear() -> float:
    t = np.linspace(0.0, 1.0, 65)
    return float(np.max(np.abs(caputo(TimeSeries(t, 3.0 * t + 1.0), 1.5).values)))


def _check_eigenrelation() -> float:
    """caputo of E_{1.8,1}(-t^{1.8}) at t=1 equals -E_{1.8,1}(-1)"""
    tau = 1.0 / 1024
    t = tau * np.arange(1025)
    u = ml_array(1.8, 1.0, -t ** 1.8)
    value = caputo(TimeSeries(t, u), 1.8, initial_slope=0.0).values[-1]
    return abs(value + u[-1]) / abs(u[-1])


CHECKS: List[tuple] = [
    ("gamma_values", _check_gamma, GAMMA_TOL),
    ("ml_exponential", _check_exponential, ML_EXPONENTIAL_TOL),
    ("ml_cosine", _check_cosine, ML_COSINE_TOL),
    ("ml_derivative_identity", _check_derivative_identity, ML_IDENTITY_TOL),
    ("ml_integral_identity", _check_integral_identity, ML_IDENTITY_TOL),
    ("ml_decay_constant", _check_decay, ML_DECAY_PRODUCT_BOUND),
    ("frac_integral_linear", _check_frac_integral, FRAC_INTEGRAL_TOL),
    ("caputo_linear", _check_caputo_linear, CAPUTO_LINEAR_TOL),
    ("caputo_quadratic", _check_caputo_quadratic, CAPUTO_QUADRATIC_TOL),
    ("caputo_eigenrelation", _check_eigenrelation, CAPUTO_EIGENRELATION_TOL),
]


def run_selftest() -> SelftestResult:
    """Mittag-Leffler 및 분수 미적분 불변식 점검 실행"""
    result = SelftestResult()
    for name, check, tol in CHECKS:
        try:
            error = float(check())
        except Exception as e:
            logger.error(f"점검 {name} 실행 실패: {e}")
            error = math.inf
        outcome = CheckResult(name, error, tol)
        logger.info(f"점검 {name}: error={error:.3e} tol={tol:.1e} {'통과' if outcome.passed else '실패'}")
        result.checks.append(outcome)
    return result
