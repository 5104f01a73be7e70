#!/usr/bin/env python3
"""
Gamma and Mittag-Leffler tests.

mpmath serves as the high-precision oracle for E_{alpha,beta}.
"""

import math
import os
import sys

import mpmath
import numpy as np
import pytest

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.core.config import settings
from tfwave_core.errors import (
    GammaOverflowError,
    GammaPoleError,
    MittagLefflerConvergenceError,
    ModelValidationError,
)
from tfwave_core.special import MlfParams, decay_constant, gamma, ml, ml_array


def mp_ml(alpha, beta, z, terms=400):
    """Direct series at 60 digits; fine for |z| <= 20 with alpha >= 1."""
    with mpmath.workdps(60):
        z = mpmath.mpf(z)
        total = mpmath.mpf(0)
        for k in range(terms):
            total += z ** k * mpmath.rgamma(alpha * k + beta)
        return float(total)


def fourth_order_derivative(f, t, step=2e-3):
    return (f(t - 2 * step) - 8 * f(t - step) + 8 * f(t + step) - f(t + 2 * step)) / (12 * step)


class TestGamma:
    @pytest.mark.parametrize("x, expected", [
        (1.0, 1.0),
        (0.5, 1.7724538509055160),
        (5.0, 24.0),
        (-0.5, -3.5449077018110318),
    ])
    def test_known_values(self, x, expected):
        assert gamma(x) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
    def test_poles(self, x):
        with pytest.raises(GammaPoleError):
            gamma(x)

    def test_overflow(self):
        with pytest.raises(GammaOverflowError):
            gamma(172.0)

    def test_matches_mpmath_on_range(self):
        for x in np.linspace(-49.7, 170.3, 37):
            assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)


class TestMittagLeffler:
    def test_exponential(self):
        assert ml(MlfParams(1.0, 1.0), 1.0) == pytest.approx(math.e, rel=1e-15)

    def test_zero_argument(self):
        assert ml(MlfParams(1.8, 1.8), 0.0) == pytest.approx(1.0744548, rel=1e-7)
        assert ml(MlfParams(1.8, 1.8), 0.0) == pytest.approx(1.0 / math.gamma(1.8), rel=1e-15)

    def test_cosine(self):
        assert ml(MlfParams(2.0, 1.0), -4.0) == pytest.approx(math.cos(2.0), abs=1e-12)

    def test_against_series_oracle(self):
        assert ml(MlfParams(1.8, 1.8), -5.0) == pytest.approx(mp_ml(1.8, 1.8, -5.0), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("alpha, beta", [(1.8, 1.0), (1.8, 2.0), (1.8, 1.8), (1.6, 2.6), (1.95, 1.0)])
    def test_small_arguments_match_short_series(self, alpha, beta):
        for z in np.linspace(-1.0, 1.0, 11):
            expected = mp_ml(alpha, beta, z, terms=60)
            assert ml(MlfParams(alpha, beta), z) == pytest.approx(expected, rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("z", [-6.0, -12.0, -20.0])
    def test_moderate_negative_arguments(self, z):
        for beta in (1.0, 2.0, 1.8, 2.8):
            expected = mp_ml(1.8, beta, z)
            # relative accuracy is measured against the largest term near sign changes
            assert abs(ml(MlfParams(1.8, beta), z) - expected) <= 1e-10 * max(abs(expected), 1e-3)

    @pytest.mark.parametrize("z", [3.0, 12.0, 20.0])
    def test_positive_arguments(self, z):
        for beta in (1.0, 1.8, 2.0):
            expected = mp_ml(1.8, beta, z)
            assert ml(MlfParams(1.8, beta), z) == pytest.approx(expected, rel=1e-12)

    def test_positive_argument_limit(self, monkeypatch):
        assert math.isfinite(ml(MlfParams(1.8, 1.0), settings.ML_POSITIVE_MAX))
        with pytest.raises(ModelValidationError):
            ml(MlfParams(1.8, 1.0), settings.ML_POSITIVE_MAX + 1.0)
        monkeypatch.setattr(settings, "ML_POSITIVE_MAX", 2.0)
        with pytest.raises(ModelValidationError):
            ml(MlfParams(1.8, 1.0), 3.0)

    def test_positive_series_must_certify(self):
        with pytest.raises(MittagLefflerConvergenceError) as info:
            ml(MlfParams(1.8, 1.0, tol=1e-18), 3.0)
        assert info.value.achieved_error > 1e-18
        with pytest.raises(MittagLefflerConvergenceError):
            ml(MlfParams(0.1, 1.0), 40.0)

    def test_large_negative_argument_decays(self):
        for z in (-1e4, -1e5):
            value = ml(MlfParams(1.8, 1.0), z)
            # leading asymptotic term -1/(z Gamma(1 - alpha))
            leading = -1.0 / (z * math.gamma(1.0 - 1.8))
            assert value == pytest.approx(leading, rel=5e-2)

    def test_exponential_range(self):
        x = np.linspace(-10.0, 5.0, 31)
        assert np.allclose(ml_array(1.0, 1.0, x), np.exp(x), rtol=1e-12, atol=0.0)

    def test_cosine_range(self):
        x = np.linspace(0.0, 6.0, 31)
        assert np.max(np.abs(ml_array(2.0, 1.0, -x * x) - np.cos(x))) < 1e-10

    def test_array_preserves_shape_and_repeats(self):
        z = np.array([[0.0, -1.0], [-1.0, -2.0]])
        out = ml_array(1.8, 2.0, z)
        assert out.shape == (2, 2)
        assert out[0, 1] == out[1, 0]

    def test_invalid_parameters(self):
        with pytest.raises(ModelValidationError):
            MlfParams(0.0, 1.0)
        with pytest.raises(ModelValidationError):
            MlfParams(1.5, 1.0, tol=0.0)


class TestIdentities:
    @pytest.mark.parametrize("lam", [1.0, 10.0])
    def test_derivative_identity(self, lam):
        alpha = 1.8
        t = np.linspace(0.1, 5.0, 15)
        f = lambda s: ml_array(alpha, 1.0, -lam * s ** alpha)
        fd = fourth_order_derivative(f, t)
        exact = -lam * t ** (alpha - 1) * ml_array(alpha, alpha, -lam * t ** alpha)
        assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6

    @pytest.mark.parametrize("lam", [1.0, 10.0])
    def test_integral_identity(self, lam):
        alpha = 1.8
        t = np.linspace(0.1, 5.0, 15)
        f = lambda s: s * ml_array(alpha, 2.0, -lam * s ** alpha)
        fd = fourth_order_derivative(f, t)
        exact = ml_array(alpha, 1.0, -lam * t ** alpha)
        assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6

    @pytest.mark.parametrize("beta", [1.0, 1.8, 2.0, 2.8])
    def test_decay_bound(self, beta):
        z = -np.geomspace(1e-3, 1e4, 150)
        constant = decay_constant(MlfParams(1.8, beta), z)
        assert np.isfinite(constant)
        assert constant < 20.0

    def test_decay_constant_rejects_positive_grid(self):
        with pytest.raises(ValueError):
            decay_constant(MlfParams(1.8, 1.0), [1.0])
