#!/usr/bin/env python3
"""
Mild-solution kernel tests.
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import integrate

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from tfwave_core.errors import ModelValidationError
from tfwave_core.kernels import (
    KernelTable,
    ModeKernelCtx,
    antiderivative_G,
    conv_weight,
    eval_dT,
    eval_R,
    eval_S,
    eval_T,
)
from tfwave_core.special import MlfParams, ml

ALPHA = 1.8


def E(beta, z, alpha=ALPHA):
    return ml(MlfParams(alpha, beta), z)


class TestKernelValues:
    def test_T_at_origin(self):
        assert eval_T(ModeKernelCtx(3.0, ALPHA, 2.0), 0.0) == 1.0

    def test_T_untempered(self):
        ctx = ModeKernelCtx(2.0, ALPHA, 0.0)
        assert eval_T(ctx, 0.7) == pytest.approx(E(1.0, -2.0 * 0.7 ** ALPHA), rel=1e-14)

    def test_T_tempered(self):
        ctx = ModeKernelCtx(1.0, ALPHA, 1.0)
        expected = math.exp(-1.0) * (E(1.0, -1.0) + E(2.0, -1.0))
        assert eval_T(ctx, 1.0) == pytest.approx(expected, rel=1e-13)

    def test_R(self):
        ctx = ModeKernelCtx(1.0, ALPHA, 0.0)
        assert eval_R(ctx, 0.0) == 0.0
        assert eval_R(ctx, 1.0) == pytest.approx(E(2.0, -1.0), rel=1e-14)

    def test_R_derivative_is_E1(self):
        ctx = ModeKernelCtx(4.0, ALPHA, 0.0)
        step = 1e-5
        for t in (0.2, 0.8, 1.5):
            fd = (eval_R(ctx, t + step) - eval_R(ctx, t - step)) / (2 * step)
            assert fd == pytest.approx(E(1.0, -4.0 * t ** ALPHA), abs=1e-6)

    def test_S(self):
        assert eval_S(ModeKernelCtx(1.0, ALPHA, 1.0), 0.0) == 0.0
        free = ModeKernelCtx(0.0, ALPHA, 0.0)
        assert eval_S(free, 0.5) == pytest.approx(0.5 ** 0.8 / math.gamma(ALPHA), rel=1e-14)
        ctx = ModeKernelCtx(1.0, ALPHA, 1.0)
        expected = 0.5 ** 0.8 * math.exp(-0.5) * E(ALPHA, -0.5 ** ALPHA)
        assert eval_S(ctx, 0.5) == pytest.approx(expected, rel=1e-13)

    def test_dT_matches_finite_differences(self):
        ctx = ModeKernelCtx(3.0, ALPHA, 0.5)
        step = 1e-4
        t = np.linspace(0.1, 2.0, 9)
        fd = np.array([(eval_T(ctx, s + step) - eval_T(ctx, s - step)) / (2 * step) for s in t])
        exact = np.array([eval_dT(ctx, s) for s in t])
        scale = np.maximum(np.abs(exact), 1e-2 * np.max(np.abs(exact)))
        assert np.max(np.abs(fd - exact) / scale) < 1e-6

    def test_dT_special_cases(self):
        assert eval_dT(ModeKernelCtx(0.0, ALPHA, 0.0), 0.6) == pytest.approx(0.0, abs=1e-15)
        assert eval_dT(ModeKernelCtx(1.0, ALPHA, 0.0), 1.0) == pytest.approx(-E(ALPHA, -1.0), rel=1e-13)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            eval_T(ModeKernelCtx(1.0, ALPHA), -0.1)

    def test_invalid_context(self):
        with pytest.raises(ModelValidationError):
            ModeKernelCtx(-1.0, ALPHA)
        with pytest.raises(ModelValidationError):
            ModeKernelCtx(1.0, ALPHA, -0.5)


class TestConvolutionWeights:
    def test_empty_interval(self):
        assert conv_weight(ModeKernelCtx(1.0, ALPHA), 0.4, 0.4) == 0.0

    def test_free_mode(self):
        ctx = ModeKernelCtx(0.0, ALPHA)
        expected = (0.9 ** ALPHA - 0.3 ** ALPHA) / math.gamma(ALPHA + 1)
        assert conv_weight(ctx, 0.9, 0.3) == pytest.approx(expected, rel=1e-14)

    def test_matches_quadrature(self):
        ctx = ModeKernelCtx(1.0, ALPHA)
        value, _ = integrate.quad(lambda s: eval_S(ctx, s), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        assert conv_weight(ctx, 1.0, 0.0) == pytest.approx(value, abs=1e-10)
        assert conv_weight(ctx, 1.0, 0.0) == pytest.approx(E(ALPHA + 1, -1.0), rel=1e-13)

    def test_telescoping(self):
        ctx = ModeKernelCtx(25.0, ALPHA)
        edges = np.linspace(0.0, 1.3, 14)
        total = sum(conv_weight(ctx, r, l) for l, r in zip(edges[:-1], edges[1:]))
        assert total == pytest.approx(antiderivative_G(ctx, 1.3), rel=1e-12)

    def test_tempered_context_rejected(self):
        with pytest.raises(ModelValidationError):
            conv_weight(ModeKernelCtx(1.0, ALPHA, 1.0), 1.0, 0.0)

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            conv_weight(ModeKernelCtx(1.0, ALPHA), 0.2, 0.5)


class TestStabilityShape:
    @pytest.mark.parametrize("lam", [1.0, 1e2, 1e4])
    def test_decay_products_bounded(self, lam):
        t = np.geomspace(1e-3, 10.0, 60)
        for nu in (0.0, 1.0):
            ctx = ModeKernelCtx(lam, ALPHA, nu)
            c_t = max(abs(eval_T(ctx, s)) * math.exp(nu * s) / (1 + nu * s) * (1 + lam * s ** ALPHA) for s in t)
            c_s = max(abs(eval_S(ctx, s)) * math.exp(nu * s) * s ** (1 - ALPHA) * (1 + lam * s ** ALPHA) for s in t)
            assert c_t < 25.0
            assert c_s < 25.0

    def test_monotone_in_eigenvalue_before_sign_change(self):
        t = 0.2
        values = [eval_S(ModeKernelCtx(lam, ALPHA), t) for lam in (0.0, 1.0, 5.0, 10.0)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestKernelTable:
    def test_matches_pointwise_kernels(self):
        lam = np.array([1.0, 9.0])
        table = KernelTable(lam, ALPHA, 0.125, 8)
        for j, t in enumerate(table.t_grid):
            for k, lb in enumerate(lam):
                ctx = ModeKernelCtx(lb, ALPHA)
                assert table.e1[j, k] == pytest.approx(eval_T(ctx, t), rel=1e-14, abs=1e-300)
                assert table.g[j, k] == pytest.approx(antiderivative_G(ctx, t), rel=1e-14, abs=1e-300)
        assert table.weights.shape == (8, 2)

    def test_coarsen_reads_fine_lattice(self):
        lam = np.array([2.0, 50.0])
        fine = KernelTable(lam, ALPHA, 1.0 / 16, 16)
        coarse = fine.coarsen(4)
        direct = KernelTable(lam, ALPHA, 0.25, 4)
        assert coarse.tau == 0.25 and coarse.n_steps == 4
        assert np.allclose(coarse.g, direct.g, rtol=1e-14, atol=0.0)
        assert np.allclose(coarse.weights, direct.weights, rtol=1e-12, atol=1e-16)
        assert fine.coarsen(1) is fine

    def test_coarsen_divisibility(self):
        table = KernelTable(np.array([1.0]), ALPHA, 0.1, 10)
        with pytest.raises(ModelValidationError):
            table.coarsen(3)

    def test_tables_are_read_only(self):
        table = KernelTable(np.array([1.0]), ALPHA, 0.1, 4)
        with pytest.raises(ValueError):
            table.e1[0, 0] = 2.0

    def test_homogeneous_part(self):
        table = KernelTable(np.array([1.0]), ALPHA, 0.5, 2)
        hom = table.homogeneous(np.array([2.0]), np.array([1.0]), 0.5)
        t = 1.0
        expected = 2.0 * E(1.0, -1.0) + (0.5 * 2.0 + 1.0) * t * E(2.0, -1.0)
        assert hom[2, 0] == pytest.approx(expected, rel=1e-14)
