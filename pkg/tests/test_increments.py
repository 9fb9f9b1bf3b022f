"""Tests for the increment calculus and discrete Hoelder norms."""

import numpy as np
import pytest

from fbmilstein.errors import DomainError, ParameterError
from fbmilstein.fbm import sample_fbm
from fbmilstein.increments import (GridFunction1, GridIncrement2, default_stride,
                                   delta1, delta2_evaluate, holder_norm_c1,
                                   holder_norm_c2)


def grid(n, horizon=1.0):
    return np.arange(n + 1) * (horizon / n)


class TestDelta1:
    def test_constant_killed(self):
        f = GridFunction1(grid(8), np.full(9, 3.7))
        h = delta1(f)
        for i in range(9):
            for j in range(i, 9):
                assert np.all(h.value(i, j) == 0.0)

    def test_linear_function(self):
        t = np.array([0.0, 0.5, 1.0])
        f = GridFunction1(t, t.copy())
        h = delta1(f)
        for i in range(3):
            for j in range(3):
                if i <= j:
                    assert h.value(i, j) == pytest.approx(t[j] - t[i])

    def test_fbm_telescoping(self):
        path = sample_fbm(0.4, 1.0, 16, 1, seed=8)
        f = GridFunction1(path.times, path.values[:, 0])
        h = delta1(f)
        assert h.value(0, 16) == pytest.approx(path.values[16, 0])


class TestDelta2:
    def test_coboundary_vanishes_on_random_functions(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            n = int(rng.integers(2, 24))
            width = int(rng.integers(1, 4))
            values = rng.normal(scale=rng.uniform(0.1, 50.0), size=(n + 1, width))
            f = GridFunction1(grid(n), values)
            h = delta1(f)
            scale = max(1.0, float(np.abs(values).max()))
            i, u, j = sorted(rng.integers(0, n + 1, size=3))
            residual = delta2_evaluate(h, i, u, j)
            assert np.abs(residual).max() <= 1e-12 * scale

    def test_squared_increment_expansion(self):
        t = grid(10)
        h = GridIncrement2.from_pair_function(t, lambda s, u: (u - s) ** 2)
        for (i, u, j) in ((0, 3, 7), (2, 5, 9), (1, 4, 10)):
            expected = 2.0 * (t[u] - t[i]) * (t[j] - t[u])
            assert delta2_evaluate(h, i, u, j) == pytest.approx(expected)

    def test_degenerate_middle_point(self):
        t = grid(6)
        h = GridIncrement2.from_pair_function(t, lambda s, u: np.sin(u - s))
        assert delta2_evaluate(h, 2, 2, 5) == pytest.approx(0.0, abs=1e-15)
        assert delta2_evaluate(h, 1, 4, 4) == pytest.approx(0.0, abs=1e-15)

    def test_index_order_violation(self):
        t = grid(6)
        h = GridIncrement2.from_pair_function(t, lambda s, u: u - s)
        with pytest.raises(DomainError):
            delta2_evaluate(h, 3, 1, 5)
        with pytest.raises(DomainError):
            delta2_evaluate(h, 1, 5, 3)


class TestHolderNormC1:
    def test_zero_function(self):
        f = GridFunction1(grid(8), np.zeros(9))
        assert holder_norm_c1(f, 0.5) == 0.0

    def test_identity_on_unit_interval(self):
        t = grid(16)
        f = GridFunction1(t, t.copy())
        assert holder_norm_c1(f, 0.5) == pytest.approx(2.0)

    def test_constant(self):
        f = GridFunction1(grid(8), np.full(9, -2.5))
        assert holder_norm_c1(f, 0.7) == pytest.approx(2.5)

    def test_gamma_validation(self):
        f = GridFunction1(grid(8), np.zeros(9))
        with pytest.raises(ParameterError):
            holder_norm_c1(f, 0.0)
        with pytest.raises(ParameterError):
            holder_norm_c1(f, 1.5)

    def test_stride_monotonicity(self):
        path = sample_fbm(0.6, 1.0, 256, 1, seed=21)
        f = GridFunction1(path.times, path.values[:, 0])
        n1 = holder_norm_c1(f, 0.4, stride=2)
        n2 = holder_norm_c1(f, 0.4, stride=4)
        n3 = holder_norm_c1(f, 0.4, stride=8)
        assert n3 <= n2 <= n1

    def test_subadditivity(self):
        rng = np.random.default_rng(3)
        t = grid(32)
        a = rng.normal(size=33)
        b = rng.normal(size=33)
        fa = GridFunction1(t, a)
        fb = GridFunction1(t, b)
        fab = GridFunction1(t, a + b)
        assert holder_norm_c1(fab, 0.4) <= (
            holder_norm_c1(fa, 0.4) + holder_norm_c1(fb, 0.4) + 1e-12
        )


class TestHolderNormC2:
    def test_zero(self):
        h = GridIncrement2.from_pair_function(grid(6), lambda s, u: 0.0)
        assert holder_norm_c2(h, 0.5) == 0.0

    def test_exact_homogeneity(self):
        h = GridIncrement2.from_pair_function(grid(10), lambda s, u: u - s)
        assert holder_norm_c2(h, 1.0) == pytest.approx(1.0)

    def test_matches_c1_quotient_part(self):
        path = sample_fbm(0.7, 1.0, 32, 1, seed=9)
        f = GridFunction1(path.times, path.values[:, 0])
        gamma = 0.4
        quotient = holder_norm_c2(delta1(f), gamma)
        sup_part = float(np.abs(path.values[:, 0]).max())
        assert holder_norm_c1(f, gamma) == pytest.approx(sup_part + quotient)

    def test_mu_validation(self):
        h = GridIncrement2.from_pair_function(grid(6), lambda s, u: u - s)
        with pytest.raises(ParameterError):
            holder_norm_c2(h, 0.0)


class TestDefaultStride:
    def test_small_grids_stride_one(self):
        assert default_stride(16) == 1
        assert default_stride(4096) == 1

    def test_large_grids_capped_and_odd(self):
        for n in (2**16, 2**17, 2**20):
            s = default_stride(n)
            assert ((n // s) + 1) ** 2 <= 2**24
            assert s % 2 == 1

    def test_grid_validation(self):
        with pytest.raises(ParameterError):
            GridFunction1(np.array([0.0, 0.5, 0.4]), np.zeros(3))
        with pytest.raises(ParameterError):
            GridFunction1(np.array([0.0, 0.3, 1.0]), np.zeros(3))
