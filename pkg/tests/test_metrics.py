"""Tests for pathwise error functionals and the log-log rate fit."""

import numpy as np
import pytest

from fbmilstein.errors import ParameterError
from fbmilstein.fbm import sample_fbm, subsample
from fbmilstein.metrics import (AlignedPair, fit_loglog_rate, holder_error,
                                sup_error_on_grid)
from fbmilstein.schemes import Trajectory, make_field, simplified_milstein

# Regression slope of the model curve e = n^{-0.3} sqrt(log n) over
# n = 2^4..2^10, computed once with numpy.polyfit and frozen.
MODEL_CURVE_SLOPE = -0.19148543576694932


def make_trajectory(times, states, scheme="test") -> Trajectory:
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    return Trajectory(times=np.asarray(times, dtype=float), states=states,
                      scheme=scheme, field_name="synthetic", seed=0, stream_id=0)


def grid(n, horizon=1.0):
    return np.arange(n + 1) * (horizon / n)


class TestSupError:
    def test_restriction_gives_zero(self):
        t_fine = grid(16)
        fine = make_trajectory(t_fine, np.sin(t_fine))
        coarse = make_trajectory(t_fine[::4], np.sin(t_fine[::4]))
        pair = AlignedPair(fine, coarse, gamma=0.4)
        assert sup_error_on_grid(pair) == 0.0

    def test_constant_offset(self):
        t = grid(8)
        ref = make_trajectory(t, np.zeros(9))
        approx = make_trajectory(t[::2], np.full(5, -1.5))
        pair = AlignedPair(ref, approx, gamma=0.4)
        assert sup_error_on_grid(pair) == pytest.approx(1.5)

    def test_pure_noise_scheme_error_is_rounding_level(self):
        # The scheme reduces to a + B at the nodes; the only discrepancy
        # between resolutions is summation order, i.e. rounding noise.
        field = make_field("purenoise", dim=2)
        path = sample_fbm(0.45, 1.0, 64, 2, seed=70)
        ref = simplified_milstein(field, path, [0.0, 0.0])
        approx = simplified_milstein(field, subsample(path, 8), [0.0, 0.0])
        pair = AlignedPair(ref, approx, gamma=0.4)
        scale = float(np.abs(path.values).max())
        assert sup_error_on_grid(pair) <= 1e-14 * scale
        assert holder_error(pair) <= 1e-13 * scale
        same = AlignedPair(ref, simplified_milstein(field, path, [0.0, 0.0]),
                           gamma=0.4)
        assert sup_error_on_grid(same) == 0.0

    def test_misaligned_grids_rejected(self):
        ref = make_trajectory(grid(8), np.zeros(9))
        shifted = make_trajectory(grid(8, horizon=0.9)[::2], np.zeros(5))
        with pytest.raises(ParameterError):
            AlignedPair(ref, shifted, gamma=0.4)
        odd = make_trajectory(grid(3), np.zeros(4))
        with pytest.raises(ParameterError):
            AlignedPair(ref, odd, gamma=0.4)


class TestHolderError:
    def test_identical_trajectories(self):
        t = grid(16)
        ref = make_trajectory(t, np.cos(t))
        approx = make_trajectory(t[::2], np.cos(t[::2]))
        pair = AlignedPair(ref, approx, gamma=0.5)
        assert holder_error(pair) == 0.0

    def test_linear_difference(self):
        c = -0.75
        t = grid(32)
        ref = make_trajectory(t, c * t)
        approx = make_trajectory(t[::4], np.zeros(9))
        pair = AlignedPair(ref, approx, gamma=0.5)
        assert holder_error(pair) == pytest.approx(2 * abs(c))

    def test_at_least_sup_part_and_symmetry(self):
        rng = np.random.default_rng(71)
        t = grid(16)
        a = rng.normal(size=17)
        b = rng.normal(size=17)
        pair = AlignedPair(make_trajectory(t, a), make_trajectory(t, b), 0.4)
        swapped = AlignedPair(make_trajectory(t, b), make_trajectory(t, a), 0.4)
        assert holder_error(pair) >= sup_error_on_grid(pair)
        assert holder_error(pair) == pytest.approx(holder_error(swapped))
        assert sup_error_on_grid(pair) == pytest.approx(sup_error_on_grid(swapped))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(72)
        t = grid(16)
        a, b, c = rng.normal(size=(3, 17))
        pair_ac = AlignedPair(make_trajectory(t, a), make_trajectory(t, c), 0.4)
        pair_ab = AlignedPair(make_trajectory(t, a), make_trajectory(t, b), 0.4)
        pair_bc = AlignedPair(make_trajectory(t, b), make_trajectory(t, c), 0.4)
        assert holder_error(pair_ac) <= (
            holder_error(pair_ab) + holder_error(pair_bc) + 1e-12
        )


class TestFitLogLog:
    def test_exact_inverse_law(self):
        n = [2.0**k for k in range(4, 11)]
        slope, _, r2 = fit_loglog_rate(n, [1.0 / v for v in n])
        assert slope == pytest.approx(-1.0, abs=1e-12)
        assert r2 == pytest.approx(1.0)

    def test_scaled_power_law(self):
        n = np.array([2.0**k for k in range(4, 11)])
        slope, intercept, _ = fit_loglog_rate(n, 3.0 * n**-0.3)
        assert slope == pytest.approx(-0.3, abs=1e-12)
        assert intercept == pytest.approx(np.log(3.0), abs=1e-12)

    def test_log_factor_drift_matches_model_regression(self):
        n = np.array([2.0**k for k in range(4, 11)])
        slope, _, _ = fit_loglog_rate(n, n**-0.3 * np.sqrt(np.log(n)))
        assert slope == pytest.approx(MODEL_CURVE_SLOPE, abs=1e-12)

    def test_positive_scaling_invariance(self):
        n = np.array([2.0**k for k in range(4, 11)])
        e = n**-0.45
        s1, i1, _ = fit_loglog_rate(n, e)
        s2, i2, _ = fit_loglog_rate(n, 7.5 * e)
        assert s2 == pytest.approx(s1, abs=1e-12)
        assert i2 == pytest.approx(i1 + np.log(7.5), abs=1e-12)

    def test_zero_errors_dropped_then_too_few(self):
        slope, _, _ = fit_loglog_rate([8, 16, 32, 64], [0.5, 0.0, 0.125, 0.0625])
        assert slope < 0
        with pytest.raises(ParameterError):
            fit_loglog_rate([8, 16, 32], [0.0, 0.0, 0.1])

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            fit_loglog_rate([8, 16], [1.0, 0.5, 0.25])
