import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatclust.series import RawSeries, grid_times
from flatclust.smoothing import (
    EmptyWindowWarning,
    SmootherConfig,
    estimate_grid_series,
    gamma_schedule,
    gamma_schedule_power,
    kernel_le,
    kernel_symmetric,
    nw_weights,
    smooth_at,
    smooth_at_symmetric,
)


class TestKernel:
    @pytest.mark.parametrize(
        "u,expected",
        [(0.0, 2.0), (-1.0, 0.0), (0.5, 0.0), (-0.5, 1.5), (-1.0001, 0.0), (1e-12, 0.0)],
    )
    def test_pointwise(self, u, expected):
        assert kernel_le(u) == pytest.approx(expected, abs=1e-9)

    def test_vectorized(self):
        out = kernel_le(np.array([-2.0, -1.0, -0.5, 0.0, 0.5]))
        assert np.allclose(out, [0.0, 0.0, 1.5, 2.0, 0.0])

    def test_symmetric_reference(self):
        assert kernel_symmetric(0.0) == pytest.approx(0.75)
        assert kernel_symmetric(1.0) == pytest.approx(0.0)
        assert kernel_symmetric(-0.5) == kernel_symmetric(0.5)


class TestNwWeights:
    def test_single_sample_at_t(self):
        w, empty = nw_weights(0.5, np.array([0.5]), gamma=0.1)
        assert not empty
        assert np.array_equal(w, [1.0])

    def test_empty_window(self):
        w, empty = nw_weights(0.5, np.array([0.9, 1.0]), gamma=0.1)
        assert empty
        assert np.array_equal(w, [0.0, 0.0])

    def test_two_sample_values(self):
        # kernel values 2 and 1.5, normalized
        w, empty = nw_weights(0.6, np.array([0.55, 0.6]), gamma=0.1)
        assert not empty
        assert w[1] == pytest.approx(2.0 / 3.5, rel=1e-12)
        assert w[0] == pytest.approx(1.5 / 3.5, rel=1e-12)

    @settings(max_examples=150, deadline=None)
    @given(
        st.floats(min_value=0.05, max_value=1.0),
        st.floats(min_value=0.01, max_value=0.8),
        st.integers(min_value=1, max_value=60),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_left_sided_and_normalized(self, t, gamma, m, seed):
        times = np.sort(np.random.default_rng(seed).uniform(1e-6, 1.0, size=m))
        times = np.unique(times)
        w, empty = nw_weights(t, times, gamma)
        outside = (times > t) | (times < t - gamma)
        assert np.all(w[outside] == 0.0)
        if empty:
            assert np.all(w == 0.0)
        else:
            assert abs(w.sum() - 1.0) <= 1e-12
            assert np.all(w >= 0.0)


class TestSmoothAt:
    def test_constant_series_exact(self):
        y = RawSeries.from_uniform("c", np.full(50, 0.37))
        cfg = SmootherConfig(gamma=0.1)
        for t in (0.2, 0.5, 1.0):
            assert smooth_at(y, t, cfg)[0] == pytest.approx(0.37, abs=1e-15)

    def test_linear_bias_within_gamma(self):
        # slope-1 function: the window average lags by at most gamma
        m = 200
        y = RawSeries.from_uniform("lin", np.arange(1, m + 1) / m)
        gamma = 0.08
        cfg = SmootherConfig(gamma=gamma)
        for t in grid_times(10):
            est = smooth_at(y, t, cfg)[0]
            assert abs(est - t) <= gamma + 1e-12

    def test_empty_window_warns_and_returns_zero(self):
        y = RawSeries(id="e", s=2, times=[0.9, 1.0], values=[[0.5, 0.5], [0.6, 0.6]])
        with pytest.warns(EmptyWindowWarning):
            out = smooth_at(y, 0.3, SmootherConfig(gamma=0.05))
        assert np.array_equal(out, [0.0, 0.0])

    def test_clip(self):
        y = RawSeries(id="n", s=1, times=[0.5, 0.6], values=[[1.4], [1.2]])
        assert smooth_at(y, 0.6, SmootherConfig(gamma=0.2))[0] == 1.0
        raw = smooth_at(y, 0.6, SmootherConfig(gamma=0.2, clip=False))[0]
        assert raw > 1.0

    def test_rejects_time_outside_range(self):
        y = RawSeries.from_uniform("c", np.full(10, 0.5))
        with pytest.raises(ValueError):
            smooth_at(y, 0.0, SmootherConfig(gamma=0.1))


class TestEstimateGridSeries:
    def test_noiseless_constant(self):
        y = RawSeries.from_uniform("c", np.full(40, 0.8))
        g = estimate_grid_series(y, 5, SmootherConfig(gamma=0.1))
        assert np.allclose(g.values, 0.8, atol=1e-15)
        assert g.d == 5 and g.id == "c"

    def test_rejects_m_not_greater_than_d(self):
        y = RawSeries.from_uniform("c", np.full(5, 0.5))
        with pytest.raises(ValueError, match="m=5"):
            estimate_grid_series(y, 5, SmootherConfig(gamma=0.5))

    def test_no_empty_windows_when_gamma_at_least_two_over_m(self):
        import warnings

        d = 6
        m = 2 * d
        y = RawSeries.from_uniform("c", np.full(m, 0.5))
        with warnings.catch_warnings():
            warnings.simplefilter("error", EmptyWindowWarning)
            estimate_grid_series(y, d, SmootherConfig(gamma=2.0 / m))

    def test_output_always_in_unit_box(self):
        rng = np.random.default_rng(3)
        y = RawSeries.from_uniform("n", 0.5 + 0.8 * rng.standard_normal(64))
        g = estimate_grid_series(y, 4, SmootherConfig(gamma=0.2, clip=False))
        assert np.all(g.values >= 0.0) and np.all(g.values <= 1.0)


class TestGammaSchedule:
    def test_frozen_value(self):
        assert gamma_schedule(3) == pytest.approx(0.7154419464242339, rel=1e-12)

    def test_floor_active_for_tiny_m(self):
        assert gamma_schedule(2) == 1.0  # 2/m beats (log m / m)^(1/3)

    def test_rejects_small_m(self):
        with pytest.raises(ValueError):
            gamma_schedule(1)

    def test_eventually_decreasing(self):
        values = [gamma_schedule(m) for m in (8, 16, 32, 64, 128, 256, 512)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_power_law_variant(self):
        assert gamma_schedule_power(100, alpha=0.5) == pytest.approx(0.1, rel=1e-12)
        assert gamma_schedule_power(4, alpha=0.9) == 0.5  # floor 2/m wins
        with pytest.raises(ValueError):
            gamma_schedule_power(100, alpha=1.0)
        with pytest.raises(ValueError):
            gamma_schedule_power(1, alpha=0.5)

    def test_m_gamma_grows(self):
        products = [m * gamma_schedule(m) for m in (2**k for k in range(3, 16))]
        assert all(b > a for a, b in zip(products, products[1:]))
        assert products[-1] > 100


class TestJumpRecovery:
    def _step_series(self, m):
        times = np.arange(1, m + 1) / m
        return RawSeries(id="step", s=1, times=times, values=(times >= 0.6).astype(float)[:, None])

    def test_left_kernel_recovers_after_jump(self):
        estimates = []
        for m in (128, 512, 2048):
            y = self._step_series(m)
            estimates.append(smooth_at(y, 0.8, SmootherConfig(gamma=gamma_schedule(m)))[0])
        assert all(b >= a for a, b in zip(estimates, estimates[1:]))
        assert estimates[-1] == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_kernel_stays_biased_at_jump(self):
        for m in (512, 2048, 8192):
            y = self._step_series(m)
            est = smooth_at_symmetric(y, 0.6, gamma_schedule(m))[0]
            assert 0.35 <= est <= 0.65
