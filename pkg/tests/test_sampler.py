import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from polyrl.errors import DimensionError
from polyrl.sampler import (
    ETA_MAX,
    ETA_MIN,
    ActionSpace,
    clamp_eta,
    rotate_from,
    sample_action,
    sample_action_detail,
    sample_eta,
)


def angle(u, v):
    c = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, max(-1.0, c)))


class TestActionSpace:
    def test_validation(self):
        with pytest.raises(DimensionError):
            ActionSpace([-1.0], [1.0])
        with pytest.raises(ValueError):
            ActionSpace([0.0, 1.0], [1.0, 1.0])

    def test_uniform_inside(self):
        sp = ActionSpace([-1.0, 0.0, 2.0], [1.0, 5.0, 3.0])
        rng = np.random.default_rng(0)
        for _ in range(1000):
            assert sp.contains(sp.uniform(rng))

    def test_clip(self):
        sp = ActionSpace.symmetric(2, 1.0)
        np.testing.assert_array_equal(sp.clip(np.array([3.0, -0.5])), [1.0, -0.5])


class TestEta:
    def test_zero_variance(self):
        rng = np.random.default_rng(0)
        assert all(sample_eta(0.2, 0.0, rng) == 0.2 for _ in range(10))

    def test_small_variance_within_tail(self):
        rng = np.random.default_rng(1)
        draws = np.array([sample_eta(0.2, 1e-4, rng) for _ in range(10_000)])
        assert np.all(np.abs(draws - 0.2) <= 5e-2)

    def test_clamp(self):
        assert clamp_eta(-0.05) == ETA_MIN
        assert clamp_eta(2.0) == ETA_MAX


class TestRotate:
    def test_hand_examples(self):
        prev = np.array([1.0, 0.0])
        np.testing.assert_allclose(rotate_from(prev, np.array([1.0, 1.0]), math.pi / 4), [1.0, 1.0])
        np.testing.assert_allclose(rotate_from(prev, np.array([-1.0, 1.0]), math.pi / 4), [1.0, -1.0])

    def test_tiny_eta_parallel(self):
        prev = np.array([1.0, 0.0])
        q = rotate_from(prev, np.array([0.7, 0.4]), 1e-12)
        assert q[0] == pytest.approx(0.7)
        assert abs(q[1]) < 1e-11

    def test_degenerate_points(self):
        prev = np.array([1.0, 0.0])
        assert rotate_from(prev, np.array([0.0, 1.0]), 0.2) is None  # D = 0
        assert rotate_from(prev, np.array([2.0, 0.0]), 0.2) is None  # collinear

    @settings(max_examples=300, deadline=None)
    @given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.floats(ETA_MIN, ETA_MAX))
    def test_angle_and_magnitude(self, dim, seed, eta):
        rng = np.random.default_rng(seed)
        prev = rng.uniform(-1, 1, dim)
        point = rng.uniform(-1, 1, dim)
        q = rotate_from(prev, point, eta)
        if q is None:
            return
        c = float(q @ prev) / (np.linalg.norm(q) * np.linalg.norm(prev))
        assert abs(c - math.cos(eta)) <= 1e-9
        assert float(q @ prev) > 0
        vp = abs(float(prev @ point)) / np.linalg.norm(prev)
        assert np.linalg.norm(q) == pytest.approx(vp / math.cos(eta), rel=1e-9)


class TestSampleAction:
    def test_output_in_box(self):
        sp = ActionSpace([-1.0, -2.0, -0.5], [1.0, 2.0, 0.5])
        rng = np.random.default_rng(2)
        prev = sp.uniform(rng)
        for _ in range(2000):
            prev = sample_action(prev, 0.3, sp, rng)
            assert sp.contains(prev)

    def test_zero_prev_falls_back(self):
        sp = ActionSpace.symmetric(3, 2.0)
        s = sample_action_detail(np.zeros(3), 0.2, sp, np.random.default_rng(0))
        assert s.fallback
        assert np.linalg.norm(s.raw) == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            sample_action(np.ones(3), 0.2, ActionSpace.symmetric(2, 1.0), np.random.default_rng(0))

    def test_deterministic(self):
        sp = ActionSpace.symmetric(4, 1.0)
        a = [sample_action(np.ones(4), 0.2, sp, np.random.default_rng(5)) for _ in range(2)]
        np.testing.assert_array_equal(a[0], a[1])

    def test_azimuth_uniform_3d(self):
        # in 3D the component orthogonal to prev should point uniformly around it
        sp = ActionSpace.symmetric(3, 1.0)
        rng = np.random.default_rng(3)
        prev = np.array([0.0, 0.0, 0.5])
        phis = []
        for _ in range(100_000):
            raw = sample_action_detail(prev, 0.3, sp, rng).raw
            phis.append(math.atan2(raw[1], raw[0]))
        counts, _ = np.histogram(phis, bins=8, range=(-math.pi, math.pi))
        assert stats.chisquare(counts).pvalue > 0.01

    def test_forward_bias(self):
        sp = ActionSpace.symmetric(5, 1.0)
        rng = np.random.default_rng(4)
        for _ in range(5000):
            prev = sp.uniform(rng)
            raw = sample_action_detail(prev, rng.uniform(ETA_MIN, ETA_MAX), sp, rng).raw
            assert float(raw @ prev) > 0
