import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from polyrl.errors import DivergenceError
from polyrl.learner import FeatureMap, LinearQ, direction_set

LOW, HIGH = np.zeros(2), np.array([100.0, 100.0])


def make_q(n_tilings=8, tiles=16, k=16, **kw):
    fm = FeatureMap(LOW, HIGH, n_tilings, tiles, k)
    return LinearQ(fm, direction_set(k, 1.0), **kw)


class TestFeatureMap:
    @settings(max_examples=200, deadline=None)
    @given(st.floats(-20, 120), st.floats(-20, 120), st.integers(0, 15))
    def test_active_count_and_range(self, x, y, a):
        fm = FeatureMap(LOW, HIGH)
        idx = fm.active([x, y], a)
        assert idx.size == fm.n_tilings
        assert np.unique(idx).size == fm.n_tilings
        assert np.all((idx >= a * fm.block) & (idx < (a + 1) * fm.block))
        assert np.all(idx < fm.length)

    def test_out_of_bounds_clamped(self):
        fm = FeatureMap(LOW, HIGH)
        np.testing.assert_array_equal(fm.tiles_for([-5.0, 50.0]), fm.tiles_for([0.0, 50.0]))
        assert fm.clamped >= 1

    def test_generalization(self):
        fm = FeatureMap(LOW, HIGH)
        near = np.intersect1d(fm.tiles_for([50.0, 50.0]), fm.tiles_for([51.0, 50.0])).size
        far = np.intersect1d(fm.tiles_for([50.0, 50.0]), fm.tiles_for([80.0, 50.0])).size
        assert near > far == 0

    def test_bad_index(self):
        with pytest.raises(IndexError):
            FeatureMap(LOW, HIGH).active([1.0, 1.0], 16)


class TestQValues:
    def test_zero_weights(self):
        q = make_q()
        assert np.all(q.q_values([10.0, 20.0]) == 0)
        assert q.greedy_index([10.0, 20.0]) == 0

    def test_single_feature(self):
        q = make_q(n_tilings=1)
        s = [33.0, 44.0]
        q.weights.reshape(-1)[q.fm.active(s, 2)] = 2.5
        assert q.q_value(s, 2) == pytest.approx(2.5)

    def test_linearity(self):
        q = make_q()
        q.weights[:] = np.random.default_rng(0).normal(size=q.weights.shape)
        s = [12.0, 77.0]
        before = q.q_values(s)
        q.weights *= 2
        np.testing.assert_allclose(q.q_values(s), 2 * before)

    def test_greedy_favours_index(self):
        q = make_q()
        s = [40.0, 60.0]
        q.weights.reshape(-1)[q.fm.active(s, 3)] = 1.0
        assert q.greedy_index(s) == 3
        np.testing.assert_allclose(q.greedy_action(s), q.actions[3])

    def test_uniform_shift_keeps_argmax(self):
        q = make_q()
        q.weights[:] = np.random.default_rng(1).normal(size=q.weights.shape)
        s = [5.0, 95.0]
        i = q.greedy_index(s)
        q.weights += 7.0
        assert q.greedy_index(s) == i


class TestTDUpdate:
    def test_zero_reward_no_change(self):
        q = make_q()
        q.td_update([10.0, 10.0], 4, 0.0, [11.0, 10.0], False)
        assert not q.weights.any()

    def test_terminal_step(self):
        q = make_q()
        s = [20.0, 30.0]
        td = q.td_update(s, 5, 100.0, [21.0, 30.0], True)
        assert td == 100.0
        np.testing.assert_allclose(q.weights.reshape(-1)[q.fm.active(s, 5)], 1.0)
        assert q.q_value(s, 5) == pytest.approx(8.0)
        assert np.count_nonzero(q.weights) == 8

    def test_repeated_terminal_converges(self):
        q = make_q()
        s = [20.0, 30.0]
        vals = []
        for _ in range(200):
            q.td_update(s, 1, 100.0, s, True)
            vals.append(q.q_value(s, 1))
        # q <- q + 0.08 (100 - q): the gap shrinks by 0.92 each step
        gaps = 100 - np.array(vals)
        np.testing.assert_allclose(gaps[1:] / gaps[:-1], 0.92, rtol=1e-6, atol=0)

    def test_locality(self):
        q = make_q()
        q.weights[:] = np.random.default_rng(2).normal(size=q.weights.shape)
        before = q.weights.copy()
        q.td_update([60.0, 10.0], 7, 1.0, [61.0, 10.0], False)
        assert np.count_nonzero(q.weights != before) == 8

    def test_divergence(self):
        q = make_q()
        q.weights[:] = np.inf
        with pytest.raises(DivergenceError):
            q.td_update([1.0, 1.0], 0, 0.0, [2.0, 1.0], False)

    def test_gradient_check(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            q = make_q(n_tilings=4, tiles=4)
            q.weights[:] = rng.normal(size=q.weights.shape)
            s, s2 = rng.uniform(0, 100, 2), rng.uniform(0, 100, 2)
            a, r = int(rng.integers(16)), float(rng.normal())
            target = r + q.gamma * q.q_values(s2).max()
            w0 = q.weights.copy()
            q.td_update(s, a, r, s2, False)
            step = (q.weights - w0).reshape(-1)
            # finite-difference gradient of 0.5 (target - Q(s,a))^2 with target fixed
            flat = w0.reshape(-1).copy()
            grad = np.zeros_like(flat)
            eps = 1e-6
            for j in np.flatnonzero(step) if step.any() else []:
                for sign in (1, -1):
                    f = flat.copy()
                    f[j] += sign * eps
                    qa = f[q.fm.active(s, a)].sum()
                    grad[j] += sign * 0.5 * (target - qa) ** 2
                grad[j] /= 2 * eps
            mask = step != 0
            np.testing.assert_allclose(step[mask], -q.alpha * grad[mask], rtol=1e-6)

    def test_off_policy_identical_streams(self):
        rng = np.random.default_rng(4)
        stream = [(rng.uniform(0, 100, 2), int(rng.integers(16)), float(rng.normal()), rng.uniform(0, 100, 2))
                  for _ in range(500)]
        a, b = make_q(), make_q()
        for q in (a, b):
            for s, i, r, s2 in stream:
                q.td_update(s, i, r, s2, False)
        np.testing.assert_array_equal(a.weights, b.weights)


class TestEpsilonGreedy:
    def test_zero_epsilon(self):
        q = make_q()
        q.weights[:] = np.random.default_rng(5).normal(size=q.weights.shape)
        rng = np.random.default_rng(0)
        s = [30.0, 30.0]
        assert all(q.epsilon_greedy_index(s, 0.0, rng) == q.greedy_index(s) for _ in range(100))

    def test_full_epsilon_uniform(self):
        q = make_q()
        rng = np.random.default_rng(1)
        counts = np.bincount([q.epsilon_greedy_index([1.0, 1.0], 1.0, rng) for _ in range(100_000)], minlength=16)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_greedy_fraction(self):
        q = make_q()
        rng = np.random.default_rng(2)
        picks = np.array([q.epsilon_greedy_index([1.0, 1.0], 0.1, rng) for _ in range(100_000)])
        assert np.mean(picks == 0) == pytest.approx(0.9 + 0.1 / 16, abs=0.01)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            make_q().epsilon_greedy_index([1.0, 1.0], 1.5, np.random.default_rng(0))


class TestActions:
    def test_direction_set(self):
        d = direction_set(16, 2.0)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 2.0)
        np.testing.assert_allclose(d[0], [2.0, 0.0])

    def test_nearest_index(self):
        q = make_q()
        assert q.nearest_index([0.0, 0.3]) == 4
        assert q.nearest_index([-1.0, -0.01]) == 8


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        q = make_q()
        q.weights[:] = np.random.default_rng(6).normal(size=q.weights.shape)
        path = tmp_path / "w.npy"
        q.save(path)
        r = make_q()
        r.load(path)
        np.testing.assert_array_equal(q.weights, r.weights)

    def test_load_wrong_size(self, tmp_path):
        path = tmp_path / "w.npy"
        np.save(path, np.zeros(5))
        with pytest.raises(ValueError):
            make_q().load(path)
