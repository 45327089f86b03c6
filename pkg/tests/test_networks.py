import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmixlab.errors import DimensionError
from qmixlab.qlearn.networks import MLP, MLPQ, Adam, TabularQ, adam_step, mlp_gradient


def finite_difference(f, params, eps=1e-6):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            hi = f()
            p[idx] = old - eps
            lo = f()
            p[idx] = old
            g[idx] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


class TestMLP:
    def test_shapes(self):
        net = MLPQ((120, 50, 50, 5), seed=0)
        assert net.forward(np.zeros((3, 120))).shape == (3, 5)
        assert net.n_params() == 120 * 50 + 50 + 50 * 50 + 50 + 50 * 5 + 5

    def test_init_bounds(self):
        net = MLP((16, 8, 2), seed=1)
        assert np.all(np.abs(net.params[0]) <= 1 / 4)
        assert not net.params[1].any()

    def test_dimension_error(self):
        with pytest.raises(DimensionError, match="120"):
            MLPQ((120, 4, 5)).forward(np.zeros(100))

    def test_scaled_scales_output(self):
        net = MLPQ((6, 4, 3), seed=2)
        x = np.random.default_rng(0).random((4, 6))
        np.testing.assert_allclose(net.scaled(2.5).forward(x), 2.5 * net.forward(x))

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_td_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        net = MLPQ((7, 5, 4, 3), seed=seed)
        for p in net.params[1::2]:
            p[:] = rng.normal(scale=0.3, size=p.shape)
        X = rng.random((6, 7))
        a = rng.integers(0, 3, size=6)
        y = rng.normal(size=6)
        _, grads = mlp_gradient(net, X, a, y)
        numeric = finite_difference(lambda: mlp_gradient(net, X, a, y)[0], net.params)
        for g, n in zip(grads, numeric):
            np.testing.assert_allclose(g, n, rtol=1e-4, atol=1e-7)


class TestAdam:
    def test_first_step_moves_by_lr(self):
        w, g = [np.array([1.0, -2.0])], [np.array([0.5, -3.0])]
        m = ([np.zeros(2)], [np.zeros(2)])
        new_w, _ = adam_step(w, g, m, 1, lr=0.1)
        # bias correction makes the first step exactly lr * sign(g)
        np.testing.assert_allclose(new_w[0], [0.9, -1.9], atol=1e-7)

    def test_pure(self):
        w, g = [np.ones(3)], [np.ones(3)]
        m = ([np.zeros(3)], [np.zeros(3)])
        adam_step(w, g, m, 1, 0.1)
        np.testing.assert_array_equal(w[0], np.ones(3))
        np.testing.assert_array_equal(m[0][0], np.zeros(3))

    def test_minimises_quadratic(self):
        net = MLPQ((2, 1), seed=0)
        opt = Adam(net, 0.05)
        X = np.eye(2)
        for _ in range(500):
            _, grads = mlp_gradient(net, X, np.zeros(2, int), np.array([3.0, -1.0]))
            opt.step(grads)
        np.testing.assert_allclose(net.forward(X)[:, 0], [3.0, -1.0], atol=1e-3)


class TestTabularQ:
    def test_unseen_reads_init(self):
        q = TabularQ(3, init=0.5)
        np.testing.assert_array_equal(q.predict(None, [1, 2]), np.full((2, 3), 0.5))
        assert q.table == {}

    def test_default_row_is_read_only(self):
        q = TabularQ(3)
        obs = type("O", (), {"key": 9})()
        with pytest.raises(ValueError):
            q.values(obs)[0] = 1.0

    def test_copy_is_independent(self):
        q = TabularQ(2)
        q.row(1)[0] = 4.0
        c = q.copy()
        c.row(1)[0] = 5.0
        assert q.table[1][0] == 4.0
