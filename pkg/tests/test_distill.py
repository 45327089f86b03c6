import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmixlab.distill import (DistillConfig, distill_loss, distill_loss_grad, softmax_temperature,
                             train_student)
from qmixlab.envs.base import Observation
from qmixlab.errors import ConfigError, DimensionError
from qmixlab.qlearn.replay import ReplayBuffer


class TestLoss:
    def test_closed_form(self):
        assert abs(distill_loss([1, 0], [0, 1], 1.0) - (math.e - 1) / (math.e + 1)) < 1e-12

    def test_zero_on_match(self):
        assert distill_loss([3.0, 1.0, -2.0], [3.0, 1.0, -2.0], 0.5) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            distill_loss([1, 2], [1, 2, 3])

    def test_temperature_flattens(self):
        p_hot = softmax_temperature([1.0, 0.0], 0.1)
        p_cold = softmax_temperature([1.0, 0.0], 10.0)
        assert p_hot[0] > p_cold[0] > 0.5

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            softmax_temperature([1.0, np.inf], 1.0)
        with pytest.raises(ConfigError):
            DistillConfig(tau=0.0)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.5, 1.0, 2.0]))
    @settings(max_examples=100, deadline=None)
    def test_gradient_matches_finite_differences(self, seed, tau):
        rng = np.random.default_rng(seed)
        qT, qS = rng.normal(size=(2, rng.integers(2, 8)))
        g = distill_loss_grad(qT, qS, tau)
        eps = 1e-6
        num = np.empty_like(qS)
        for i in range(len(qS)):
            d = np.zeros_like(qS)
            d[i] = eps
            num[i] = (distill_loss(qT, qS + d, tau) - distill_loss(qT, qS - d, tau)) / (2 * eps)
        np.testing.assert_allclose(g, num, rtol=1e-4, atol=1e-8)


def teacher(vectors, keys):
    v = np.asarray(vectors, float)
    return np.stack([v[:, 0] - v[:, 1], v[:, 1] - v[:, 0], 0.2 * v[:, 2]], axis=1) * 3.0 + [0.3, 0.0, 0.15]


class TestStudent:
    def test_student_imitates_teacher(self):
        rng = np.random.default_rng(0)
        buf = ReplayBuffer(2000, 4)
        for _ in range(2000):
            v = (rng.random(4) < 0.5).astype(np.uint8)
            o = Observation(v, int(v @ [1, 2, 4, 8]))
            buf.add(o, 0, 0.0, o, False, "x")
        res = train_student(teacher, [buf], DistillConfig(epochs=15, lr=0.01), hidden=(16,))
        assert res.val_agreement[-1] >= 0.95
        assert res.train_loss[-1] < res.train_loss[0]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            train_student(teacher, [ReplayBuffer(3, 4)])
