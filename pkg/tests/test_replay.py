import numpy as np
import pytest

from qmixlab.envs.base import Observation
from qmixlab.qlearn.replay import ReplayBuffer


def obs(k, dim=4):
    v = np.zeros(dim, dtype=np.uint8)
    v[k % dim] = 1
    return Observation(v, k)


class TestReplayBuffer:
    def test_fifo_eviction(self):
        buf = ReplayBuffer(3, 4)
        for k in range(5):
            buf.add(obs(k), k % 2, float(k), obs(k + 1), False, "a")
        assert len(buf) == 3 and buf.inserted == 5
        np.testing.assert_array_equal(buf.all().obs_key.astype(int), [2, 3, 4])
        np.testing.assert_array_equal([t.reward for t in buf], [2.0, 3.0, 4.0])

    def test_sample_is_seeded(self):
        buf = ReplayBuffer(10, 4)
        for k in range(10):
            buf.add(obs(k), 0, float(k), obs(k), k == 9, "x")
        a = buf.sample(5, np.random.default_rng(1))
        b = buf.sample(5, np.random.default_rng(1))
        np.testing.assert_array_equal(a.reward, b.reward)

    def test_labels_kept(self):
        buf = ReplayBuffer(4, 4)
        buf.add(obs(0), 0, 0.0, obs(1), True, "chaser")
        assert next(iter(buf)).label == "chaser"

    def test_capacity_positive(self):
        with pytest.raises(ValueError):
            ReplayBuffer(0, 4)
