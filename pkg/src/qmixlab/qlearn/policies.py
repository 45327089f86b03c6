from __future__ import annotations

import numpy as np

from qmixlab.envs.base import Observation, Policy


def greedy_action(q) -> int:
    """Argmax with ties going to the lowest index."""
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        raise ValueError("empty Q-vector")
    if np.isnan(q).any():
        raise ValueError(f"NaN in Q-vector {q}")
    return int(np.argmax(q))


class GreedyPolicy(Policy):
    """Acts greedily with respect to a Q-function (no exploration)."""

    def __init__(self, q):
        self.q = q
        self.n_actions = q.n_actions

    def q_values(self, obs: Observation) -> np.ndarray:
        return self.q.values(obs)

    def probs(self, obs: Observation) -> np.ndarray:
        p = np.zeros(self.n_actions)
        p[greedy_action(self.q_values(obs))] = 1.0
        return p

    def act(self, obs: Observation, rng=None) -> int:
        return greedy_action(self.q_values(obs))
