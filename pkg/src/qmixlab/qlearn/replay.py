from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qmixlab.envs.base import Observation


@dataclass(frozen=True)
class Transition:
    obs: Observation
    action: int
    reward: float
    next_obs: Observation
    terminal: bool
    label: str


@dataclass
class TransitionBatch:
    obs_vec: np.ndarray
    obs_key: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_vec: np.ndarray
    next_key: np.ndarray
    terminal: np.ndarray
    label: np.ndarray

    def __len__(self) -> int:
        return len(self.action)


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions, stored column-wise.

    Observations are kept both as dense uint8 vectors and as discrete keys so
    the same buffer feeds tabular learners, MLPs and the opponent classifier.
    """

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.obs_vec = np.zeros((capacity, obs_dim), dtype=np.uint8)
        self.next_vec = np.zeros((capacity, obs_dim), dtype=np.uint8)
        self.obs_key = np.zeros(capacity, dtype=object)
        self.next_key = np.zeros(capacity, dtype=object)
        self.action = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.label = np.zeros(capacity, dtype=object)
        self.inserted = 0

    def __len__(self) -> int:
        return min(self.inserted, self.capacity)

    def add(self, obs: Observation, action: int, reward: float, next_obs: Observation,
            terminal: bool, label: str) -> None:
        i = self.inserted % self.capacity
        self.obs_vec[i] = obs.vector
        self.next_vec[i] = next_obs.vector
        self.obs_key[i] = obs.key
        self.next_key[i] = next_obs.key
        self.action[i] = action
        self.reward[i] = reward
        self.terminal[i] = terminal
        self.label[i] = label
        self.inserted += 1

    def order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        n = len(self)
        if self.inserted <= self.capacity:
            return np.arange(n)
        start = self.inserted % self.capacity
        return (np.arange(n) + start) % self.capacity

    def take(self, idx) -> TransitionBatch:
        idx = np.asarray(idx)
        return TransitionBatch(self.obs_vec[idx], self.obs_key[idx], self.action[idx], self.reward[idx],
                               self.next_vec[idx], self.next_key[idx], self.terminal[idx], self.label[idx])

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        return self.take(rng.integers(0, len(self), size=batch_size))

    def all(self) -> TransitionBatch:
        return self.take(self.order())

    def __iter__(self):
        for i in self.order():
            yield Transition(Observation(self.obs_vec[i], self.obs_key[i]), int(self.action[i]),
                             float(self.reward[i]), Observation(self.next_vec[i], self.next_key[i]),
                             bool(self.terminal[i]), self.label[i])
