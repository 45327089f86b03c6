"""Common types for the two-player grid games.

Both games share one convention: every player's action id is expressed in
that player's own egocentric frame (the frame its observation is encoded
in).  The step functions translate to world coordinates.  This lets a single
network play either seat.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np


@dataclass(frozen=True)
class Observation:
    """What a player sees.

    ``vector`` is the dense one-hot encoding (uint8), ``key`` a hashable
    integer that identifies the same content and is used by tabular learners.
    ``state`` and ``player`` are carried along for scripted opponents, which
    are allowed to peek at the full state; learned policies never touch them.
    """

    vector: np.ndarray
    key: int
    state: Any = field(default=None, compare=False, repr=False)
    player: int = 0


@dataclass(frozen=True)
class StepOutcome:
    state: Any
    rewards: tuple[float, float]
    terminal: bool
    info: dict = field(default_factory=dict)


class Policy:
    """A (possibly stochastic) map from observations to actions.

    Subclasses implement :meth:`probs`.  ``act`` samples from it; a
    deterministic policy should return a one-hot vector so ``act`` never
    touches the rng.
    """

    n_actions: int

    def probs(self, obs: Observation) -> np.ndarray:
        raise NotImplementedError

    def act(self, obs: Observation, rng: np.random.Generator) -> int:
        p = self.probs(obs)
        hit = np.flatnonzero(p == 1.0)
        if hit.size == 1:
            return int(hit[0])
        return int(rng.choice(len(p), p=p))

    def begin_episode(self, label: str | None = None) -> None:
        """Hook called at the start of every episode.

        ``label`` is the true opponent id; only oracle components may use it.
        """


class MarkovGame(Protocol):
    n_actions: int
    obs_dim: int
    name: str

    def reset(self, seed: int) -> Any: ...

    def step(self, state: Any, actions: tuple[int, int], rng: np.random.Generator) -> StepOutcome: ...

    def encode(self, state: Any, player: int) -> Observation: ...
