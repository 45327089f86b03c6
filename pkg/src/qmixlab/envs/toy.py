"""Small exactly-solvable games used for tests and demos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qmixlab.envs.base import Observation, Policy, StepOutcome
from qmixlab.errors import EpisodeFinished


@dataclass(frozen=True)
class ToyState:
    s: int
    t: int = 0
    done: bool = False


class BanditGame:
    """One-shot matrix game: the opponent's action picks a row of arm payoffs.

    With ``bernoulli=True`` the learner's reward is a coin flip with the
    payoff as success probability, otherwise the payoff itself.
    """

    name = "bandit"
    obs_dim = 1

    def __init__(self, payoffs, bernoulli: bool = True):
        self.payoffs = np.atleast_2d(np.asarray(payoffs, dtype=float))
        self.n_opponent_actions, self.n_actions = self.payoffs.shape
        self.bernoulli = bernoulli
        self._obs = Observation(np.ones(1, dtype=np.uint8), 0)

    def reset(self, seed: int) -> ToyState:
        return ToyState(0)

    def step(self, state, actions, rng) -> StepOutcome:
        if state.done:
            raise EpisodeFinished()
        mean = self.payoffs[int(actions[1]), int(actions[0])]
        r = float(rng.random() < mean) if self.bernoulli else float(mean)
        return StepOutcome(ToyState(0, 1, True), (r, -r), True, {})

    def encode(self, state, player: int) -> Observation:
        return self._obs


class FixedAction(Policy):
    """Opponent that always plays the same action."""

    def __init__(self, action: int, n_actions: int):
        self.n_actions = n_actions
        self._p = np.zeros(n_actions)
        self._p[action] = 1.0

    def probs(self, obs) -> np.ndarray:
        return self._p


class TabularMDPGame:
    """Single-agent episodic MDP dressed up as a two-player game.

    ``P[s, a]`` is a distribution over ``n_states + 1`` successors, the last
    being an absorbing terminal; ``R[s, a]`` is the expected (deterministic)
    reward.  The opponent's action is ignored.
    """

    name = "mdp"

    def __init__(self, P: np.ndarray, R: np.ndarray, start: int = 0, cap: int = 10_000):
        self.P = np.asarray(P, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.n_states, self.n_actions = self.R.shape
        self.obs_dim = self.n_states
        self.start = start
        self.cap = cap
        self._obs = [Observation(np.eye(self.n_states, dtype=np.uint8)[s], s) for s in range(self.n_states)]

    @classmethod
    def random(cls, n_states: int, n_actions: int, seed: int, p_end: float = 0.1, branching: int = 3):
        rng = np.random.default_rng(seed)
        P = np.zeros((n_states, n_actions, n_states + 1))
        for s in range(n_states):
            for a in range(n_actions):
                succ = rng.choice(n_states, size=branching, replace=False)
                P[s, a, succ] = rng.dirichlet(np.ones(branching)) * (1 - p_end)
                P[s, a, n_states] = p_end
        R = rng.uniform(-1, 1, size=(n_states, n_actions))
        return cls(P, R)

    def reset(self, seed: int) -> ToyState:
        return ToyState(self.start)

    def step(self, state, actions, rng) -> StepOutcome:
        if state.done:
            raise EpisodeFinished()
        a = int(actions[0])
        nxt = int(rng.choice(self.n_states + 1, p=self.P[state.s, a]))
        t = state.t + 1
        terminal = nxt == self.n_states or t >= self.cap
        r = float(self.R[state.s, a])
        return StepOutcome(ToyState(min(nxt, self.n_states - 1), t, terminal), (r, -r), terminal, {})

    def encode(self, state, player: int) -> Observation:
        return self._obs[state.s]

    def value_iteration(self, gamma: float, tol: float = 1e-12) -> np.ndarray:
        """Exact optimal Q for comparison."""
        V = np.zeros(self.n_states + 1)
        while True:
            Q = self.R + gamma * self.P @ V
            V_new = np.append(Q.max(axis=1), 0.0)
            if np.max(np.abs(V_new - V)) < tol:
                return Q
            V = V_new
