"""Q-Mixing value iteration on an exactly known tabular game.

Each opponent policy is folded into the game dynamics to give a
single-agent kernel ``T(s', r | s, a, pi)``.  Value iteration then runs on
the belief-weighted Bellman backup

    Q_t(s, a) = sum_pi psi(pi | s) sum_{s'} T(s' | s, a, pi) [r + gamma V_{t-1}(s')]

with ``V_t(s) = max_a Q_t(s, a)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from qmixlab.envs.base import Policy
from qmixlab.errors import ConvergenceError
from qmixlab.mixture import MixedStrategy
from qmixlab.qlearn.networks import TabularQ
from qmixlab.qlearn.rollout import episode_streams

log = logging.getLogger(__name__)

DEFAULT_OCCUPANCY_EPISODES = 30


class StateIndex:
    """Bijection between a tabular env's states (by seat-0 key) and rows 0..S-1.

    Row ``S`` is reserved for the absorbing terminal state.
    """

    def __init__(self, env):
        if not getattr(env, "tabular", False) or not hasattr(env, "enumerate_states"):
            raise TypeError("kernel requires tabular env")
        self.env = env
        self.states = env.enumerate_states()
        self.keys = np.array([env.encode(s, 0).key for s in self.states])
        self.index = {int(k): i for i, k in enumerate(self.keys)}
        if len(self.index) != len(self.states):
            raise ValueError("state keys are not unique")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def terminal(self) -> int:
        return len(self.states)


@dataclass
class OpponentKernel:
    """Exact dynamics against one fixed opponent.

    ``P`` has one row per (state, action) pair, flattened as ``s * A + a``, and
    ``S + 1`` columns (the last is the terminal sink).  ``R`` is the matching
    expected immediate reward for seat 0.
    """

    P: sparse.csr_matrix
    R: np.ndarray
    n_states: int
    n_actions: int

    def row(self, s: int, a: int) -> dict[int, float]:
        r = self.P.getrow(s * self.n_actions + a)
        return dict(zip(r.indices.tolist(), r.data.tolist()))


def build_opponent_kernel(env, opponent: Policy, index: StateIndex | None = None) -> OpponentKernel:
    """Marginalise the opponent's action distribution and the env's own randomness."""
    if index is None:
        index = StateIndex(env)
    S, A = len(index), env.n_actions
    rows, cols, vals = [], [], []
    R = np.zeros(S * A)
    for s, state in enumerate(index.states):
        p_opp = opponent.probs(env.encode(state, 1))
        for a in range(A):
            acc: dict[int, float] = {}
            r_exp = 0.0
            for b in np.flatnonzero(p_opp):
                pb = float(p_opp[b])
                for p, out in env.transitions(state, (a, int(b))):
                    w = pb * p
                    j = index.terminal if out.terminal else index.index[env.encode(out.state, 0).key]
                    acc[j] = acc.get(j, 0.0) + w
                    r_exp += w * out.rewards[0]
            row = s * A + a
            rows.extend([row] * len(acc))
            cols.extend(acc.keys())
            vals.extend(acc.values())
            R[row] = r_exp
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(S * A, S + 1))
    return OpponentKernel(P, R, S, A)


def visit_counts(env, opponent: Policy, behavior: Policy, episodes: int = DEFAULT_OCCUPANCY_EPISODES,
                 seed=0) -> dict[int, int]:
    """Visits to each seat-0 observation key over ``episodes`` rollouts."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    counts: dict[int, int] = {}
    for e in range(episodes):
        _, reset_seed, rng = episode_streams(seed, e)
        behavior.begin_episode(None)
        opponent.begin_episode(None)
        state = env.reset(reset_seed)
        while True:
            o0 = env.encode(state, 0)
            counts[o0.key] = counts.get(o0.key, 0) + 1
            out = env.step(state, (behavior.act(o0, rng), opponent.act(env.encode(state, 1), rng)), rng)
            state = out.state
            if out.terminal:
                break
    return counts


def estimate_occupancy(env, opponent: Policy, behavior: Policy, episodes: int = DEFAULT_OCCUPANCY_EPISODES,
                       seed=0, support=None) -> dict[int, float]:
    """Normalised visit frequencies of ``behavior`` (seat 0) against ``opponent``.

    With ``support`` (the keys visited against any opponent) the counts get
    add-one smoothing over that set.
    """
    return smooth_counts(visit_counts(env, opponent, behavior, episodes, seed), support)


def smooth_counts(counts: dict[int, int], support=None) -> dict[int, float]:
    if support is None:
        total = sum(counts.values())
        return {k: c / total for k, c in counts.items()}
    support = set(support) | set(counts)
    total = sum(counts.values()) + len(support)
    return {k: (counts.get(k, 0) + 1) / total for k in support}


def belief_from_occupancy(index: StateIndex, occupancies: dict[str, dict[int, float]],
                          sigma: MixedStrategy) -> np.ndarray:
    """State-indexed belief psi(pi | s) = sigma(pi) d_pi(s) / sum_pi' sigma(pi') d_pi'(s).

    States with zero total mass fall back to the prior.  Returns an ``(S, K)``
    array ordered like ``sigma.ids``.
    """
    S, K = len(index), len(sigma.ids)
    like = np.zeros((S, K))
    for k, pid in enumerate(sigma.ids):
        for key, d in occupancies.get(pid, {}).items():
            s = index.index.get(int(key))
            if s is not None:
                like[s, k] = d
    psi = like * sigma.array[None, :]
    mass = psi.sum(axis=1, keepdims=True)
    prior = np.broadcast_to(sigma.array, (S, K))
    return np.where(mass > 0, psi / np.where(mass > 0, mass, 1.0), prior)


@dataclass
class QMVIResult:
    V: np.ndarray
    Q: np.ndarray
    policy: np.ndarray
    iterations: int
    residuals: list[float] = field(default_factory=list)

    def as_tabular_q(self, index: StateIndex) -> TabularQ:
        q = TabularQ(self.Q.shape[1], getattr(index.env, "obs_dim", None))
        q.table = {int(k): self.Q[i].copy() for i, k in enumerate(index.keys)}
        return q


def qmvi_solve(kernels: list[OpponentKernel], psi: np.ndarray, gamma: float, tol: float = 1e-6,
               max_iters: int = 10_000, q_init: np.ndarray | None = None) -> QMVIResult:
    """Belief-weighted value iteration.

    ``psi`` is ``(S, K)`` (or ``(K,)`` for a state-independent belief) aligned
    with ``kernels``.  ``q_init`` seeds ``V_0 = max_a q_init``; zeros
    otherwise.  Stops once the sup-norm change in V is at most ``tol``.
    """
    S, A = kernels[0].n_states, kernels[0].n_actions
    psi = np.asarray(psi, dtype=float)
    if psi.ndim == 1:
        psi = np.broadcast_to(psi, (S, len(kernels)))
    if psi.shape != (S, len(kernels)):
        raise ValueError(f"psi has shape {psi.shape}, expected {(S, len(kernels))}")
    V = np.zeros(S + 1)
    if q_init is not None:
        V[:S] = np.asarray(q_init).max(axis=1)
    residuals = []
    for it in range(1, max_iters + 1):
        Q = np.zeros((S, A))
        for k, ker in enumerate(kernels):
            Qk = (ker.R + gamma * (ker.P @ V)).reshape(S, A)
            Q += psi[:, k:k + 1] * Qk
        V_new = np.append(Q.max(axis=1), 0.0)
        res = float(np.max(np.abs(V_new - V)))
        residuals.append(res)
        log.debug("qmvi iteration %d residual %.3e", it, res)
        V = V_new
        if res <= tol:
            return QMVIResult(V[:S], Q, Q.argmax(axis=1), it, residuals)
    raise ConvergenceError(f"value iteration did not converge in {max_iters} iterations", residuals[-1])


def prior_q_init(index: StateIndex, components: list, sigma_weights) -> np.ndarray:
    """sum_pi sigma(pi) Q(s, . | pi) over the enumerated states."""
    dummy = np.zeros((len(index), components[0].n_actions))
    for w, q in zip(sigma_weights, components):
        if w:
            dummy += w * q.predict(None, index.keys)
    return dummy
