"""Q-Mixing: compose per-opponent Q-functions into a response to any opponent mixture.

Given best-response Q-functions ``Q_k`` against each pure opponent ``k``, the
mixture's Q-value is approximated by ``sum_k w_k(o) * Q_k(o, .)``.  With
``w = sigma`` (the prior mixture) this is exact in the single-state case;
``w`` may instead be a per-observation belief built from classifier output
or occupancy statistics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from qmixlab.envs.base import Observation, Policy
from qmixlab.errors import DimensionError, InvalidMixture
from qmixlab.mixture import SUM_TOL, MixedStrategy, format_mixture, parse_mixture, sample_opponent
from qmixlab.qlearn.policies import greedy_action

__all__ = [
    "ComponentSet", "MixedStrategy", "OpponentBelief", "OracleEvidence", "QMixingPolicy",
    "belief_from_evidence", "format_mixture", "mix_q_prior", "mix_q_with_belief", "parse_mixture",
    "sample_opponent",
]


class ComponentSet:
    """Per-opponent Q-functions aligned with opponent ids."""

    def __init__(self, ids: Sequence[str], qs: Sequence):
        if len(ids) != len(qs):
            raise ValueError(f"{len(ids)} ids but {len(qs)} Q-functions")
        if not qs:
            raise ValueError("empty component set")
        self.ids = tuple(str(i) for i in ids)
        self.qs = list(qs)
        n_actions = {q.n_actions for q in self.qs}
        if len(n_actions) != 1:
            raise DimensionError(f"components disagree on action count: {sorted(n_actions)}")
        dims = {q.obs_dim for q in self.qs if q.obs_dim is not None}
        if len(dims) > 1:
            raise DimensionError(f"components disagree on observation dim: {sorted(dims)}")
        self.n_actions = n_actions.pop()
        self.obs_dim = dims.pop() if dims else None

    def __len__(self) -> int:
        return len(self.qs)

    def __getitem__(self, opponent_id: str):
        return self.qs[self.ids.index(opponent_id)]

    def values(self, obs: Observation) -> np.ndarray:
        """(K, A) matrix of component Q-values."""
        return np.stack([q.values(obs) for q in self.qs])

    def predict(self, vectors, keys) -> np.ndarray:
        """(K, B, A) component Q-values for a batch."""
        return np.stack([q.predict(vectors, keys) for q in self.qs])

    def align(self, ids: Sequence[str], weights) -> np.ndarray:
        """Spread ``weights`` over this set's id order; unknown ids are an error."""
        unknown = [i for i in ids if i not in self.ids]
        if unknown:
            raise KeyError(f"opponents {unknown} have no component Q-function (have {list(self.ids)})")
        w = np.zeros(len(self.ids))
        for i, x in zip(ids, weights):
            w[self.ids.index(i)] = x
        return w


@dataclass(frozen=True)
class OpponentBelief:
    ids: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.ids),) or np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
            raise InvalidMixture(f"belief {w} is not a distribution over {self.ids}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_mixture(cls, sigma: MixedStrategy) -> "OpponentBelief":
        return cls(sigma.ids, sigma.array)


def mix_q_prior(obs: Observation, comps: ComponentSet, sigma: MixedStrategy) -> np.ndarray:
    """sum_k sigma_k * Q_k(obs, .); its argmax is the Q-Mixing-Prior action."""
    w = comps.align(sigma.ids, sigma.weights)
    return _mix(obs, comps, w)


def _mix(obs, comps: ComponentSet, w: np.ndarray) -> np.ndarray:
    out = np.zeros(comps.n_actions)
    for wk, q in zip(w, comps.qs):
        if wk != 0.0:
            out += wk * q.values(obs)
    return out


def belief_from_evidence(obs, sigma0: MixedStrategy, evidence) -> OpponentBelief:
    """Posterior-style reweighting psi_k ~ sigma0_k * evidence_k.

    Falls back to the prior when every product is zero.
    """
    e = np.asarray(evidence, dtype=float)
    if e.shape != (len(sigma0.ids),):
        raise DimensionError(f"evidence has shape {e.shape}, expected ({len(sigma0.ids)},)")
    if np.any(e < 0) or np.any(np.isnan(e)):
        raise ValueError(f"evidence must be non-negative, got {e}")
    prod = sigma0.array * e
    total = prod.sum()
    if total <= 0:
        return OpponentBelief.from_mixture(sigma0)
    return OpponentBelief(sigma0.ids, prod / total)


def mix_q_with_belief(obs: Observation, comps: ComponentSet, psi: OpponentBelief) -> np.ndarray:
    """sum_k psi_k * Q_k(obs, .)"""
    return _mix(obs, comps, comps.align(psi.ids, psi.weights))


class OracleEvidence:
    """Evidence source that knows the true opponent (told at episode start).

    Useful as an upper bound for classifier-driven mixing.
    """

    def __init__(self, ids: Sequence[str]):
        self.ids = tuple(ids)
        self._label = None

    def begin_episode(self, label) -> None:
        self._label = label

    def __call__(self, obs) -> np.ndarray:
        if self._label not in self.ids:
            raise RuntimeError("oracle evidence used without a known opponent label")
        e = np.zeros(len(self.ids))
        e[self.ids.index(self._label)] = 1.0
        return e


class QMixingPolicy(Policy):
    """Greedy policy over mixed component Q-values.

    ``evidence`` is an optional callable ``obs -> per-opponent likelihoods``
    (ordered like ``sigma.ids``).  Without it the prior ``sigma`` is used
    (Q-Mixing-Prior); with it the weights are ``belief_from_evidence``.
    """

    def __init__(self, comps: ComponentSet, sigma: MixedStrategy,
                 evidence: Callable[[Observation], np.ndarray] | None = None):
        self.comps = comps
        self.sigma = sigma
        self.evidence = evidence
        self.n_actions = comps.n_actions
        self._prior_w = comps.align(sigma.ids, sigma.weights)

    def begin_episode(self, label=None) -> None:
        hook = getattr(self.evidence, "begin_episode", None)
        if hook is not None:
            hook(label)

    def weights(self, obs: Observation) -> np.ndarray:
        if self.evidence is None:
            return self._prior_w
        psi = belief_from_evidence(obs, self.sigma, self.evidence(obs))
        return self.comps.align(psi.ids, psi.weights)

    def q_values(self, obs: Observation) -> np.ndarray:
        return _mix(obs, self.comps, self.weights(obs))

    def probs(self, obs: Observation) -> np.ndarray:
        p = np.zeros(self.n_actions)
        p[greedy_action(self.q_values(obs))] = 1.0
        return p

    def act(self, obs: Observation, rng=None) -> int:
        return greedy_action(self.q_values(obs))
