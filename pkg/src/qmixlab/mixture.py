"""Opponent mixed strategies and the per-episode opponent draw."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qmixlab.errors import InvalidMixture

SUM_TOL = 1e-9


@dataclass(frozen=True)
class MixedStrategy:
    ids: tuple[str, ...]
    weights: tuple[float, ...]

    def __init__(self, ids, weights):
        object.__setattr__(self, "ids", tuple(str(i) for i in ids))
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))
        self.validate()

    def validate(self) -> None:
        if len(self.ids) != len(self.weights):
            raise InvalidMixture(f"{len(self.ids)} ids but {len(self.weights)} weights")
        if not self.ids:
            raise InvalidMixture("empty mixture")
        if len(set(self.ids)) != len(self.ids):
            raise InvalidMixture(f"duplicate opponent ids in {self.ids}")
        w = np.asarray(self.weights)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidMixture(f"weights must be finite and non-negative, got {self.weights}")
        total = float(w.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidMixture(f"weights sum {total:.10g}, expected 1")

    @classmethod
    def uniform(cls, ids) -> "MixedStrategy":
        ids = list(ids)
        return cls(ids, [1.0 / len(ids)] * len(ids))

    @classmethod
    def point(cls, ids, k) -> "MixedStrategy":
        ids = list(ids)
        k = ids.index(k) if isinstance(k, str) else int(k)
        return cls(ids, [1.0 if i == k else 0.0 for i in range(len(ids))])

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def weight(self, opponent_id: str) -> float:
        return self.weights[self.ids.index(opponent_id)]

    def support(self) -> tuple[str, ...]:
        return tuple(i for i, w in zip(self.ids, self.weights) if w > 0)

    def literal(self) -> str:
        return format_mixture(self.weights)


def format_mixture(weights) -> str:
    return ",".join(f"{w:.6g}" for w in weights)


def parse_mixture(text: str, ids) -> MixedStrategy:
    """Parse a comma-separated literal such as ``"0.1,0.6,0.1,0.2,0.0"`` against registry order."""
    ids = list(ids)
    try:
        weights = [float(x) for x in text.split(",")]
    except ValueError:
        raise InvalidMixture(f"cannot parse mixture literal {text!r}") from None
    if len(weights) != len(ids):
        raise InvalidMixture(f"mixture {text!r} has {len(weights)} weights for {len(ids)} opponents {ids}")
    return MixedStrategy(ids, weights)


def sample_opponent(sigma: MixedStrategy, rng: np.random.Generator) -> str:
    """Categorical draw; the caller keeps the result fixed for the whole episode."""
    sigma.validate()
    u = rng.random()
    cdf = np.cumsum(sigma.weights)
    k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    k = min(k, len(sigma.ids) - 1)
    # never land on a zero-weight id through floating point at the boundary
    while sigma.weights[k] == 0.0:
        k -= 1
    return sigma.ids[k]
