"""Monte-Carlo evaluation of a policy against a pure or mixed opponent."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from qmixlab.envs.base import Policy
from qmixlab.mixture import MixedStrategy, sample_opponent

DEFAULT_EPISODES = 30


def as_mixture(opponent, pool: Mapping[str, Policy] | None = None):
    """Normalise an opponent spec to ``(MixedStrategy, {id: Policy})``.

    Accepts a bare :class:`Policy` (labelled ``"pure"``), an id into ``pool``
    or a :class:`MixedStrategy` over ``pool``.
    """
    if isinstance(opponent, Policy):
        return MixedStrategy(["pure"], [1.0]), {"pure": opponent}
    if pool is None:
        raise ValueError("an opponent pool is required for ids and mixtures")
    if isinstance(opponent, str):
        return MixedStrategy([opponent], [1.0]), dict(pool)
    if isinstance(opponent, MixedStrategy):
        missing = [i for i in opponent.ids if i not in pool]
        if missing:
            raise KeyError(f"mixture references unknown opponents {missing}")
        return opponent, dict(pool)
    raise TypeError(f"unsupported opponent spec {opponent!r}")


def seed_entropy(seed) -> list[int]:
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return [int(seed)]


def episode_streams(seed, episode: int):
    """Independent generators for (opponent draw, env reset seed, in-play randomness).

    Keyed only by ``(seed, episode)`` so results do not depend on evaluation order.
    """
    ss = np.random.SeedSequence(seed_entropy(seed) + [int(episode)])
    pick, reset, play = ss.spawn(3)
    return np.random.default_rng(pick), int(reset.generate_state(1)[0]), np.random.default_rng(play)


def play_episode(env, policy: Policy, opponent: Policy, reset_seed: int, rng: np.random.Generator,
                 label: str | None = None, opponent_label: str | None = None):
    """Run one episode with ``policy`` in seat 0; returns (return of seat 0, steps)."""
    policy.begin_episode(label)
    opponent.begin_episode(opponent_label)
    state = env.reset(reset_seed)
    total, steps = 0.0, 0
    while True:
        a0 = policy.act(env.encode(state, 0), rng)
        a1 = opponent.act(env.encode(state, 1), rng)
        out = env.step(state, (a0, a1), rng)
        total += out.rewards[0]
        steps += 1
        state = out.state
        if out.terminal:
            return total, steps


def evaluate_policy(env, policy: Policy, opponent, episodes: int = DEFAULT_EPISODES, seed=0,
                    opponents: Mapping[str, Policy] | None = None):
    """Mean undiscounted return over ``episodes``, resampling mixture opponents per episode.

    Returns ``(mean, per_episode_returns)``.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    sigma, pool = as_mixture(opponent, opponents)
    returns = np.empty(episodes)
    for e in range(episodes):
        pick, reset_seed, play = episode_streams(seed, e)
        opp_id = sample_opponent(sigma, pick)
        returns[e], _ = play_episode(env, policy, pool[opp_id], reset_seed, play, label=opp_id)
    return float(returns.mean()), returns
