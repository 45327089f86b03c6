"""Best-response training: epsilon-greedy Double DQN and exact tabular Q-learning."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from qmixlab.envs.base import Policy
from qmixlab.errors import ConfigError
from qmixlab.mixture import sample_opponent
from qmixlab.qlearn.networks import Adam, MLPQ, TabularQ, mlp_gradient
from qmixlab.qlearn.policies import greedy_action
from qmixlab.qlearn.replay import ReplayBuffer, TransitionBatch
from qmixlab.qlearn.rollout import as_mixture


@dataclass(frozen=True)
class TrainConfig:
    """Training hyper-parameters.  Defaults are the soccer table values."""

    timesteps: int = 300_000
    lr: float = 3e-4
    buffer_size: int = 3000
    batch_size: int = 64
    gamma: float = 0.99
    exploration_fraction: float = 0.33
    exploration_final: float = 0.01
    train_freq: int = 1
    learning_starts: int = 300
    target_sync: int = 500
    seed: int = 0
    variant: str = "mlp"
    lr_mode: str = "constant"
    hidden: tuple[int, ...] = field(default=(50, 50))
    q_init: float = 0.0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0 <= self.exploration_final <= 1:
            raise ConfigError(f"exploration_final must be in [0, 1], got {self.exploration_final}")
        if not 0 < self.exploration_fraction <= 1:
            raise ConfigError(f"exploration_fraction must be in (0, 1], got {self.exploration_fraction}")
        if self.timesteps < 0 or self.buffer_size < 1 or self.batch_size < 1 or self.train_freq < 1:
            raise ConfigError("timesteps, buffer_size, batch_size and train_freq must be positive")
        if self.variant not in ("mlp", "tabular"):
            raise ConfigError(f"variant must be 'mlp' or 'tabular', got {self.variant!r}")
        if self.lr_mode not in ("constant", "visit"):
            raise ConfigError(f"lr_mode must be 'constant' or 'visit', got {self.lr_mode!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def soccer(cls, **overrides) -> "TrainConfig":
        return replace(cls(), **overrides)

    @classmethod
    def gathering(cls, **overrides) -> "TrainConfig":
        base = cls(timesteps=500_000, lr=3e-4, buffer_size=30_000, batch_size=64, gamma=0.99,
                   exploration_fraction=0.3, exploration_final=0.03, train_freq=1, learning_starts=1000)
        return replace(base, **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def epsilon_at(t: int, cfg: TrainConfig) -> float:
    """Linear decay from 1.0 to ``exploration_final`` over the first fraction of training."""
    horizon = cfg.exploration_fraction * cfg.timesteps
    frac = 1.0 if horizon <= 0 else min(1.0, t / horizon)
    return 1.0 + frac * (cfg.exploration_final - 1.0)


def double_dqn_targets(batch: TransitionBatch, online, target, gamma: float) -> np.ndarray:
    """y = r for terminal transitions, else r + gamma * Q_target(o', argmax_a Q_online(o', a))."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    q_next_online = online.predict(batch.next_vec, batch.next_key)
    q_next_target = target.predict(batch.next_vec, batch.next_key)
    best = np.argmax(q_next_online, axis=1)
    boot = q_next_target[np.arange(len(batch)), best]
    return batch.reward + gamma * np.where(batch.terminal, 0.0, boot)


def init_q(env, cfg: TrainConfig):
    if cfg.variant == "tabular":
        return TabularQ(env.n_actions, env.obs_dim, cfg.q_init)
    return MLPQ((env.obs_dim, *cfg.hidden, env.n_actions), seed=cfg.seed)


def train_best_response(env, opponent, cfg: TrainConfig, opponents: Mapping[str, Policy] | None = None,
                        q=None, callback: Callable[[int, object], None] | None = None,
                        callback_every: int = 0):
    """Train a best response for seat 0 against a pure opponent or a mixture.

    With a mixture an opponent is drawn at every episode start and kept for the
    whole episode; each stored transition carries that opponent's id.
    ``callback(step, q)`` fires every ``callback_every`` environment steps.
    Returns ``(q, buffer)``.
    """
    sigma, pool = as_mixture(opponent, opponents)
    rng = np.random.default_rng(cfg.seed)
    q = init_q(env, cfg) if q is None else q
    buffer = ReplayBuffer(cfg.buffer_size, env.obs_dim)
    tabular = q.variant == "tabular"
    if not tabular:
        target = q.copy()
        opt = Adam(q, cfg.lr)
    visits: dict[tuple, int] = {}
    n_actions = env.n_actions
    t = 0
    while t < cfg.timesteps:
        opp_id = sample_opponent(sigma, rng)
        opp = pool[opp_id]
        opp.begin_episode(opp_id)
        state = env.reset(int(rng.integers(2**31 - 1)))
        obs = env.encode(state, 0)
        done = False
        while not done and t < cfg.timesteps:
            if rng.random() < epsilon_at(t, cfg):
                a0 = int(rng.integers(n_actions))
            else:
                a0 = greedy_action(q.values(obs))
            a1 = opp.act(env.encode(state, 1), rng)
            out = env.step(state, (a0, a1), rng)
            nxt = env.encode(out.state, 0)
            r = out.rewards[0]
            done = out.terminal
            buffer.add(obs, a0, r, nxt, done, opp_id)
            t += 1
            if tabular:
                row = q.row(obs.key)
                y = r if done else r + cfg.gamma * float(np.max(q.values(nxt)))
                if cfg.lr_mode == "visit":
                    n = visits[(obs.key, a0)] = visits.get((obs.key, a0), 0) + 1
                    lr = 1.0 / n
                else:
                    lr = cfg.lr
                row[a0] += lr * (y - row[a0])
            else:
                if t >= cfg.learning_starts and t % cfg.train_freq == 0:
                    batch = buffer.sample(cfg.batch_size, rng)
                    y = double_dqn_targets(batch, q, target, cfg.gamma)
                    _, grads = mlp_gradient(q, batch.obs_vec, batch.action, y)
                    opt.step(grads)
                if t % cfg.target_sync == 0:
                    target = q.copy()
            if callback is not None and callback_every and t % callback_every == 0:
                callback(t, q)
            state, obs = out.state, nxt
    return q, buffer
