"""Compress a Q-Mixing teacher into a single network by temperature-softened imitation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from qmixlab.errors import ConfigError, DimensionError
from qmixlab.mixture import MixedStrategy
from qmixlab.opc import split_indices
from qmixlab.qlearn.networks import MLPQ, Adam
from qmixlab.qlearn.replay import ReplayBuffer


@dataclass(frozen=True)
class DistillConfig:
    tau: float = 1.0
    lr: float = 0.003
    batch_size: int = 64
    epochs: int = 10
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"temperature must be positive, got {self.tau}")


def softmax_temperature(q, tau: float) -> np.ndarray:
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("Q-values must be finite")
    z = q / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(q, tau):
    z = np.asarray(q, dtype=float) / tau
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def distill_loss(q_teacher, q_student, tau: float = 1.0):
    """KL(softmax(qT / tau) || softmax(qS / tau)), summed over actions.

    Batched inputs give one value per row.
    """
    qT, qS = np.asarray(q_teacher, dtype=float), np.asarray(q_student, dtype=float)
    if qT.shape != qS.shape:
        raise DimensionError(f"teacher shape {qT.shape} != student shape {qS.shape}")
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    pT = softmax_temperature(qT, tau)
    kl = np.sum(pT * (_log_softmax(qT, tau) - _log_softmax(qS, tau)), axis=-1)
    return np.maximum(kl, 0.0) if kl.ndim else max(float(kl), 0.0)


def distill_loss_grad(q_teacher, q_student, tau: float = 1.0) -> np.ndarray:
    """d loss / d q_student, the teacher held constant."""
    return (softmax_temperature(q_student, tau) - softmax_temperature(q_teacher, tau)) / tau


def prior_teacher(components, sigma: MixedStrategy) -> Callable:
    """Batch teacher: (vectors, keys) -> sum_k sigma_k Q_k."""
    w = components.align(sigma.ids, sigma.weights)

    def teacher(vectors, keys):
        q = components.predict(vectors, keys)
        return np.tensordot(w, q, axes=1)

    return teacher


@dataclass
class DistillResult:
    student: MLPQ
    train_loss: list[float] = field(default_factory=list)
    val_agreement: list[float] = field(default_factory=list)
    returns: list[tuple[int, float]] = field(default_factory=list)
    val_idx: np.ndarray | None = None


def concat_buffers(buffers: Mapping[str, ReplayBuffer] | Sequence[ReplayBuffer]):
    bufs = list(buffers.values()) if isinstance(buffers, Mapping) else list(buffers)
    if not bufs or any(len(b) == 0 for b in bufs):
        raise ValueError("distillation needs non-empty replay buffers")
    batches = [b.all() for b in bufs]
    return np.concatenate([b.obs_vec for b in batches]), np.concatenate([b.obs_key for b in batches])


def greedy_agreement(student, teacher, vectors, keys) -> float:
    if len(keys) == 0:
        return float("nan")
    a_s = np.argmax(student.predict(vectors, keys), axis=1)
    a_t = np.argmax(teacher(vectors, keys), axis=1)
    return float(np.mean(a_s == a_t))


def train_student(teacher: Callable, buffers, cfg: DistillConfig = DistillConfig(), hidden=(50, 50),
                  student: MLPQ | None = None, n_actions: int | None = None,
                  evaluate: Callable[[MLPQ], float] | None = None) -> DistillResult:
    """Fit a one-component-sized MLP to the teacher's softened Q-values.

    The dataset is the concatenated replay buffers (observations only), split
    90/10; held-out greedy agreement is recorded after every epoch, and so is
    ``evaluate(student)`` (simulated return) when given.
    """
    vectors, keys = concat_buffers(buffers)
    rng = np.random.default_rng(cfg.seed)
    train, val = split_indices(len(keys), rng, cfg.val_fraction)
    q_all = teacher(vectors, keys)
    if student is None:
        n_actions = q_all.shape[1] if n_actions is None else n_actions
        student = MLPQ((vectors.shape[1], *hidden, n_actions), seed=cfg.seed)
    result = DistillResult(student, val_idx=val)
    opt = Adam(student, cfg.lr)
    for _ in range(cfg.epochs):
        order = rng.permutation(train)
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            qS, acts = student.forward(vectors[idx], keep=True)
            qT = q_all[idx]
            losses.append(float(np.mean(distill_loss(qT, qS, cfg.tau))))
            opt.step(student.backward(acts, distill_loss_grad(qT, qS, cfg.tau) / len(idx)))
        result.train_loss.append(float(np.mean(losses)) if losses else float("nan"))
        result.val_agreement.append(greedy_agreement(student, teacher, vectors[val], keys[val]))
        if evaluate is not None:
            result.returns.append((len(result.train_loss), float(evaluate(student))))
    return result
