"""Opponent policy classifier trained on the best-response replay buffers.

Every transition collected while training the best response to opponent
``k`` is labelled ``k``; a classifier with the policy network's trunk then
learns to predict the opponent from a single observation.  No extra
simulation is needed.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from qmixlab.errors import DimensionError
from qmixlab.qlearn.networks import MLP, Adam
from qmixlab.qlearn.replay import ReplayBuffer


@dataclass
class LabeledDataset:
    vectors: np.ndarray  # (N, D) uint8
    keys: np.ndarray  # (N,) object
    labels: np.ndarray  # (N,) int, index into ids
    ids: tuple[str, ...]
    train_idx: np.ndarray
    val_idx: np.ndarray

    @property
    def n_classes(self) -> int:
        return len(self.ids)

    def __len__(self) -> int:
        return len(self.labels)

    def val_fingerprint(self) -> str:
        return hashlib.sha256(np.asarray(self.val_idx, dtype=np.int64).tobytes()).hexdigest()


def split_indices(n: int, rng: np.random.Generator, val_fraction: float = 0.1):
    perm = rng.permutation(n)
    n_val = int(round(n * val_fraction))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def build_dataset(buffers: Mapping[str, ReplayBuffer], seed: int = 0, val_fraction: float = 0.1) -> LabeledDataset:
    """Concatenate per-opponent buffers, label by buffer, shuffle, split 90/10."""
    if len(buffers) < 2:
        raise ValueError("need at least two opponent buffers")
    ids = tuple(buffers)
    for pid, buf in buffers.items():
        if len(buf) == 0:
            raise ValueError(f"replay buffer for opponent {pid!r} is empty")
    vecs, keys, labels = [], [], []
    for k, pid in enumerate(ids):
        batch = buffers[pid].all()
        vecs.append(batch.obs_vec)
        keys.append(batch.obs_key)
        labels.append(np.full(len(batch), k))
    train, val = split_indices(sum(len(lb) for lb in labels), np.random.default_rng(seed), val_fraction)
    return LabeledDataset(np.concatenate(vecs), np.concatenate(keys), np.concatenate(labels), ids, train, val)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Classifier:
    """MLP over observation vectors with a softmax over opponents."""

    variant = "classifier"

    def __init__(self, net: MLP, ids):
        self.net = net
        self.ids = tuple(ids)
        if net.out_dim != len(self.ids):
            raise DimensionError(f"network has {net.out_dim} outputs for {len(self.ids)} opponents")

    @property
    def obs_dim(self) -> int:
        return self.net.in_dim

    def predict_proba(self, vectors, keys=None) -> np.ndarray:
        return softmax(self.net.forward(vectors))

    def __call__(self, obs) -> np.ndarray:
        return classify(self, obs)


class TabularClassifier:
    """Per-key label counts with add-one smoothing; exact on small problems."""

    variant = "tabular_classifier"

    def __init__(self, ids, obs_dim: int | None = None):
        self.ids = tuple(ids)
        self.obs_dim = obs_dim
        self.counts: dict[int, np.ndarray] = {}

    def fit(self, keys, labels) -> "TabularClassifier":
        for k, y in zip(keys, labels):
            row = self.counts.get(k)
            if row is None:
                row = self.counts[k] = np.zeros(len(self.ids))
            row[int(y)] += 1
        return self

    def predict_proba(self, vectors, keys) -> np.ndarray:
        K = len(self.ids)
        out = np.empty((len(keys), K))
        for i, k in enumerate(keys):
            c = self.counts.get(k)
            out[i] = (np.ones(K) if c is None else c + 1.0) / ((0 if c is None else c.sum()) + K)
        return out

    def __call__(self, obs) -> np.ndarray:
        return classify(self, obs)


def classify(c, obs) -> np.ndarray:
    """Per-opponent likelihoods for one observation (a probability vector)."""
    vec = np.asarray(obs.vector)
    if c.obs_dim is not None and vec.shape[-1] != c.obs_dim:
        raise DimensionError(f"observation has {vec.shape[-1]} features, classifier expects {c.obs_dim}")
    return c.predict_proba(vec[None, :], [obs.key])[0]


@dataclass
class TrainCurves:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    p = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def train_classifier(ds: LabeledDataset, lr: float = 5e-5, batch_size: int = 64, epochs: int = 20,
                     patience: int = 3, hidden=(50, 50), seed: int = 0):
    """Adam on mean cross-entropy over the training split, early-stopped on validation loss.

    Returns ``(classifier, curves)``; the classifier carries the parameters of
    the best validation epoch.
    """
    rng = np.random.default_rng(seed)
    dim = ds.vectors.shape[1]
    net = MLP((dim, *hidden, ds.n_classes), seed=seed)
    opt = Adam(net, lr)
    clf = Classifier(net, ds.ids)
    curves = TrainCurves()
    train = np.asarray(ds.train_idx)
    has_val = len(ds.val_idx) > 0
    Xv = ds.vectors[ds.val_idx].astype(float)
    yv = ds.labels[ds.val_idx]
    best, best_params, bad = np.inf, [p.copy() for p in net.params], 0
    for _ in range(epochs):
        order = rng.permutation(train)
        losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            X, y = ds.vectors[idx].astype(float), ds.labels[idx]
            logits, acts = net.forward(X, keep=True)
            p = softmax(logits)
            losses.append(cross_entropy(p, y))
            dout = p.copy()
            dout[np.arange(len(y)), y] -= 1.0
            opt.step(net.backward(acts, dout / len(y)))
        curves.train_loss.append(float(np.mean(losses)) if losses else float("nan"))
        if not has_val:
            continue
        pv = clf.predict_proba(Xv)
        vl = cross_entropy(pv, yv)
        curves.val_loss.append(vl)
        curves.val_accuracy.append(float(np.mean(pv.argmax(axis=1) == yv)))
        if vl < best - 1e-12:
            best, best_params, bad = vl, [p.copy() for p in net.params], 0
        else:
            bad += 1
            if bad >= patience:
                break
    if has_val:
        net.params = best_params
    return clf, curves


def validation_accuracy(c, ds: LabeledDataset) -> float:
    if len(ds.val_idx) == 0:
        raise ValueError("validation split is empty")
    idx = ds.val_idx
    p = c.predict_proba(ds.vectors[idx].astype(float), ds.keys[idx])
    return float(np.mean(p.argmax(axis=1) == ds.labels[idx]))
