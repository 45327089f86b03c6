"""Q-function representations: an exact table and a small ReLU MLP.

The MLP is written out by hand (forward, backprop, Adam) because the nets
involved are tiny and exact gradients are checked against finite
differences in the test-suite.
"""
from __future__ import annotations

import numpy as np

from qmixlab.errors import DimensionError


class TabularQ:
    """Map from discrete observation key to a vector of action values.

    Unseen keys read as ``init`` in every action (0 by default; a positive
    value gives optimistic exploration).
    """

    variant = "tabular"

    def __init__(self, n_actions: int, obs_dim: int | None = None, init: float = 0.0):
        self.n_actions = n_actions
        self.obs_dim = obs_dim
        self.init = float(init)
        self.table: dict[int, np.ndarray] = {}
        self._default = np.full(n_actions, self.init)
        self._default.flags.writeable = False

    def values(self, obs) -> np.ndarray:
        return self.table.get(obs.key, self._default)

    def predict(self, vectors, keys) -> np.ndarray:
        z = self._default
        return np.array([self.table.get(k, z) for k in keys]).reshape(len(keys), self.n_actions)

    def row(self, key: int) -> np.ndarray:
        """Writable row for ``key``, created on first touch."""
        r = self.table.get(key)
        if r is None:
            r = self.table[key] = self._default.copy()
        return r

    def copy(self) -> "TabularQ":
        out = TabularQ(self.n_actions, self.obs_dim, self.init)
        out.table = {k: v.copy() for k, v in self.table.items()}
        return out

    def scaled(self, alpha: float) -> "TabularQ":
        out = TabularQ(self.n_actions, self.obs_dim, alpha * self.init)
        out.table = {k: alpha * v for k, v in self.table.items()}
        return out

    def n_params(self) -> int:
        return len(self.table) * self.n_actions


def init_mlp_params(dims, rng: np.random.Generator) -> list[np.ndarray]:
    """Weights uniform in +-1/sqrt(fan_in), biases zero; returns [W1, b1, W2, b2, ...]."""
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


class MLP:
    """Fully connected net, ReLU on hidden layers, linear output."""

    def __init__(self, dims, seed: int | None = 0, params: list[np.ndarray] | None = None):
        self.dims = tuple(int(d) for d in dims)
        if params is None:
            params = init_mlp_params(self.dims, np.random.default_rng(seed))
        self.params = [np.asarray(p, dtype=float) for p in params]
        expected = [(a, b) for a, b in zip(self.dims[:-1], self.dims[1:])]
        for (a, b), W, bias in zip(expected, self.params[0::2], self.params[1::2]):
            if W.shape != (a, b) or bias.shape != (b,):
                raise DimensionError(f"parameter shapes do not match layer dims {self.dims}")

    @property
    def in_dim(self) -> int:
        return self.dims[0]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.in_dim:
            raise DimensionError(f"input has {X.shape[1]} features, network expects {self.in_dim}")
        return X

    def forward(self, X: np.ndarray, keep: bool = False):
        X = self._check(X)
        acts = [X]
        h = X
        n_layers = len(self.params) // 2
        for k in range(n_layers):
            z = h @ self.params[2 * k] + self.params[2 * k + 1]
            h = np.maximum(z, 0.0) if k < n_layers - 1 else z
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts: list[np.ndarray], dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of sum(dout * output) w.r.t. every parameter."""
        grads = [None] * len(self.params)
        delta = dout
        n_layers = len(self.params) // 2
        for k in range(n_layers - 1, -1, -1):
            grads[2 * k] = acts[k].T @ delta
            grads[2 * k + 1] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.params[2 * k].T) * (acts[k] > 0)
        return grads

    def copy(self) -> "MLP":
        return type(self)(self.dims, params=[p.copy() for p in self.params])


class MLPQ(MLP):
    """MLP-backed Q-function over dense observation vectors."""

    variant = "mlp"

    @property
    def n_actions(self) -> int:
        return self.out_dim

    @property
    def obs_dim(self) -> int:
        return self.in_dim

    def values(self, obs) -> np.ndarray:
        return self.forward(obs.vector)[0]

    def predict(self, vectors, keys=None) -> np.ndarray:
        return self.forward(vectors)

    def scaled(self, alpha: float) -> "MLPQ":
        # scaling the last layer scales the output
        params = [p.copy() for p in self.params]
        params[-2] *= alpha
        params[-1] *= alpha
        return MLPQ(self.dims, params=params)


def mlp_forward(net: MLP, obs) -> np.ndarray:
    vec = getattr(obs, "vector", obs)
    return net.forward(vec)[0] if np.ndim(vec) == 1 else net.forward(vec)


def mlp_gradient(net: MLP, vectors: np.ndarray, actions: np.ndarray, targets: np.ndarray):
    """Mean squared TD error on the taken actions and its exact gradient.

    Returns ``(loss, grads)`` with grads aligned to ``net.params``.
    """
    out, acts = net.forward(vectors, keep=True)
    b = out.shape[0]
    idx = np.arange(b)
    err = out[idx, actions] - targets
    dout = np.zeros_like(out)
    dout[idx, actions] = 2.0 * err / b
    return float(np.mean(err ** 2)), net.backward(acts, dout)


def adam_step(weights, grads, moments, t: int, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One Adam update with bias correction; ``t`` counts from 1.

    Pure: returns ``(new_weights, (new_m, new_v))`` without touching inputs.
    """
    m, v = moments
    new_m = [beta1 * mi + (1 - beta1) * g for mi, g in zip(m, grads)]
    new_v = [beta2 * vi + (1 - beta2) * g * g for vi, g in zip(v, grads)]
    c1, c2 = 1 - beta1 ** t, 1 - beta2 ** t
    new_w = [w - lr * (mi / c1) / (np.sqrt(vi / c2) + eps) for w, mi, vi in zip(weights, new_m, new_v)]
    return new_w, (new_m, new_v)


class Adam:
    """Stateful convenience wrapper around :func:`adam_step` for an :class:`MLP`."""

    def __init__(self, net: MLP, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.net, self.lr, self.beta1, self.beta2, self.eps = net, lr, beta1, beta2, eps
        self.moments = ([np.zeros_like(p) for p in net.params], [np.zeros_like(p) for p in net.params])
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        self.net.params, self.moments = adam_step(self.net.params, grads, self.moments, self.t,
                                                  self.lr, self.beta1, self.beta2, self.eps)
