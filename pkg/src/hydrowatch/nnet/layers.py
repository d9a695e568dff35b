"""Hand-written dense and GRU layers with exact analytic backpropagation.

All parameters are float64 numpy arrays. Every layer keeps its gradients in
a dict parallel to its parameters; callers zero them between steps.
"""
from __future__ import annotations

import numpy as np


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


_ACTIVATIONS = {
    "linear": (lambda x: x, lambda y: np.ones_like(y)),
    "tanh": (np.tanh, lambda y: 1.0 - y ** 2),
    "relu": (lambda x: np.maximum(x, 0.0), lambda y: (y > 0).astype(np.float64)),
}


class Dense:
    """y = act(x @ W + b); applied over the trailing axis (time-distributed)."""

    def __init__(self, rng: np.random.Generator, n_in: int, n_out: int,
                 activation: str = "linear", name: str = "dense"):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation: {activation}")
        self.n_in, self.n_out, self.activation, self.name = n_in, n_out, activation, name
        self.params = {
            "W": glorot_uniform(rng, n_in, n_out, (n_in, n_out)),
            "b": np.zeros(n_out),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def forward(self, x: np.ndarray):
        act, _ = _ACTIVATIONS[self.activation]
        y = act(x @ self.params["W"] + self.params["b"])
        return y, (x, y)

    def backward(self, dy: np.ndarray, cache):
        x, y = cache
        _, dact = _ACTIVATIONS[self.activation]
        dz = dy * dact(y)
        flat_x = x.reshape(-1, self.n_in)
        flat_dz = dz.reshape(-1, self.n_out)
        self.grads["W"] += flat_x.T @ flat_dz
        self.grads["b"] += flat_dz.sum(axis=0)
        return dz @ self.params["W"].T


class GRULayer:
    """Single-direction GRU over [batch, time, features].

    Gates: z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
    n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * n + z * h.
    With h0 = 0 every hidden state stays inside (-1, 1).
    """

    def __init__(self, rng: np.random.Generator, n_in: int, n_hidden: int,
                 name: str = "gru"):
        self.n_in, self.n_hidden, self.name = n_in, n_hidden, name
        p = {}
        for g in ("z", "r", "n"):
            p[f"W{g}"] = glorot_uniform(rng, n_in, n_hidden, (n_in, n_hidden))
            p[f"U{g}"] = glorot_uniform(rng, n_hidden, n_hidden, (n_hidden, n_hidden))
            p[f"b{g}"] = np.zeros(n_hidden)
        self.params = p
        self.grads = {k: np.zeros_like(v) for k, v in p.items()}

    def forward(self, X: np.ndarray, h0: np.ndarray | None = None):
        B, T, _ = X.shape
        H = self.n_hidden
        p = self.params
        h = np.zeros((B, H)) if h0 is None else h0
        # input projections for the whole sequence at once
        xz = X @ p["Wz"] + p["bz"]
        xr = X @ p["Wr"] + p["br"]
        xn = X @ p["Wn"] + p["bn"]
        hs = np.empty((B, T, H))
        zs = np.empty((B, T, H))
        rs = np.empty((B, T, H))
        ns = np.empty((B, T, H))
        h_prevs = np.empty((B, T, H))
        for t in range(T):
            h_prevs[:, t] = h
            z = sigmoid(xz[:, t] + h @ p["Uz"])
            r = sigmoid(xr[:, t] + h @ p["Ur"])
            n = np.tanh(xn[:, t] + (r * h) @ p["Un"])
            h = (1.0 - z) * n + z * h
            hs[:, t], zs[:, t], rs[:, t], ns[:, t] = h, z, r, n
        cache = (X, h_prevs, zs, rs, ns, h0)
        return hs, h, cache

    def backward(self, dH_seq: np.ndarray | None, dh_T: np.ndarray | None, cache):
        X, h_prevs, zs, rs, ns, h0 = cache
        B, T, _ = X.shape
        p, g = self.params, self.grads
        dX = np.zeros_like(X)
        carry = np.zeros((B, self.n_hidden)) if dh_T is None else dh_T.copy()
        for t in range(T - 1, -1, -1):
            dh = carry
            if dH_seq is not None:
                dh = dh + dH_seq[:, t]
            z, r, n, h_prev = zs[:, t], rs[:, t], ns[:, t], h_prevs[:, t]
            dan = dh * (1.0 - z) * (1.0 - n ** 2)
            daz = dh * (h_prev - n) * z * (1.0 - z)
            drh = dan @ p["Un"].T
            dar = drh * h_prev * r * (1.0 - r)
            g["Wn"] += X[:, t].T @ dan
            g["Un"] += (r * h_prev).T @ dan
            g["bn"] += dan.sum(axis=0)
            g["Wz"] += X[:, t].T @ daz
            g["Uz"] += h_prev.T @ daz
            g["bz"] += daz.sum(axis=0)
            g["Wr"] += X[:, t].T @ dar
            g["Ur"] += h_prev.T @ dar
            g["br"] += dar.sum(axis=0)
            dX[:, t] = dan @ p["Wn"].T + daz @ p["Wz"].T + dar @ p["Wr"].T
            carry = dh * z + daz @ p["Uz"].T + dar @ p["Ur"].T + drh * r
        return dX, carry


class BiGRULayer:
    """Bidirectional GRU: forward and backward passes concatenated on features."""

    def __init__(self, rng: np.random.Generator, n_in: int, n_hidden: int,
                 name: str = "bigru"):
        self.n_in, self.n_hidden, self.name = n_in, n_hidden, name
        self.fwd = GRULayer(rng, n_in, n_hidden, name=f"{name}.fwd")
        self.bwd = GRULayer(rng, n_in, n_hidden, name=f"{name}.bwd")

    @property
    def n_out(self) -> int:
        return 2 * self.n_hidden

    def forward(self, X: np.ndarray, h0_fwd=None, h0_bwd=None):
        hs_f, _, cache_f = self.fwd.forward(X, h0_fwd)
        hs_b_rev, _, cache_b = self.bwd.forward(X[:, ::-1], h0_bwd)
        hs_b = hs_b_rev[:, ::-1]
        return np.concatenate([hs_f, hs_b], axis=2), (cache_f, cache_b)

    def backward(self, dY: np.ndarray, cache):
        cache_f, cache_b = cache
        H = self.n_hidden
        dX_f, dh0_f = self.fwd.backward(dY[:, :, :H], None, cache_f)
        dX_b_rev, dh0_b = self.bwd.backward(dY[:, ::-1, H:], None, cache_b)
        return dX_f + dX_b_rev[:, ::-1], dh0_f, dh0_b


def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask; identity when rate is 0."""
    if rate <= 0.0:
        return np.ones(shape)
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep
