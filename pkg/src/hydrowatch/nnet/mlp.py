"""Softmax MLP classifier over latent encodings."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, InputError, TrainingDivergedError
from .autoencoder import LatentEncoding, TrainingConfig
from .layers import Dense
from .optim import make_optimizer


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class MlpModel:
    """Two 256-unit hidden layers and a softmax output.

    Hidden activation defaults to ReLU; tanh is available as a config
    option.
    """

    def __init__(self, n_in: int = 512, n_classes: int = 10, hidden_size: int = 256,
                 hidden_activation: str = "relu", seed: int = 0):
        if hidden_activation not in ("relu", "tanh"):
            raise ConfigurationError(f"hidden activation must be relu or tanh")
        self.n_in, self.n_classes = n_in, n_classes
        self.hidden_size = hidden_size
        self.hidden_activation = hidden_activation
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.fc1 = Dense(rng, n_in, hidden_size, activation=hidden_activation, name="fc1")
        self.fc2 = Dense(rng, hidden_size, hidden_size, activation=hidden_activation, name="fc2")
        self.out = Dense(rng, hidden_size, n_classes, activation="linear", name="out")

    def _layers(self):
        return [self.fc1, self.fc2, self.out]

    def named_params(self):
        return {f"{l.name}.{k}": v for l in self._layers() for k, v in l.params.items()}

    def named_grads(self):
        return {f"{l.name}.{k}": v for l in self._layers() for k, v in l.grads.items()}

    def zero_grads(self):
        for l in self._layers():
            for k in l.grads:
                l.grads[k][...] = 0.0

    def forward_batch(self, X: np.ndarray):
        if X.shape[1] != self.n_in:
            raise InputError(f"expected input length {self.n_in}, got {X.shape[1]}")
        h1, c1 = self.fc1.forward(X)
        h2, c2 = self.fc2.forward(h1)
        logits, c3 = self.out.forward(h2)
        return softmax(logits), (c1, c2, c3)

    def loss_batch(self, probs: np.ndarray, labels: np.ndarray) -> float:
        eps = 1e-12
        return float(-np.mean(np.log(probs[np.arange(len(labels)), labels] + eps)))

    def backward_batch(self, probs: np.ndarray, labels: np.ndarray, cache) -> None:
        c1, c2, c3 = cache
        B = len(labels)
        dlogits = probs.copy()
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B
        dh2 = self.out.backward(dlogits, c3)
        dh1 = self.fc2.backward(dh2, c2)
        self.fc1.backward(dh1, c1)


def _as_matrix(encodings) -> np.ndarray:
    rows = [e.values if isinstance(e, LatentEncoding) else np.asarray(e, dtype=np.float64)
            for e in encodings]
    return np.stack(rows)


def mlp_train(encodings, labels, cfg: TrainingConfig,
              n_classes: int | None = None, hidden_size: int = 256,
              hidden_activation: str = "relu"):
    """Train the classifier; deterministic under a fixed seed.

    Returns (model, history) where history is the per-epoch mean
    cross-entropy.
    """
    X = _as_matrix(encodings)
    y = np.asarray(labels, dtype=np.int64)
    if len(X) != len(y):
        raise InputError("encodings and labels must have equal length")
    distinct = np.unique(y)
    if len(distinct) < 2:
        raise ConfigurationError("training requires at least 2 distinct classes")
    k = n_classes if n_classes is not None else int(distinct.max()) + 1
    model = MlpModel(n_in=X.shape[1], n_classes=k, hidden_size=hidden_size,
                     hidden_activation=hidden_activation, seed=cfg.seed)
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(X))
        losses = []
        for bi, start in enumerate(range(0, len(X), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            model.zero_grads()
            probs, cache = model.forward_batch(X[idx])
            loss = model.loss_batch(probs, y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi)
            model.backward_batch(probs, y[idx], cache)
            opt.step(model.named_params(), model.named_grads())
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return model, history


def mlp_predict(model: MlpModel, enc) -> np.ndarray:
    """Probability vector over classes (non-negative, sums to 1)."""
    x = enc.values if isinstance(enc, LatentEncoding) else np.asarray(enc, dtype=np.float64)
    probs, _ = model.forward_batch(x[None])
    return probs[0]


def mlp_predict_batch(model: MlpModel, encodings) -> np.ndarray:
    probs, _ = model.forward_batch(_as_matrix(encodings))
    return probs
