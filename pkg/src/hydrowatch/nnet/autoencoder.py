"""Sequence-to-sequence GRU autoencoder for Mel-spectrogram encodings.

Encoder: two GRU layers; the concatenated final hidden states of both
layers form the latent encoding (2 x hidden, 512 at defaults). A tanh
bridge maps the latent to the initial hidden states of a two-layer
bidirectional GRU decoder whose teacher input is the time-reversed
spectrogram shifted by one frame with a leading zero. A time-distributed
tanh head restores the band dimension; the loss is the per-sample RMSE
against the time-reversed input, averaged over the batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsp import MelSpectrogram
from ..errors import ConfigurationError, InputError, TrainingDivergedError
from .layers import BiGRULayer, Dense, GRULayer, dropout_mask
from .optim import make_optimizer


@dataclass
class TrainingConfig:
    epochs: int = 250
    batch_size: int = 96
    learning_rate: float = 0.001
    optimizer: str = "ADAM"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")


@dataclass
class LatentEncoding:
    """Encoder output; values lie in [-1, 1] (GRU tanh range)."""

    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


class AutoencoderModel:
    def __init__(self, n_mels: int = 128, hidden_size: int = 256,
                 dropout_rate: float = 0.2, seed: int = 0):
        self.n_mels = n_mels
        self.hidden_size = hidden_size
        self.dropout_rate = dropout_rate
        self.seed = seed
        self.latent_size = 2 * hidden_size
        self.decoder_state_size = 4 * hidden_size  # 2 layers x 2 directions
        rng = np.random.default_rng(seed)
        H = hidden_size
        self.enc1 = GRULayer(rng, n_mels, H, name="enc1")
        self.enc2 = GRULayer(rng, H, H, name="enc2")
        self.bridge = Dense(rng, self.latent_size, self.decoder_state_size,
                            activation="tanh", name="bridge")
        self.dec1 = BiGRULayer(rng, n_mels, H, name="dec1")
        self.dec2 = BiGRULayer(rng, 2 * H, H, name="dec2")
        self.head = Dense(rng, 2 * H, n_mels, activation="tanh", name="head")
        self._dropout_rng = np.random.default_rng(seed + 1)

    # -- parameter plumbing ------------------------------------------------
    def _layers(self):
        return [self.enc1, self.enc2, self.bridge,
                self.dec1.fwd, self.dec1.bwd, self.dec2.fwd, self.dec2.bwd,
                self.head]

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v for layer in self._layers()
                for k, v in layer.params.items()}

    def named_grads(self) -> dict[str, np.ndarray]:
        return {f"{layer.name}.{k}": v for layer in self._layers()
                for k, v in layer.grads.items()}

    def zero_grads(self) -> None:
        for layer in self._layers():
            for gname in layer.grads:
                layer.grads[gname][...] = 0.0

    # -- forward / backward ------------------------------------------------
    @staticmethod
    def _as_batch(mel) -> np.ndarray:
        """[bands, frames] (or MelSpectrogram, or stacked batch) -> [B, T, M]."""
        if isinstance(mel, MelSpectrogram):
            mel = mel.values
        arr = np.asarray(mel, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        return np.transpose(arr, (0, 2, 1))  # [B, frames, bands]

    def _decoder_input(self, X: np.ndarray) -> np.ndarray:
        rev = X[:, ::-1]
        shifted = np.zeros_like(rev)
        shifted[:, 1:] = rev[:, :-1]
        return shifted

    def forward_batch(self, X: np.ndarray, training: bool = False):
        """X: [B, T, n_mels]. Returns (latent [B, 2H], Y [B, T, M], cache)."""
        if X.shape[2] != self.n_mels:
            raise InputError(
                f"expected {self.n_mels} Mel bands, got {X.shape[2]}")
        rate = self.dropout_rate if training else 0.0
        H = self.hidden_size

        e1, h1, c_e1 = self.enc1.forward(X)
        m1 = dropout_mask(self._dropout_rng, e1.shape, rate)
        e1d = e1 * m1
        e2, h2, c_e2 = self.enc2.forward(e1d)
        latent = np.concatenate([h1, h2], axis=1)

        binit, c_bridge = self.bridge.forward(latent)
        h0 = [binit[:, i * H:(i + 1) * H] for i in range(4)]

        dec_in = self._decoder_input(X)
        d1, c_d1 = self.dec1.forward(dec_in, h0[0], h0[1])
        m2 = dropout_mask(self._dropout_rng, d1.shape, rate)
        d1d = d1 * m2
        d2, c_d2 = self.dec2.forward(d1d, h0[2], h0[3])
        Y, c_head = self.head.forward(d2)
        cache = (X, c_e1, m1, c_e2, c_bridge, c_d1, m2, c_d2, c_head)
        return latent, Y, cache

    def loss_batch(self, Y: np.ndarray, X: np.ndarray):
        """Per-sample RMSE against the time-reversed input; returns (mean, per-sample)."""
        rev = X[:, ::-1]
        diff = Y - rev
        per_sample = np.sqrt(np.mean(diff ** 2, axis=(1, 2)))
        return float(per_sample.mean()), per_sample

    def backward_batch(self, Y: np.ndarray, X: np.ndarray, cache) -> None:
        """Accumulates parameter gradients of the mean per-sample RMSE loss."""
        _, c_e1, m1, c_e2, c_bridge, c_d1, m2, c_d2, c_head = cache
        B = X.shape[0]
        T, M = X.shape[1], X.shape[2]
        rev = X[:, ::-1]
        diff = Y - rev
        rmse = np.sqrt(np.mean(diff ** 2, axis=(1, 2)))
        scale = np.where(rmse > 0, 1.0 / (np.maximum(rmse, 1e-300) * T * M * B), 0.0)
        dY = diff * scale[:, None, None]

        dD2 = self.head.backward(dY, c_head)
        dD1d, dh0_2f, dh0_2b = self.dec2.backward(dD2, c_d2)
        dD1 = dD1d * m2
        _, dh0_1f, dh0_1b = self.dec1.backward(dD1, c_d1)
        dbinit = np.concatenate([dh0_1f, dh0_1b, dh0_2f, dh0_2b], axis=1)
        dlatent = self.bridge.backward(dbinit, c_bridge)
        H = self.hidden_size
        dh1, dh2 = dlatent[:, :H], dlatent[:, H:]
        dE1d, _ = self.enc2.backward(None, dh2, c_e2)
        dE1 = dE1d * m1
        self.enc1.backward(dE1, dh1, c_e1)


def ae_forward(model: AutoencoderModel, mel, training_mode: bool = False):
    """Encode and reconstruct one Mel-spectrogram.

    Returns (LatentEncoding, reconstruction [bands x frames], rmse).
    """
    X = model._as_batch(mel)
    latent, Y, _ = model.forward_batch(X, training=training_mode)
    _, per_sample = model.loss_batch(Y, X)
    recon = np.transpose(Y[0], (1, 0))
    return LatentEncoding(latent[0]), recon, float(per_sample[0])


def ae_encode_batch(model: AutoencoderModel, mels) -> np.ndarray:
    """Latent encodings for a sequence of Mel-spectrograms, [N, latent_size]."""
    X = np.stack([model._as_batch(m)[0] for m in mels])
    latent, _, _ = model.forward_batch(X, training=False)
    return latent


def ae_reconstruction_errors(model: AutoencoderModel, mels) -> np.ndarray:
    X = np.stack([model._as_batch(m)[0] for m in mels])
    _, Y, _ = model.forward_batch(X, training=False)
    _, per_sample = model.loss_batch(Y, X)
    return per_sample


def ae_train(dataset, cfg: TrainingConfig, n_mels: int | None = None,
             hidden_size: int = 256, dropout_rate: float = 0.2,
             model: AutoencoderModel | None = None):
    """Train an autoencoder; deterministic given (seed, dataset order).

    Returns (model, history) where history is the per-epoch mean RMSE.
    """
    mels = [m.values if isinstance(m, MelSpectrogram) else np.asarray(m, dtype=np.float64)
            for m in dataset]
    if not mels:
        raise InputError("dataset is empty")
    X_all = np.stack([m.T for m in mels])  # [N, T, M]
    if model is None:
        model = AutoencoderModel(n_mels=n_mels or X_all.shape[2],
                                 hidden_size=hidden_size,
                                 dropout_rate=dropout_rate, seed=cfg.seed)
    model._dropout_rng = np.random.default_rng(cfg.seed + 1)
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    n = len(X_all)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            batch = X_all[order[start:start + cfg.batch_size]]
            model.zero_grads()
            _, Y, cache = model.forward_batch(batch, training=True)
            loss, _ = model.loss_batch(Y, batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi)
            model.backward_batch(Y, batch, cache)
            opt.step(model.named_params(), model.named_grads())
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return model, history
