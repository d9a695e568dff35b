"""Central finite-difference verification of the analytic gradients."""
from __future__ import annotations

import numpy as np

from ..errors import InputError
from .autoencoder import AutoencoderModel
from .mlp import MlpModel


def _ae_loss_and_grads(model: AutoencoderModel, X: np.ndarray):
    model.zero_grads()
    _, Y, cache = model.forward_batch(X, training=False)
    loss, _ = model.loss_batch(Y, X)
    model.backward_batch(Y, X, cache)
    return loss, {k: v.copy() for k, v in model.named_grads().items()}


def _ae_loss(model: AutoencoderModel, X: np.ndarray) -> float:
    _, Y, _ = model.forward_batch(X, training=False)
    loss, _ = model.loss_batch(Y, X)
    return loss


def _mlp_loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray):
    model.zero_grads()
    probs, cache = model.forward_batch(X)
    loss = model.loss_batch(probs, y)
    model.backward_batch(probs, y, cache)
    return loss, {k: v.copy() for k, v in model.named_grads().items()}


def _mlp_loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    probs, _ = model.forward_batch(X)
    return model.loss_batch(probs, y)


def gradient_check(model, sample, epsilon: float = 1e-5,
                   training_mode: bool = False) -> float:
    """Maximum relative error between analytic and numeric gradients.

    `sample` is a batched input array for an autoencoder, or an (inputs,
    labels) pair for a classifier. Dropout must be disabled: checking a
    stochastic forward pass is meaningless.
    """
    if epsilon <= 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if training_mode:
        raise InputError("gradient check requires dropout disabled (training_mode off)")

    if isinstance(model, AutoencoderModel):
        X = model._as_batch(sample)
        _, analytic = _ae_loss_and_grads(model, X)

        def loss_fn():
            return _ae_loss(model, X)
    elif isinstance(model, MlpModel):
        X, y = sample
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        _, analytic = _mlp_loss_and_grads(model, X, y)

        def loss_fn():
            return _mlp_loss(model, X, y)
    else:
        raise InputError(f"unsupported model type: {type(model).__name__}")

    params = model.named_params()
    max_rel = 0.0
    for name, p in params.items():
        ga = analytic[name]
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + epsilon
            lp = loss_fn()
            p[idx] = orig - epsilon
            lm = loss_fn()
            p[idx] = orig
            gn = (lp - lm) / (2.0 * epsilon)
            denom = max(abs(ga[idx]) + abs(gn), 1e-8)
            max_rel = max(max_rel, abs(ga[idx] - gn) / denom)
            it.iternext()
    return max_rel
