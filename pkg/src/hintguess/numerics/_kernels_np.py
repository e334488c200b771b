"""Forward-only numpy kernels (the fallback backend).

Mirrors the autodiff forwards in `layers` op-for-op so both paths agree to
float64 roundoff.
"""

from __future__ import annotations

import numpy as np


def mlp_forward(x: np.ndarray, weights: list, biases: list, relu_hidden: bool = True) -> np.ndarray:
    """x (B, n_in) through affine->ReLU stack, affine final layer."""
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        x = x @ w + b
        if i != last and relu_hidden:
            x = np.maximum(x, 0.0)
    return x


def _softmax_last(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _attend(q, k, v, wo, heads: int, denom: float) -> np.ndarray:
    b, s_q, d = q.shape
    s_k = k.shape[1]
    dh = d // heads
    qh = np.swapaxes(q.reshape(b, s_q, heads, dh), 1, 2)
    kh = np.swapaxes(k.reshape(b, s_k, heads, dh), 1, 2)
    vh = np.swapaxes(v.reshape(b, s_k, heads, dh), 1, 2)
    logits = (qh @ np.swapaxes(kh, -1, -2)) * (1.0 / denom)
    mixed = _softmax_last(logits) @ vh
    merged = np.swapaxes(mixed, 1, 2).reshape(b, s_q, d)
    return merged @ wo


def sa_forward(x: np.ndarray, wq, wk, wv, wo, heads: int, denom: float) -> np.ndarray:
    """One self-attention layer: x (B, S, w) -> (B, S, model_dim)."""
    return _attend(x @ wq, x @ wk, x @ wv, wo, heads, denom)


def ca_forward(
    queries: np.ndarray, context: np.ndarray, wq, wk, wv, wo, heads: int, denom: float
) -> np.ndarray:
    """One cross-attention layer: queries (B, M, w), context (B, S, w) -> (B, M, dim)."""
    return _attend(queries @ wq, context @ wk, context @ wv, wo, heads, denom)
