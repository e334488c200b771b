"""Parameter containers, initialization, and layer forward passes.

Layer forwards come in one flavor here: autodiff (`Tensor` in, `Tensor` out),
used for training and as the reference semantics. The forward-only fast path
lives in `backend` / `_kernels_np` / `_fastcore` and must agree with these to
~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from hintguess.errors import ConfigurationError
from hintguess.numerics import tensor as T
from hintguess.numerics.tensor import Tensor

SCALE_BY_KEY_DIM = "by_key_dim"
SCALE_BY_INPUT_COUNT = "by_input_count"


@dataclass(frozen=True)
class AttentionSpec:
    heads: int = 1
    layers: int = 1
    model_dim: int = 0  # 0 = match the input width
    scale_mode: str = SCALE_BY_KEY_DIM

    def __post_init__(self):
        if self.heads < 1 or self.layers < 1:
            raise ConfigurationError("heads and layers must be >= 1")
        if self.scale_mode not in (SCALE_BY_KEY_DIM, SCALE_BY_INPUT_COUNT):
            raise ConfigurationError(f"unknown scale_mode {self.scale_mode!r}")
        if self.model_dim and self.model_dim % self.heads:
            raise ConfigurationError("model_dim must be divisible by heads")

    def resolved_dim(self, input_width: int) -> int:
        dim = self.model_dim or input_width
        if dim % self.heads:
            raise ConfigurationError(
                f"model_dim {dim} not divisible by {self.heads} heads"
            )
        return dim


class ParameterSet:
    """Named parameters with a stable order and persistent gradient slots."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter {name!r}")
        t = T.parameter(data)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def num_scalars(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad[...] = 0.0

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if list(arrays) != self.names():
            raise ConfigurationError("parameter names/order mismatch on load")
        for name, arr in arrays.items():
            t = self._params[name]
            if t.data.shape != arr.shape:
                raise ConfigurationError(f"shape mismatch for {name!r}")
            t.data[...] = arr


def sgd_step(params: ParameterSet, lr: float) -> None:
    """p <- p - lr * grad for every parameter, then clear the gradients."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    for _, t in params.items():
        t.data -= lr * t.grad
        t.grad[...] = 0.0


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def add_linear(params: ParameterSet, name: str, n_in: int, n_out: int, rng) -> None:
    params.add(f"{name}.weight", _uniform(rng, n_in, (n_in, n_out)))
    params.add(f"{name}.bias", np.zeros(n_out))


def add_mlp(params: ParameterSet, prefix: str, sizes: Sequence[int], rng) -> None:
    """sizes = [in, hidden..., out]; layer names {prefix}{i} starting at 1."""
    for i in range(len(sizes) - 1):
        add_linear(params, f"{prefix}{i + 1}", sizes[i], sizes[i + 1], rng)


def add_attention(
    params: ParameterSet, prefix: str, input_width: int, spec: AttentionSpec, rng
) -> None:
    dim = spec.resolved_dim(input_width)
    width = input_width
    for layer in range(1, spec.layers + 1):
        for proj in ("wq", "wk", "wv"):
            params.add(f"{prefix}{layer}.{proj}", _uniform(rng, width, (width, dim)))
        params.add(f"{prefix}{layer}.wo", _uniform(rng, dim, (dim, dim)))
        width = dim


def mlp_sizes(params: ParameterSet, prefix: str) -> list[int]:
    sizes = []
    i = 1
    while f"{prefix}{i}.weight" in params:
        w = params[f"{prefix}{i}.weight"]
        if i == 1:
            sizes.append(w.data.shape[0])
        sizes.append(w.data.shape[1])
        i += 1
    return sizes


def mlp_forward_t(
    params: ParameterSet, prefix: str, x: Tensor, relu_hidden: bool = True
) -> Tensor:
    """Affine stack with ReLU on hidden layers, affine output."""
    i = 1
    while f"{prefix}{i}.weight" in params:
        w = params[f"{prefix}{i}.weight"]
        if x.data.shape[-1] != w.data.shape[0]:
            raise ConfigurationError(
                f"input width {x.data.shape[-1]} != layer width {w.data.shape[0]}"
            )
        x = T.linear(x, w, params[f"{prefix}{i}.bias"])
        if f"{prefix}{i + 1}.weight" in params and relu_hidden:
            x = T.relu(x)
        i += 1
    return x


def _split_heads(x: Tensor, heads: int) -> Tensor:
    b, s, d = x.data.shape
    return T.swapaxes(T.reshape(x, (b, s, heads, d // heads)), 1, 2)


def _merge_heads(x: Tensor) -> Tensor:
    b, h, s, dh = x.data.shape
    return T.reshape(T.swapaxes(x, 1, 2), (b, s, h * dh))


def _attend(
    q: Tensor, k: Tensor, v: Tensor, wo: Tensor, spec: AttentionSpec, n_keys: int
) -> Tensor:
    heads = spec.heads
    dh = q.data.shape[-1] // heads
    if spec.scale_mode == SCALE_BY_INPUT_COUNT:
        denom = math.sqrt(n_keys)
    else:
        denom = math.sqrt(dh)
    if heads > 1:
        q, k, v = (_split_heads(t, heads) for t in (q, k, v))
    mixed = T.attend(q, k, v, 1.0 / denom)
    if heads > 1:
        mixed = _merge_heads(mixed)
    return T.matmul(mixed, wo)


def self_attention_t(
    params: ParameterSet, prefix: str, x: Tensor, spec: AttentionSpec
) -> Tensor:
    """x is (B, S, w); returns (B, S, model_dim). Stacks spec.layers layers."""
    for layer in range(1, spec.layers + 1):
        q = T.matmul(x, params[f"{prefix}{layer}.wq"])
        k = T.matmul(x, params[f"{prefix}{layer}.wk"])
        v = T.matmul(x, params[f"{prefix}{layer}.wv"])
        x = _attend(q, k, v, params[f"{prefix}{layer}.wo"], spec, x.data.shape[1])
    return x


def cross_attention_t(
    params: ParameterSet, prefix: str, queries: Tensor, context: Tensor, spec: AttentionSpec
) -> Tensor:
    """queries (B, M, w), context (B, S, w) -> (B, M, model_dim).

    Keys/values always come from the original context; queries flow through
    the layer stack.
    """
    y = queries
    for layer in range(1, spec.layers + 1):
        q = T.matmul(y, params[f"{prefix}{layer}.wq"])
        k = T.matmul(context, params[f"{prefix}{layer}.wk"])
        v = T.matmul(context, params[f"{prefix}{layer}.wv"])
        y = _attend(q, k, v, params[f"{prefix}{layer}.wo"], spec, context.data.shape[1])
    return y


# --- list-of-vectors convenience surface -----------------------------------


def mlp_forward(params: ParameterSet, x, prefix: str = "fc") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = mlp_forward_t(params, prefix, T.constant(x.reshape(1, -1)))
    return out.data[0]


def self_attention(params: ParameterSet, inputs, spec: AttentionSpec, prefix: str = "sa") -> list[np.ndarray]:
    if len(inputs) == 0:
        raise ValueError("self_attention needs at least one input vector")
    x = T.constant(np.stack([np.asarray(v, dtype=np.float64) for v in inputs])[None, :, :])
    out = self_attention_t(params, prefix, x, spec)
    return [row for row in out.data[0]]


def cross_attention(
    params: ParameterSet, queries, context, spec: AttentionSpec, prefix: str = "ca"
) -> list[np.ndarray]:
    if len(queries) == 0 or len(context) == 0:
        raise ValueError("cross_attention needs non-empty queries and context")
    y = T.constant(np.stack([np.asarray(v, dtype=np.float64) for v in queries])[None, :, :])
    x = T.constant(np.stack([np.asarray(v, dtype=np.float64) for v in context])[None, :, :])
    out = cross_attention_t(params, prefix, y, x, spec)
    return [row for row in out.data[0]]
