"""Minimal reverse-mode autodiff over float64 numpy arrays.

Just enough surface for the five Q-architectures: fused affine, matmul,
ReLU, row softmax, mean-pool, reshape/swapaxes (multi-head bookkeeping),
gather, and MSE. Forward builds a graph of `Tensor` nodes; `backward`
walks it once. Gradients are only propagated into nodes that need them
(parameters or nodes built from parameters), so constant inputs are free.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from hintguess.errors import StateError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_backward_ran")

    def __init__(
        self,
        data: np.ndarray,
        parents: tuple["Tensor", ...] = (),
        backward: Optional[Callable[[np.ndarray], None]] = None,
        requires_grad: bool = False,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self._backward_ran = False

    @property
    def shape(self):
        return self.data.shape

    def needs_grad(self) -> bool:
        return self.requires_grad or bool(self._parents)

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g)  # own a copy; callers may hand us views
        else:
            self.grad += g

    def accumulate_owned(self, g: np.ndarray) -> None:
        """Like accumulate, but g is a fresh array the caller hands over."""
        if self.grad is None:
            self.grad = g
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'yes' if self.grad is not None else 'no'})"


def parameter(data: np.ndarray) -> Tensor:
    """A leaf with a persistent, pre-allocated gradient slot."""
    t = Tensor(np.array(data, dtype=np.float64), requires_grad=True)
    t.grad = np.zeros_like(t.data)
    return t


def constant(data: np.ndarray) -> Tensor:
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fused x @ w + b (bias broadcast over leading axes)."""
    out_data = x.data @ w.data + b.data

    def bw(g: np.ndarray) -> None:
        if x.needs_grad():
            x.accumulate_owned(g @ w.data.T)
        g2 = g.reshape(-1, g.shape[-1])
        w.accumulate_owned(x.data.reshape(-1, x.data.shape[-1]).T @ g2)
        b.accumulate_owned(g2.sum(axis=0))

    return Tensor(out_data, (x, w, b), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def bw(g: np.ndarray) -> None:
        if a.needs_grad():
            a.accumulate_owned(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        if b.needs_grad():
            b.accumulate_owned(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return Tensor(out_data, (a, b), bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bw(g: np.ndarray) -> None:
        if a.needs_grad():
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.needs_grad():
            b.accumulate(_unbroadcast(g, b.data.shape))

    return Tensor(out_data, (a, b), bw)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def bw(g: np.ndarray) -> None:
        a.accumulate_owned(np.where(a.data > 0.0, g, 0.0))

    return Tensor(out_data, (a,), bw)


def softmax_last(a: Tensor) -> Tensor:
    """Row softmax over the last axis, max-subtracted for stability."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def bw(g: np.ndarray) -> None:
        a.accumulate_owned(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return Tensor(y, (a,), bw)


def mean_axis(a: Tensor, axis: int) -> Tensor:
    out_data = a.data.mean(axis=axis)
    n = a.data.shape[axis]

    def bw(g: np.ndarray) -> None:
        a.accumulate_owned(np.repeat(np.expand_dims(g / n, axis), n, axis=axis))

    return Tensor(out_data, (a,), bw)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    out_data = a.data.reshape(shape)

    def bw(g: np.ndarray) -> None:
        a.accumulate(g.reshape(a.data.shape))

    return Tensor(out_data, (a,), bw)


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    out_data = np.swapaxes(a.data, ax1, ax2)

    def bw(g: np.ndarray) -> None:
        a.accumulate(np.swapaxes(g, ax1, ax2))

    return Tensor(np.ascontiguousarray(out_data), (a,), bw)


def scale(a: Tensor, factor: float) -> Tensor:
    out_data = a.data * factor

    def bw(g: np.ndarray) -> None:
        a.accumulate_owned(g * factor)

    return Tensor(out_data, (a,), bw)


def attend(q: Tensor, k: Tensor, v: Tensor, inv_denom: float) -> Tensor:
    """Fused softmax(q k^T * inv_denom) v over the last two axes.

    One node instead of four keeps the per-update graph small; the softmax
    matrix is saved for the backward pass.
    """
    logits = (q.data @ np.swapaxes(k.data, -1, -2)) * inv_denom
    logits -= logits.max(axis=-1, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=-1, keepdims=True)
    weights = logits  # (.., S_q, S_k), rows sum to 1
    out_data = weights @ v.data

    def bw(g: np.ndarray) -> None:
        if v.needs_grad():
            v.accumulate_owned(np.swapaxes(weights, -1, -2) @ g)
        d_weights = g @ np.swapaxes(v.data, -1, -2)
        d_logits = weights * (d_weights - (d_weights * weights).sum(axis=-1, keepdims=True))
        if q.needs_grad():
            q.accumulate_owned((d_logits @ k.data) * inv_denom)
        if k.needs_grad():
            k.accumulate_owned((np.swapaxes(d_logits, -1, -2) @ q.data) * inv_denom)

    return Tensor(out_data, (q, k, v), bw)


def gather_last(a: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one entry per row: a is (B, A), idx is (B,) ints -> (B,)."""
    rows = np.arange(a.data.shape[0])
    out_data = a.data[rows, idx]

    def bw(g: np.ndarray) -> None:
        full = np.zeros_like(a.data)
        full[rows, idx] = g  # idx rows are unique per row by construction
        a.accumulate_owned(full)

    return Tensor(out_data, (a,), bw)


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean of squared differences; gradient flows into pred."""
    target = np.asarray(target, dtype=np.float64)
    if pred.data.shape != target.shape:
        raise ValueError(f"mse_loss shape mismatch: {pred.data.shape} vs {target.shape}")
    diff = pred.data - target
    out_data = np.array((diff * diff).mean())

    def bw(g: np.ndarray) -> None:
        pred.accumulate_owned(g * (2.0 / diff.size) * diff)

    return Tensor(out_data, (pred,), bw)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's grad slot.

    A given loss node may be walked once; re-running without a fresh forward
    raises StateError.
    """
    if loss.data.ndim != 0:
        raise ValueError("backward expects a scalar loss")
    if loss._backward_ran:
        raise StateError("backward already ran for this forward pass")
    loss._backward_ran = True

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.needs_grad():
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
        if not node.requires_grad and node is not loss:
            node.grad = None  # free intermediates as we go
