"""Central-finite-difference validation of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from hintguess.numerics import tensor as T
from hintguess.numerics.layers import ParameterSet

Tensor = T.Tensor


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: ParameterSet,
    h: float = 1e-5,
    max_entries_per_param: int = 12,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn must rebuild the forward graph from the current parameter data on
    every call (the same observation/action, fresh tape). Large parameters
    are subsampled to max_entries_per_param entries.
    """
    rng = rng or np.random.default_rng(0)
    params.zero_grads()
    loss = loss_fn()
    T.backward(loss)
    analytic = {name: t.grad.copy() for name, t in params.items()}
    params.zero_grads()

    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        n = flat.size
        if n <= max_entries_per_param:
            entries = np.arange(n)
        else:
            entries = rng.choice(n, size=max_entries_per_param, replace=False)
        for idx in entries:
            orig = flat[idx]
            flat[idx] = orig + h
            up = float(loss_fn().data)
            flat[idx] = orig - h
            down = float(loss_fn().data)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * h)
            a = analytic[name].reshape(-1)[idx]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if err > worst:
                worst = err
    return worst
