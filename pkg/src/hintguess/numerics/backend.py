"""Backend selection for the forward-only kernels.

HINTGUESS_BACKEND=auto|cython|numpy (default auto). Auto routes a call to
the compiled extension only where it beats BLAS on this workload: the tiny
single-head attention shapes (narrow model_dim) that dominate the decision
loop. Wide projections and the dense MLP layers stay on numpy/BLAS, which
wins there (see benchmarks/bench_kernels.py). Forcing cython overrides the
shape heuristic but still requires heads == 1. The two backends agree to
float64 roundoff, not bitwise, so checkpoint digests are reproducible per
backend.
"""

from __future__ import annotations

import os

import numpy as np

from hintguess.numerics import _kernels_np

try:
    from hintguess.numerics import _fastcore

    HAVE_EXT = True
except ImportError:
    _fastcore = None
    HAVE_EXT = False

# loop kernels beat batched-BLAS dispatch only while the matrices stay tiny
_MAX_EXT_DIM = 32


def _mode() -> str:
    mode = os.environ.get("HINTGUESS_BACKEND", "auto")
    if mode not in ("auto", "cython", "numpy"):
        raise ValueError(f"HINTGUESS_BACKEND={mode!r} (want auto|cython|numpy)")
    if mode == "cython" and not HAVE_EXT:
        raise RuntimeError("HINTGUESS_BACKEND=cython but the extension is not built")
    return mode


def active_backend() -> str:
    """The backend a small-attention call would use."""
    mode = _mode()
    if mode == "numpy" or (mode == "auto" and not HAVE_EXT):
        return "numpy"
    return "cython"


def _use_ext(heads: int, dim: int) -> bool:
    mode = _mode()
    if mode == "numpy" or not HAVE_EXT or heads != 1:
        return False
    if mode == "cython":
        return True
    return dim <= _MAX_EXT_DIM


def mlp_forward(x: np.ndarray, weights: list, biases: list, relu_hidden: bool = True) -> np.ndarray:
    if _mode() == "cython":
        return _fastcore.mlp_forward(x, weights, biases, relu_hidden)
    return _kernels_np.mlp_forward(x, weights, biases, relu_hidden)


def sa_forward(x, wq, wk, wv, wo, heads: int, denom: float) -> np.ndarray:
    if _use_ext(heads, wq.shape[1]):
        return _fastcore.sa_forward(x, wq, wk, wv, wo, heads, denom)
    return _kernels_np.sa_forward(x, wq, wk, wv, wo, heads, denom)


def ca_forward(queries, context, wq, wk, wv, wo, heads: int, denom: float) -> np.ndarray:
    if _use_ext(heads, wq.shape[1]):
        return _fastcore.ca_forward(queries, context, wq, wk, wv, wo, heads, denom)
    return _kernels_np.ca_forward(queries, context, wq, wk, wv, wo, heads, denom)
