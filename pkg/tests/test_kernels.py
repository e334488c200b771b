"""Compiled vs numpy kernels: availability, dispatch, and agreement."""

import numpy as np
import pytest

from hintguess.numerics import _kernels_np, backend


def _rand_weights(rng, w, d):
    return tuple(rng.normal(size=s) for s in ((w, d), (w, d), (w, d), (d, d)))


def test_active_backend_reports():
    assert backend.active_backend() in ("cython", "numpy")


def test_forced_numpy(monkeypatch):
    monkeypatch.setenv("HINTGUESS_BACKEND", "numpy")
    assert backend.active_backend() == "numpy"


def test_bad_backend_env(monkeypatch):
    monkeypatch.setenv("HINTGUESS_BACKEND", "gpu")
    with pytest.raises(ValueError):
        backend.active_backend()


@pytest.mark.skipif(not backend.HAVE_EXT, reason="extension not built")
def test_mlp_kernels_agree():
    rng = np.random.default_rng(0)
    ws = [rng.normal(size=(12, 32)), rng.normal(size=(32, 32)), rng.normal(size=(32, 5))]
    bs = [rng.normal(size=32), rng.normal(size=32), rng.normal(size=5)]
    x = rng.normal(size=(7, 12))
    for relu_hidden in (True, False):
        a = backend._fastcore.mlp_forward(x, ws, bs, relu_hidden)
        b = _kernels_np.mlp_forward(x, ws, bs, relu_hidden)
        assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.skipif(not backend.HAVE_EXT, reason="extension not built")
def test_attention_kernels_agree():
    rng = np.random.default_rng(1)
    wq, wk, wv, wo = _rand_weights(rng, 8, 8)
    x = rng.normal(size=(5, 7, 8))
    a = backend._fastcore.sa_forward(x, wq, wk, wv, wo, 1, np.sqrt(8.0))
    b = _kernels_np.sa_forward(x, wq, wk, wv, wo, 1, np.sqrt(8.0))
    assert np.max(np.abs(a - b)) < 1e-12

    y = rng.normal(size=(5, 3, 8))
    a = backend._fastcore.ca_forward(y, x, wq, wk, wv, wo, 1, np.sqrt(8.0))
    b = _kernels_np.ca_forward(y, x, wq, wk, wv, wo, 1, np.sqrt(8.0))
    assert np.max(np.abs(a - b)) < 1e-12


def test_multihead_falls_back_to_numpy():
    rng = np.random.default_rng(2)
    wq, wk, wv, wo = _rand_weights(rng, 8, 8)
    x = rng.normal(size=(2, 4, 8))
    out = backend.sa_forward(x, wq, wk, wv, wo, 2, np.sqrt(4.0))
    want = _kernels_np.sa_forward(x, wq, wk, wv, wo, 2, np.sqrt(4.0))
    assert np.array_equal(out, want)


def test_large_batches_route_to_numpy():
    # auto mode keeps BLAS for wide batches; result must be numpy-identical
    rng = np.random.default_rng(3)
    ws = [rng.normal(size=(6, 8)), rng.normal(size=(8, 2))]
    bs = [rng.normal(size=8), rng.normal(size=2)]
    x = rng.normal(size=(500, 6))
    out = backend.mlp_forward(x, ws, bs)
    assert np.array_equal(out, _kernels_np.mlp_forward(x, ws, bs))
