#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the forward paths the live decision loop actually hits (single
observations and small/large batches) plus end-to-end greedy decisions per
architecture. Run after `pip install -e .`:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from hintguess.numerics import _kernels_np, backend
from hintguess.agents import ArchitectureKind, build_agent
from hintguess.game import GameConfig, get_encoder, standard_spaces
from hintguess.batchops import legal_mask_from_hands


def _time(fn, min_time=0.4):
    fn()  # warm up
    n, total = 0, 0.0
    while total < min_time:
        t0 = time.perf_counter()
        fn()
        total += time.perf_counter() - t0
        n += 1
    return total / n


def bench_raw_kernels():
    rng = np.random.default_rng(0)
    ws = [rng.normal(size=(56, 128)), rng.normal(size=(128, 128)), rng.normal(size=(128, 128)), rng.normal(size=(128, 9))]
    bs = [rng.normal(size=s.shape[1]) for s in ws]
    wq, wk, wv, wo = (rng.normal(size=(8, 8)) for _ in range(4))

    print(f"{'kernel':<28}{'batch':>6}{'numpy':>12}{'cython':>12}{'speedup':>9}")
    for batch in (1, 8, 64, 500):
        x = rng.normal(size=(batch, 56))
        t_np = _time(lambda: _kernels_np.mlp_forward(x, ws, bs))
        row = f"{'mlp 56-128x3-9':<28}{batch:>6}{t_np * 1e6:>10.1f}us"
        if backend.HAVE_EXT:
            t_cy = _time(lambda: backend._fastcore.mlp_forward(x, ws, bs, True))
            row += f"{t_cy * 1e6:>10.1f}us{t_np / t_cy:>8.1f}x"
        print(row)
    for batch in (1, 8, 64, 500):
        x = rng.normal(size=(batch, 7, 8))
        t_np = _time(lambda: _kernels_np.sa_forward(x, wq, wk, wv, wo, 1, np.sqrt(8.0)))
        row = f"{'self-attn seq7 d8':<28}{batch:>6}{t_np * 1e6:>10.1f}us"
        if backend.HAVE_EXT:
            t_cy = _time(lambda: backend._fastcore.sa_forward(x, wq, wk, wv, wo, 1, np.sqrt(8.0)))
            row += f"{t_cy * 1e6:>10.1f}us{t_np / t_cy:>8.1f}x"
        print(row)


def bench_decisions():
    config = GameConfig(hand_size=3, spaces=standard_spaces())
    enc = get_encoder(config)
    rng = np.random.default_rng(1)
    hands = rng.integers(0, 9, size=(1, 3))
    obs_idx = np.concatenate([hands, rng.integers(0, 9, size=(1, 3)), rng.integers(0, 9, size=(1, 1))], axis=1)
    obs = enc.materialize(enc.kinds("hinter"), obs_idx)
    legal = legal_mask_from_hands(hands, 9)

    import os

    print(f"\n{'architecture':<16}{'numpy':>14}{'active (' + backend.active_backend() + ')':>18}")
    for name in ("mlp", "attn", "ca2i", "sa2i", "mlp_action_in"):
        agent = build_agent(ArchitectureKind(name), config, "hinter", 0)
        os.environ["HINTGUESS_BACKEND"] = "numpy"
        t_np = _time(lambda: agent.q_batch(obs, legal))
        os.environ["HINTGUESS_BACKEND"] = "auto"
        t_auto = _time(lambda: agent.q_batch(obs, legal))
        print(f"{name:<16}{t_np * 1e6:>12.1f}us{t_auto * 1e6:>14.1f}us   ({t_np / t_auto:.1f}x)")


if __name__ == "__main__":
    print(f"extension built: {backend.HAVE_EXT}; active backend: {backend.active_backend()}\n")
    bench_raw_kernels()
    bench_decisions()
