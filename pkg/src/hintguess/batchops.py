"""Vectorized game primitives shared by the trainer and the evaluator."""

from __future__ import annotations

import numpy as np


def permute_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independently shuffle each row."""
    order = np.argsort(rng.random(rows.shape), axis=1)
    return np.take_along_axis(rows, order, axis=1)


def legal_mask_from_hands(hands: np.ndarray, n_actions: int) -> np.ndarray:
    """hands (B, N) combo indices -> (B, n_actions) bool legality."""
    b = hands.shape[0]
    mask = np.zeros((b, n_actions), dtype=bool)
    mask[np.repeat(np.arange(b), hands.shape[1]), hands.reshape(-1)] = True
    return mask


def egreedy_batch(
    q: np.ndarray, legal: np.ndarray, eps: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Per-row epsilon-greedy; greedy ties resolve to the lowest index."""
    greedy = np.argmax(q, axis=1)
    ep_rows, legal_cols = np.nonzero(legal)
    counts = np.bincount(ep_rows, minlength=q.shape[0])
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    u = rng.random(q.shape[0])
    pick = rng.integers(0, counts)
    explore = legal_cols[starts + pick]
    return np.where(u < eps, explore, greedy)


def greedy_batch(q: np.ndarray) -> np.ndarray:
    return np.argmax(q, axis=1)


def uniform_legal_batch(legal: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw from each row's legal set."""
    ep_rows, legal_cols = np.nonzero(legal)
    counts = np.bincount(ep_rows, minlength=legal.shape[0])
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return legal_cols[starts + rng.integers(0, counts)]
