"""Scripted rule-based players with the Agent batch interface, for oracles."""

import numpy as np

from hintguess.agents import MASK_SENTINEL
from hintguess.game import get_encoder


class ScriptedAgent:
    """Deterministic player driven by decide(h1, h2, query, legal_row) -> action index.

    Decodes encoded observations back to combo indices through the encoder
    table (rows are exact table rows, so byte-equality lookup is safe).
    """

    def __init__(self, config, role, decide):
        self.config = config
        self.role = role
        self.decide = decide
        self.encoder = get_encoder(config)
        self.forward_passes = 0
        self._lookup = {}
        for kind_id in range(4):
            for combo in range(config.spaces.n_combos):
                self._lookup[self.encoder.table[kind_id, combo].tobytes()] = combo

    def q_batch(self, obs: np.ndarray, legal: np.ndarray) -> np.ndarray:
        b, s, _ = obs.shape
        n = (s - 1) // 2
        q = np.full((b, legal.shape[1]), MASK_SENTINEL)
        for i in range(b):
            decoded = [self._lookup[row.tobytes()] for row in obs[i]]
            h1, h2, query = decoded[:n], decoded[n : 2 * n], decoded[-1]
            choice = self.decide(h1, h2, query, legal[i])
            q[i, choice] = 1.0
        return q


def exact_or_lowest(h1, h2, query, legal_row):
    """Hint/guess the query tuple when legal, else the lowest legal index."""
    if legal_row[query]:
        return query
    return int(np.flatnonzero(legal_row)[0])


def rank_matcher(reverse: bool):
    """Match sorted distinct tuples of the two hands by rank (optionally reversed)."""

    def decide_hinter(h1, h2, target, legal_row):
        d1, d2 = sorted(set(h1)), sorted(set(h2))
        if reverse:
            d1 = list(reversed(d1))
        rank = d2.index(target)
        return d1[rank % len(d1)]

    def decide_guesser(h1, h2, hint, legal_row):
        d1, d2 = sorted(set(h1)), sorted(set(h2))
        if reverse:
            d1 = list(reversed(d1))
        rank = d1.index(hint)
        return d2[rank % len(d2)]

    return decide_hinter, decide_guesser
