"""Cross-play matrices, cluster detection, policy examination, and baselines.

All match play here is greedy (epsilon 0) over frozen agents unless a caller
asks otherwise; scores are per-game common rewards in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from hintguess.errors import ConfigurationError
from hintguess.agents import Agent
from hintguess.batchops import (
    egreedy_batch,
    greedy_batch,
    legal_mask_from_hands,
    permute_rows,
    uniform_legal_batch,
)
from hintguess.game import (
    GUESSER,
    HINTER,
    ONE_HOT,
    SINUSOIDAL,
    EpisodeState,
    GameConfig,
    Scenario,
    get_encoder,
    scenario_library,
    standard_spaces,
)

_BLOCK = 8192


@dataclass
class MatchLog:
    """Per-game record of a frozen pair evaluation."""

    hinter_hands: np.ndarray  # (G, N) combo indices
    guesser_hands: np.ndarray  # (G, N)
    target_pos: np.ndarray  # (G,)
    hints: np.ndarray  # (G,) grid indices
    guesses: np.ndarray  # (G,)
    rewards: np.ndarray  # (G,) 0/1

    @property
    def targets(self) -> np.ndarray:
        return self.guesser_hands[np.arange(len(self.target_pos)), self.target_pos]

    def mean_score(self) -> float:
        return float(self.rewards.mean())


def _check_pair(hinter: Agent, guesser: Agent) -> None:
    if hinter.role != HINTER or guesser.role != GUESSER:
        raise ConfigurationError("pair must be (hinter-role agent, guesser-role agent)")
    if hinter.config != guesser.config:
        raise ConfigurationError("agents were built for different game configs")


def _deal_block(config: GameConfig, b: int, rng, replace: bool = True):
    combos = config.spaces.n_combos
    n = config.hand_size
    if replace:
        h1 = rng.integers(0, combos, size=(b, n))
        h2 = h1.copy() if config.same_hand else rng.integers(0, combos, size=(b, n))
    else:
        h1 = np.argsort(rng.random((b, combos)), axis=1)[:, :n]
        h2 = h1.copy() if config.same_hand else np.argsort(rng.random((b, combos)), axis=1)[:, :n]
    target_pos = rng.integers(0, n, size=b)
    return h1, h2, target_pos


def _play_block(hinter, guesser, h1, h2, target_pos, rng, epsilon: float):
    """Run one batch of episodes; returns (hints, guesses, rewards)."""
    config = hinter.config
    enc = get_encoder(config)
    b = len(target_pos)
    eps = np.full(b, epsilon)
    target_combo = h2[np.arange(b), target_pos]

    obs_h = np.concatenate([permute_rows(h1, rng), permute_rows(h2, rng), target_combo[:, None]], axis=1)
    legal_h = legal_mask_from_hands(h1, config.n_actions)
    q_h = hinter.q_batch(enc.materialize(enc.kinds_for(HINTER, h1.shape[1]), obs_h), legal_h)
    hint = greedy_batch(q_h) if epsilon == 0.0 else egreedy_batch(q_h, legal_h, eps, rng)

    obs_g = np.concatenate([permute_rows(h1, rng), permute_rows(h2, rng), hint[:, None]], axis=1)
    legal_g = legal_mask_from_hands(h2, config.n_actions)
    q_g = guesser.q_batch(enc.materialize(enc.kinds_for(GUESSER, h2.shape[1]), obs_g), legal_g)
    guess = greedy_batch(q_g) if epsilon == 0.0 else egreedy_batch(q_g, legal_g, eps, rng)

    return hint, guess, (guess == target_combo).astype(np.float64)


def play_match(
    hinter: Agent,
    guesser: Agent,
    games: int,
    rng: np.random.Generator,
    greedy: bool = True,
    epsilon: float = 0.0,
) -> MatchLog:
    """Play fresh episodes with a frozen pair and log every game."""
    _check_pair(hinter, guesser)
    eps = 0.0 if greedy else epsilon
    parts = []
    done = 0
    while done < games:
        b = min(_BLOCK, games - done)
        h1, h2, tp = _deal_block(hinter.config, b, rng)
        hint, guess, reward = _play_block(hinter, guesser, h1, h2, tp, rng, eps)
        parts.append((h1, h2, tp, hint, guess, reward))
        done += b
    return MatchLog(*(np.concatenate(cols) for cols in zip(*parts)))


# --- cross-play -------------------------------------------------------------


@dataclass
class CrossPlayReport:
    seeds: list[int]
    matrix: np.ndarray  # (S, S) score, hinter seed x guesser seed
    games_per_cell: int
    clusters: list[list[int]] = field(default_factory=list)  # seed groups
    cluster_labels: list[str] = field(default_factory=list)  # Sim | Dissim | none

    @property
    def sp_scores(self) -> np.ndarray:
        return np.diag(self.matrix)

    @property
    def xp_scores(self) -> np.ndarray:
        off = ~np.eye(len(self.seeds), dtype=bool)
        return self.matrix[off]

    def summary(self) -> dict:
        sp, xp = self.sp_scores, self.xp_scores
        out = {
            "seeds": self.seeds,
            "games_per_cell": self.games_per_cell,
            "sp_mean": float(sp.mean()),
            "sp_se": float(sp.std(ddof=1) / math.sqrt(len(sp))) if len(sp) > 1 else 0.0,
            "clusters": [
                {
                    "seeds": members,
                    "label": label,
                    "xp_mean": self.cluster_xp_mean(members),
                    "sp_mean": float(np.mean([self.matrix[self.seeds.index(s)][self.seeds.index(s)] for s in members])),
                }
                for members, label in zip(self.clusters, self.cluster_labels)
            ],
        }
        if len(xp):
            out["xp_mean"] = float(xp.mean())
            out["xp_se"] = float(xp.std(ddof=1) / math.sqrt(len(xp))) if len(xp) > 1 else 0.0
        return out

    def cluster_xp_mean(self, members: list[int]) -> float:
        idx = [self.seeds.index(s) for s in members]
        cells = [self.matrix[i, j] for i in idx for j in idx if i != j]
        return float(np.mean(cells)) if cells else float("nan")

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), **self.summary()}


def crossplay_matrix(
    pairs: Sequence[tuple[Agent, Agent]],
    games_per_cell: int,
    seeds: Optional[Sequence[int]] = None,
    base_seed: int = 9999,
) -> CrossPlayReport:
    """Score every ordered (hinter_i, guesser_j) pairing on fresh games."""
    n = len(pairs)
    if n < 1:
        raise ConfigurationError("need at least one checkpoint pair")
    seeds = list(seeds) if seeds is not None else list(range(n))
    matrix = np.zeros((n, n))
    for i, (hinter, _) in enumerate(pairs):
        for j, (_, guesser) in enumerate(pairs):
            rng = np.random.default_rng([base_seed, i, j])
            matrix[i, j] = play_match(hinter, guesser, games_per_cell, rng).mean_score()
    return CrossPlayReport(seeds, matrix, games_per_cell)


def detect_clusters(
    report: CrossPlayReport,
    exact_match_rates: Optional[dict[int, float]] = None,
    theta: float = 0.9,
) -> CrossPlayReport:
    """Graph clustering: connect seeds whose symmetrized XP is close to SP.

    Edge i~j iff sym_xp(i, j) >= theta * min(SP_i, SP_j); clusters are the
    connected components with >= 2 members. A cluster is labeled Sim when its
    hinters hint the exact-match card in the exact-match probe more than half
    the time, Dissim when less.
    """
    m = report.matrix
    n = len(report.seeds)
    sym = (m + m.T) / 2.0
    sp = np.diag(m)
    adj = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if sym[i, j] >= theta * min(sp[i], sp[j]):
                adj[i][j] = adj[j][i] = True

    unvisited = set(range(n))
    clusters: list[list[int]] = []
    while unvisited:
        root = min(unvisited)
        comp, stack = [], [root]
        unvisited.discard(root)
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in list(unvisited):
                if adj[v][u]:
                    unvisited.discard(u)
                    stack.append(u)
        if len(comp) >= 2:
            clusters.append(sorted(report.seeds[i] for i in comp))
    clusters.sort()

    labels = []
    for members in clusters:
        if not exact_match_rates:
            labels.append("none")
            continue
        rates = [exact_match_rates[s] for s in members if s in exact_match_rates]
        if not rates:
            labels.append("none")
        else:
            mean = float(np.mean(rates))
            labels.append("Sim" if mean > 50.0 else "Dissim" if mean < 50.0 else "none")
    report.clusters = clusters
    report.cluster_labels = labels
    return report


# --- conditional-probability matrices ----------------------------------------

GUESS_GIVEN_HINT = "guess_given_hint"
HINT_GIVEN_TARGET = "hint_given_target"


@dataclass
class ConditionalMatrix:
    kind: str
    matrix: np.ndarray  # (A, A) row-stochastic where sampled
    counts: np.ndarray  # (A, A) raw tallies

    def to_dict(self) -> dict:
        return {"kind": self.kind, "matrix": self.matrix.tolist(), "counts": self.counts.tolist()}


def conditional_matrix(
    pairs: Sequence[tuple[Agent, Agent]],
    games_per_pair: int,
    kind: str = GUESS_GIVEN_HINT,
    base_seed: int = 4242,
) -> ConditionalMatrix:
    """Tally conditioned tuple co-occurrences over greedy play, row-normalized."""
    if kind not in (GUESS_GIVEN_HINT, HINT_GIVEN_TARGET):
        raise ConfigurationError(f"unknown conditional kind {kind!r}")
    if not pairs:
        raise ConfigurationError("need at least one pair")
    a = pairs[0][0].config.n_actions
    counts = np.zeros((a, a), dtype=np.int64)
    for i, (hinter, guesser) in enumerate(pairs):
        rng = np.random.default_rng([base_seed, i])
        log = play_match(hinter, guesser, games_per_pair, rng)
        if kind == GUESS_GIVEN_HINT:
            rows, cols = log.hints, log.guesses
        else:
            rows, cols = log.targets, log.hints
        np.add.at(counts, (rows, cols), 1)
    matrix = np.zeros((a, a))
    sums = counts.sum(axis=1)
    nz = sums > 0
    matrix[nz] = counts[nz] / sums[nz, None]
    return ConditionalMatrix(kind, matrix, counts)


# --- scenario probes ----------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    human_pct: float
    win_pct: float
    repetitions: int


@dataclass
class ProbeReport:
    results: list[ScenarioResult]

    def rate(self, name: str) -> ScenarioResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            r.name: {"human_pct": r.human_pct, "win_pct": r.win_pct, "repetitions": r.repetitions}
            for r in self.results
        }


def probe_scenarios(
    hinter: Agent,
    guesser: Agent,
    repetitions: int = 1000,
    base_seed: int = 777,
    scenarios: Optional[list[Scenario]] = None,
) -> ProbeReport:
    """Replay each probe scenario with fresh hand permutations every time."""
    _check_pair(hinter, guesser)
    config = hinter.config
    if config.spaces != standard_spaces() or config.encoding != ONE_HOT:
        raise ConfigurationError("scenario probes assume the one-hot 3x3 game")
    scenarios = scenarios if scenarios is not None else scenario_library()
    results = []
    for k, sc in enumerate(scenarios):
        rng = np.random.default_rng([base_seed, k])
        spaces = sc.state.config.spaces
        h1 = np.array([[spaces.ravel(c) for c in sc.state.hinter_hand]] * repetitions)
        h2 = np.array([[spaces.ravel(c) for c in sc.state.guesser_hand]] * repetitions)
        tp = np.full(repetitions, sc.state.target_index)
        hint, guess, reward = _play_block(hinter, guesser, h1, h2, tp, rng, 0.0)
        human = spaces.ravel(sc.human_hint)
        results.append(
            ScenarioResult(
                sc.name,
                float((hint == human).mean() * 100.0),
                float(reward.mean() * 100.0),
                repetitions,
            )
        )
    return ProbeReport(results)


# --- sinusoidal order-matching analysis ---------------------------------------


def order_matching_rate(
    hinter: Agent,
    guesser: Agent,
    games: int,
    rng: np.random.Generator,
) -> dict:
    """How often a pair's play follows same-order vs reversed-order matching.

    Hands are drawn without replacement so ranks are unambiguous. A game
    counts for a scheme when the hint matches the scheme's hint for the
    target AND the guess matches the scheme's reading of the actual hint.
    """
    _check_pair(hinter, guesser)
    config = hinter.config
    if config.encoding != SINUSOIDAL or len(config.spaces.spaces) != 1:
        raise ConfigurationError("order matching assumes the single-feature sinusoidal game")
    n = config.hand_size
    same = rev = 0
    done = 0
    while done < games:
        b = min(_BLOCK, games - done)
        h1, h2, tp = _deal_block(config, b, rng, replace=False)
        hint, guess, _ = _play_block(hinter, guesser, h1, h2, tp, rng, 0.0)
        target = h2[np.arange(b), tp]
        s1 = np.sort(h1, axis=1)
        s2 = np.sort(h2, axis=1)
        rank_t = np.argmax(s2 == target[:, None], axis=1)
        hint_same = s1[np.arange(b), rank_t]
        hint_rev = s1[np.arange(b), n - 1 - rank_t]
        rank_h = np.argmax(s1 == hint[:, None], axis=1)  # hints are always in hand
        guess_same = s2[np.arange(b), rank_h]
        guess_rev = s2[np.arange(b), n - 1 - rank_h]
        same += int(((hint == hint_same) & (guess == guess_same)).sum())
        rev += int(((hint == hint_rev) & (guess == guess_rev)).sum())
        done += b
    return {
        "same_order_pct": 100.0 * same / games,
        "reversed_order_pct": 100.0 * rev / games,
        "games": games,
    }


def order_matching_schemes(h1: Sequence[int], h2: Sequence[int]) -> dict:
    """The two full matchings for explicit hands (fixture helper)."""
    s1, s2 = sorted(h1), sorted(h2)
    return {
        "same_order": list(zip(s1, s2)),
        "reversed_order": list(zip(s1, s2[::-1])),
    }


# --- chance baseline -----------------------------------------------------------


HAND_CARD = "hand_card"
LEGAL_SET = "legal_set"


def chance_baseline(
    config: GameConfig, games: int, rng: np.random.Generator, guess_mode: str = HAND_CARD
) -> dict:
    """Monte Carlo score of a random hinter paired with a random guesser.

    hand_card picks a uniform card position from the hand (duplicates weigh
    double), matching the published random-play reference; legal_set picks
    uniformly from the distinct legal tuples instead.
    """
    if guess_mode not in (HAND_CARD, LEGAL_SET):
        raise ConfigurationError(f"unknown guess_mode {guess_mode!r}")
    total = 0.0
    done = 0
    n = config.hand_size
    while done < games:
        b = min(_BLOCK, games - done)
        h1, h2, tp = _deal_block(config, b, rng)
        target_combo = h2[np.arange(b), tp]
        if guess_mode == HAND_CARD:
            rng.integers(0, n, size=b)  # the hint (ignored by a random guesser)
            guess = h2[np.arange(b), rng.integers(0, n, size=b)]
        else:
            uniform_legal_batch(legal_mask_from_hands(h1, config.n_actions), rng)
            guess = uniform_legal_batch(legal_mask_from_hands(h2, config.n_actions), rng)
        total += float((guess == target_combo).sum())
        done += b
    mean = total / games
    se = math.sqrt(max(mean * (1 - mean), 1e-12) / games)
    return {"mean": mean, "se": se, "games": games, "guess_mode": guess_mode}
