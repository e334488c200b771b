"""Match play, cross-play reports, clustering, probes, and baselines."""

import numpy as np
import pytest

from helpers import ScriptedAgent, exact_or_lowest, rank_matcher

from hintguess.errors import ConfigurationError
from hintguess.agents import ArchitectureKind, build_agent
from hintguess.evaluation import (
    GUESS_GIVEN_HINT,
    HAND_CARD,
    LEGAL_SET,
    CrossPlayReport,
    chance_baseline,
    conditional_matrix,
    crossplay_matrix,
    detect_clusters,
    order_matching_rate,
    order_matching_schemes,
    play_match,
    probe_scenarios,
)
from hintguess.game import (
    GUESSER,
    HINTER,
    FeatureSpace,
    FeatureSpaces,
    GameConfig,
    number_line_spaces,
    standard_spaces,
)

GRID = GameConfig(hand_size=3, spaces=standard_spaces())


def _pair(seed=0, config=GRID, kind="mlp"):
    return (
        build_agent(ArchitectureKind(kind), config, HINTER, seed),
        build_agent(ArchitectureKind(kind), config, GUESSER, seed),
    )


# --- play_match -----------------------------------------------------------------


def test_play_match_deterministic_logs():
    h, g = _pair(3)
    a = play_match(h, g, 500, np.random.default_rng(42))
    b = play_match(h, g, 500, np.random.default_rng(42))
    assert np.array_equal(a.hints, b.hints)
    assert np.array_equal(a.guesses, b.guesses)
    assert np.array_equal(a.rewards, b.rewards)
    assert a.rewards.shape == (500,)
    assert set(np.unique(a.rewards)) <= {0.0, 1.0}


def test_play_match_config_mismatch_rejected():
    h, _ = _pair(0)
    _, g = _pair(0, config=GameConfig(hand_size=5, spaces=standard_spaces()))
    with pytest.raises(ConfigurationError):
        play_match(h, g, 10, np.random.default_rng(0))


def test_play_match_role_check():
    h, g = _pair(0)
    with pytest.raises(ConfigurationError):
        play_match(g, h, 10, np.random.default_rng(0))


def test_scripted_optimal_pair_scores_one_on_same_hand():
    config = GameConfig(hand_size=3, spaces=standard_spaces(), same_hand=True)
    h = ScriptedAgent(config, HINTER, exact_or_lowest)
    g = ScriptedAgent(config, GUESSER, exact_or_lowest)
    log = play_match(h, g, 300, np.random.default_rng(5))
    assert log.mean_score() == 1.0


# --- chance baseline ---------------------------------------------------------------


def _exact_chance(n_cards: int, n_combos: int, mode: str) -> float:
    """Enumeration oracle over multinomial hand compositions."""
    from fractions import Fraction
    from math import comb

    total = Fraction(0)
    denom = Fraction(n_combos) ** n_cards

    def rec(bin_idx, remaining, distinct, sq_sum, ways):
        nonlocal total
        if bin_idx == n_combos:
            if remaining == 0:
                p = Fraction(ways) / denom
                if mode == LEGAL_SET:
                    total += p / distinct
                else:
                    total += p * Fraction(sq_sum, n_cards * n_cards)
            return
        for c in range(remaining + 1):
            rec(bin_idx + 1, remaining - c, distinct + (1 if c else 0), sq_sum + c * c,
                ways * comb(remaining, c))

    rec(0, n_cards, 0, 0, 1)
    return float(total)


def test_chance_exact_oracle_pinned_values():
    # frozen from the enumeration oracle (these also pin the acceptance fixtures)
    assert _exact_chance(3, 9, HAND_CARD) == pytest.approx(11 / 27)
    assert _exact_chance(5, 9, HAND_CARD) == pytest.approx(13 / 45)
    assert _exact_chance(7, 9, HAND_CARD) == pytest.approx(5 / 21)
    assert _exact_chance(3, 9, LEGAL_SET) == pytest.approx(285 / 729)


@pytest.mark.parametrize("n,mode", [(3, HAND_CARD), (5, HAND_CARD), (3, LEGAL_SET)])
def test_chance_baseline_matches_enumeration(n, mode):
    config = GameConfig(hand_size=n, spaces=standard_spaces())
    result = chance_baseline(config, 200_000, np.random.default_rng(0), mode)
    exact = _exact_chance(n, 9, mode)
    assert abs(result["mean"] - exact) < 4 * result["se"] + 1e-9


def test_chance_baseline_forced_win_single_card():
    spaces = FeatureSpaces((FeatureSpace("v", (0, 1, 2), ordinal=True),))
    config = GameConfig(hand_size=1, spaces=spaces)
    assert chance_baseline(config, 5_000, np.random.default_rng(1))["mean"] == 1.0


def test_chance_baseline_invariant_under_value_relabeling():
    # uniform play cannot depend on which labels the feature values carry
    a = chance_baseline(GRID, 150_000, np.random.default_rng(2))
    relabeled = GameConfig(
        hand_size=3,
        spaces=FeatureSpaces(
            (FeatureSpace("number", ("3", "1", "2")), FeatureSpace("letter", ("C", "B", "A")))
        ),
    )
    b = chance_baseline(relabeled, 150_000, np.random.default_rng(3))
    assert abs(a["mean"] - b["mean"]) < 2 * (a["se"] + b["se"])


# --- cross-play -----------------------------------------------------------------------


def test_crossplay_single_checkpoint_is_sp():
    pair = _pair(1)
    report = crossplay_matrix([pair], 300, seeds=[1])
    assert report.matrix.shape == (1, 1)
    direct = play_match(*pair, 300, np.random.default_rng([9999, 0, 0])).mean_score()
    assert report.matrix[0, 0] == direct
    assert report.sp_scores[0] == report.matrix[0, 0]


def test_crossplay_diagonal_matches_play_match():
    pairs = [_pair(s) for s in (0, 1)]
    report = crossplay_matrix(pairs, 200, seeds=[0, 1])
    for i in (0, 1):
        direct = play_match(*pairs[i], 200, np.random.default_rng([9999, i, i])).mean_score()
        assert report.matrix[i, i] == direct


def _synthetic_report(matrix, seeds=None):
    matrix = np.asarray(matrix, dtype=float)
    seeds = seeds or list(range(len(matrix)))
    return CrossPlayReport(seeds, matrix, games_per_cell=1000)


def test_detect_clusters_single_cluster_when_xp_equals_sp():
    report = _synthetic_report(np.full((4, 4), 0.8))
    detect_clusters(report)
    assert report.clusters == [[0, 1, 2, 3]]


def test_detect_clusters_block_diagonal_two_clusters():
    m = np.full((5, 5), 0.05)
    for block in ([0, 1, 2], [3, 4]):
        for i in block:
            for j in block:
                m[i, j] = 0.8
    report = _synthetic_report(m)
    detect_clusters(report)
    assert report.clusters == [[0, 1, 2], [3, 4]]


def test_detect_clusters_isolated_seeds_form_no_cluster():
    report = _synthetic_report(np.diag([0.8, 0.8, 0.8]))
    detect_clusters(report)
    assert report.clusters == []


def test_detect_clusters_order_invariance():
    m = np.full((4, 4), 0.05)
    for block in ([0, 3], [1, 2]):
        for i in block:
            for j in block:
                m[i, j] = 0.9
    a = _synthetic_report(m.copy(), seeds=[10, 11, 12, 13])
    detect_clusters(a)
    perm = [2, 0, 3, 1]
    b = _synthetic_report(m[np.ix_(perm, perm)], seeds=[12, 10, 13, 11])
    detect_clusters(b)
    assert sorted(map(tuple, a.clusters)) == sorted(map(tuple, b.clusters))


def test_detect_clusters_sim_dissim_labels():
    report = _synthetic_report(np.full((4, 4), 0.8))
    detect_clusters(report, exact_match_rates={0: 99.0, 1: 98.0, 2: 97.0, 3: 99.5})
    assert report.cluster_labels == ["Sim"]
    report2 = _synthetic_report(np.full((2, 2), 0.7))
    detect_clusters(report2, exact_match_rates={0: 2.0, 1: 1.0})
    assert report2.cluster_labels == ["Dissim"]


# --- conditional matrices ----------------------------------------------------------


def test_conditional_matrix_identity_for_copying_guesser():
    config = GameConfig(hand_size=3, spaces=standard_spaces(), same_hand=True)
    pairs = [
        (ScriptedAgent(config, HINTER, exact_or_lowest), ScriptedAgent(config, GUESSER, exact_or_lowest))
    ]
    cm = conditional_matrix(pairs, 400, GUESS_GIVEN_HINT)
    visited = cm.counts.sum(axis=1) > 0
    assert visited.any()
    assert np.allclose(cm.matrix[visited], np.eye(9)[visited])


def test_conditional_matrix_rows_are_stochastic():
    pairs = [_pair(s) for s in (0, 1)]
    cm = conditional_matrix(pairs, 500, GUESS_GIVEN_HINT)
    sums = cm.matrix.sum(axis=1)
    visited = cm.counts.sum(axis=1) > 0
    assert np.all(np.abs(sums[visited] - 1.0) < 1e-9)
    assert np.all(sums[~visited] == 0.0)


def test_conditional_matrix_hint_given_target_shape():
    cm = conditional_matrix([_pair(2)], 300, "hint_given_target")
    assert cm.matrix.shape == (9, 9)


# --- probe scenarios ------------------------------------------------------------------


def test_probe_scenarios_scripted_exact_pair():
    h = ScriptedAgent(GRID, HINTER, exact_or_lowest)
    g = ScriptedAgent(GRID, GUESSER, exact_or_lowest)
    report = probe_scenarios(h, g, repetitions=50)
    exact = report.rate("exact_match")
    # the copying pair is human-compatible (and wins) on the exact-match probe
    assert exact.human_pct == 100.0
    assert exact.win_pct == 100.0


def test_probe_scenarios_consistent_inverse_schemes_always_win():
    decide_h, decide_g = rank_matcher(reverse=False)
    h = ScriptedAgent(GRID, HINTER, decide_h)
    g = ScriptedAgent(GRID, GUESSER, decide_g)
    report = probe_scenarios(h, g, repetitions=50)
    for r in report.results:
        assert r.win_pct == 100.0


def test_probe_scenarios_config_guard():
    config = GameConfig(hand_size=3, spaces=number_line_spaces(20), encoding="sinusoidal")
    h = ScriptedAgent(config, HINTER, exact_or_lowest)
    g = ScriptedAgent(config, GUESSER, exact_or_lowest)
    with pytest.raises(ConfigurationError):
        probe_scenarios(h, g, repetitions=5)


# --- order matching ---------------------------------------------------------------------


SINE = GameConfig(hand_size=3, spaces=number_line_spaces(20), encoding="sinusoidal", sine_dim=6)


def test_order_matching_schemes_fixture():
    schemes = order_matching_schemes([1, 2, 3], [2, 3, 4])
    assert schemes["same_order"] == [(1, 2), (2, 3), (3, 4)]
    assert schemes["reversed_order"] == [(1, 4), (2, 3), (3, 2)]


def test_order_matching_identical_hands_schemes_coincide():
    schemes = order_matching_schemes([4, 7, 9], [4, 7, 9])
    assert schemes["same_order"] == [(4, 4), (7, 7), (9, 9)]
    assert [(a, b) for a, b in schemes["reversed_order"] if a == b] == [(7, 7)]


def test_order_matching_rate_scripted_same_order():
    decide_h, decide_g = rank_matcher(reverse=False)
    h = ScriptedAgent(SINE, HINTER, decide_h)
    g = ScriptedAgent(SINE, GUESSER, decide_g)
    rates = order_matching_rate(h, g, 400, np.random.default_rng(0))
    assert rates["same_order_pct"] == 100.0
    assert rates["reversed_order_pct"] < 40.0


def test_order_matching_rate_scripted_reversed():
    decide_h, decide_g = rank_matcher(reverse=True)
    h = ScriptedAgent(SINE, HINTER, decide_h)
    g = ScriptedAgent(SINE, GUESSER, decide_g)
    rates = order_matching_rate(h, g, 400, np.random.default_rng(1))
    assert rates["reversed_order_pct"] == 100.0
    assert rates["same_order_pct"] < 40.0


def test_order_matching_config_guard():
    h, g = _pair(0)
    with pytest.raises(ConfigurationError):
        order_matching_rate(h, g, 10, np.random.default_rng(0))
