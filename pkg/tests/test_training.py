"""Replay mechanics, trainer determinism, and the OP/OBL variants."""

import numpy as np
import pytest
from scipy import stats

from hintguess.errors import ConfigurationError, StateError
from hintguess.agents import ArchitectureKind
from hintguess.evaluation import chance_baseline, play_match
from hintguess.game import GUESSER, HINTER, FeatureSpace, FeatureSpaces, GameConfig, standard_spaces
from hintguess.training import (
    FICTITIOUS_PI0,
    SELF_PLAY,
    ReplayBuffer,
    SymmetryGroup,
    TrainConfig,
    Transition,
    learning_target,
    run_obl,
    run_other_play,
    run_selfplay,
)

TINY = dict(lr=0.1, update_every=50, replay_capacity=2_000, eps_decay=2_000.0)


def _grid(n=2):
    return GameConfig(hand_size=n, spaces=standard_spaces())


def _t(obs, action, reward, provenance=SELF_PLAY):
    return Transition("hinter", np.asarray(obs, dtype=np.int16), action, reward, provenance)


# --- replay -----------------------------------------------------------------


def test_replay_fifo_eviction():
    buf = ReplayBuffer(3, seq_len=2)
    for k in range(4):
        buf.push(_t([k, k], k, 0.0))
    contents = [t.action_index for t in buf.snapshot()]
    assert contents == [1, 2, 3]  # first pushed is evicted first
    assert len(buf) == 3


def test_replay_eviction_order_matches_insertion_order():
    buf = ReplayBuffer(5, seq_len=1)
    for k in range(12):
        buf.push(_t([k % 9], k, 0.0))
    assert [t.action_index for t in buf.snapshot()] == [7, 8, 9, 10, 11]


def test_replay_size_never_exceeds_capacity():
    buf = ReplayBuffer(1000, seq_len=1)
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = 100_000
        buf.push_batch(
            rng.integers(0, 9, size=(n, 1)),
            rng.integers(0, 9, size=n),
            rng.random(n),
        )
        assert len(buf) <= 1000
    assert len(buf) == 1000


def test_replay_sample_uniform():
    buf = ReplayBuffer(10, seq_len=1)
    for k in range(10):
        buf.push(_t([k], k, 0.0))
    rng = np.random.default_rng(1)
    tallies = np.zeros(10, dtype=int)
    for _ in range(5_000):
        batch = buf.sample(10, rng)
        np.add.at(tallies, batch.action_index, 1)
    assert stats.chisquare(tallies).pvalue > 0.001


def test_replay_sample_underfilled_raises():
    buf = ReplayBuffer(10, seq_len=1)
    buf.push(_t([0], 0, 0.0))
    with pytest.raises(StateError):
        buf.sample(2, np.random.default_rng(0))


def test_learning_target_is_the_raw_reward():
    assert learning_target(_t([0], 0, 1.0)) == 1.0
    assert learning_target(_t([0], 0, 0.0)) == 0.0


# --- trainer ------------------------------------------------------------------


def test_single_card_game_converges_to_forced_optimum():
    spaces = FeatureSpaces((FeatureSpace("v", (0, 1), ordinal=True),))
    config = GameConfig(hand_size=1, spaces=spaces)
    tc = TrainConfig(episodes=2_000, seed=5, **TINY)
    result = run_selfplay(tc, config, ArchitectureKind("mlp"))
    score = play_match(result.hinter, result.guesser, 1000, np.random.default_rng(0)).mean_score()
    assert score == 1.0  # only one legal action exists


def test_training_deterministic_across_runs():
    tc = TrainConfig(episodes=3_000, seed=9, **TINY)
    a = run_selfplay(tc, _grid(), ArchitectureKind("sa2i"))
    b = run_selfplay(tc, _grid(), ArchitectureKind("sa2i"))
    for (_, ta), (_, tb) in zip(a.hinter.params.items(), b.hinter.params.items()):
        assert np.array_equal(ta.data, tb.data)
    for (_, ta), (_, tb) in zip(a.guesser.params.items(), b.guesser.params.items()):
        assert np.array_equal(ta.data, tb.data)
    assert [c.score for c in a.curve] == [c.score for c in b.curve]


def test_curve_scores_bounded_and_losses_deferred_until_batch():
    tc = TrainConfig(episodes=2_000, seed=2, lr=0.1, update_every=100, batch_size=500,
                     replay_capacity=5_000, eps_decay=1_000.0)
    result = run_selfplay(tc, _grid(), ArchitectureKind("mlp"))
    assert all(0.0 <= c.score <= 1.0 for c in result.curve)
    # batch 500 needs 10 blocks of 50 transitions before the first update
    head = [c.loss_hinter for c in result.curve[:9]]
    assert all(np.isnan(v) for v in head)
    assert any(not np.isnan(c.loss_hinter) for c in result.curve[10:])


def test_converged_run_beats_chance():
    config = _grid(2)
    tc = TrainConfig(episodes=30_000, seed=3, lr=0.25, update_every=50,
                     replay_capacity=10_000, eps_decay=5_000.0)
    result = run_selfplay(tc, config, ArchitectureKind("mlp"))
    greedy = play_match(result.hinter, result.guesser, 3000, np.random.default_rng(7)).mean_score()
    chance = chance_baseline(config, 100_000, np.random.default_rng(8))["mean"]
    assert greedy > chance + 0.1


def test_update_every_must_be_even():
    with pytest.raises(ConfigurationError):
        TrainConfig(episodes=100, update_every=75)


def test_unknown_variant_rejected():
    with pytest.raises(ConfigurationError):
        TrainConfig(variant="a2c")


# --- other-play -----------------------------------------------------------------


def test_other_play_identity_group_reproduces_iql_bitwise():
    tc = TrainConfig(episodes=4_000, seed=11, **TINY)
    iql = run_selfplay(tc, _grid(), ArchitectureKind("mlp"))
    op = run_other_play(tc, _grid(), ArchitectureKind("mlp"), identity_only=True)
    for (_, ta), (_, tb) in zip(iql.hinter.params.items(), op.hinter.params.items()):
        assert np.array_equal(ta.data, tb.data)
    for (_, ta), (_, tb) in zip(iql.guesser.params.items(), op.guesser.params.items()):
        assert np.array_equal(ta.data, tb.data)
    assert [c.score for c in iql.curve] == [c.score for c in op.curve]


def test_symmetry_group_uniform_over_36_transforms():
    group = SymmetryGroup(_grid())
    assert group.n_transforms() == 36
    rng = np.random.default_rng(13)
    maps = group.sample_relabel_maps(100_000, rng)
    _, counts = np.unique(maps, axis=0, return_counts=True)
    assert len(counts) == 36
    assert stats.chisquare(counts).pvalue > 0.001


def test_other_play_differs_from_iql_with_full_group():
    tc = TrainConfig(episodes=4_000, seed=11, **TINY)
    iql = run_selfplay(tc, _grid(), ArchitectureKind("mlp"))
    op = run_other_play(tc, _grid(), ArchitectureKind("mlp"))
    assert any(
        not np.array_equal(ta.data, tb.data)
        for (_, ta), (_, tb) in zip(iql.guesser.params.items(), op.guesser.params.items())
    )


# --- OBL --------------------------------------------------------------------------


def test_obl_guesser_replay_is_fully_fictitious():
    tc = TrainConfig(episodes=1_000, seed=17, **TINY)
    loop_result = run_obl(tc, _grid(), ArchitectureKind("mlp"), level=1)
    assert loop_result.config.variant == "obl"


def test_obl_provenance_audit():
    from hintguess.training import _SelfPlayLoop, OBL
    from dataclasses import replace

    tc = replace(TrainConfig(episodes=800, seed=18, **TINY), variant=OBL, obl_level=1)
    loop = _SelfPlayLoop(tc, _grid(), ArchitectureKind("mlp"))
    loop.run()
    guesser_prov = [t.provenance for t in loop.replay[GUESSER].snapshot()]
    hinter_prov = [t.provenance for t in loop.replay[HINTER].snapshot()]
    assert guesser_prov and all(p == FICTITIOUS_PI0 for p in guesser_prov)
    assert hinter_prov and all(p == SELF_PLAY for p in hinter_prov)


def test_obl_level_two_needs_lower_checkpoint():
    tc = TrainConfig(episodes=500, seed=19, **TINY)
    with pytest.raises(ConfigurationError):
        run_obl(tc, _grid(), ArchitectureKind("mlp"), level=2)
    level1 = run_obl(tc, _grid(), ArchitectureKind("mlp"), level=1)
    level2 = run_obl(tc, _grid(), ArchitectureKind("mlp"), level=2, lower_hinter=level1.hinter)
    assert level2.config.obl_level == 2
