"""Checkpoint round-trips, digest integrity, and config guards."""

import json

import numpy as np
import pytest

from hintguess.errors import ConfigurationError, CorruptionError, UnsupportedFormatError
from hintguess.agents import ArchitectureKind, build_agent
from hintguess.checkpoint import load_checkpoint, read_checkpoint_meta, save_checkpoint
from hintguess.game import (
    GUESSER,
    HINTER,
    GameConfig,
    encode_observation,
    legal_actions,
    new_game,
    number_line_spaces,
    standard_spaces,
)

GRID = GameConfig(hand_size=3, spaces=standard_spaces())


@pytest.fixture
def agent():
    a = build_agent(ArchitectureKind("sa2i"), GRID, HINTER, 5)
    rng = np.random.default_rng(0)
    for _, t in a.params.items():  # make values non-trivial
        t.data += rng.normal(scale=0.01, size=t.data.shape)
    return a


def test_roundtrip_is_bitwise(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    digest = save_checkpoint(agent, path, {"note": "test"})
    loaded = load_checkpoint(path)
    assert loaded.digest == digest
    for (na, ta), (nb, tb) in zip(agent.params.items(), loaded.params.items()):
        assert na == nb
        assert np.array_equal(ta.data, tb.data)
    assert loaded.train_manifest == {"note": "test"}


def test_roundtrip_preserves_q_values_exactly(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path)
    loaded = load_checkpoint(path)
    rng = np.random.default_rng(1)
    for _ in range(200):
        state = new_game(GRID, rng)
        obs = encode_observation(state, HINTER, rng).vectors[None, :, :]
        legal = legal_actions(state, HINTER).mask[None, :]
        assert np.array_equal(agent.q_batch(obs, legal), loaded.q_batch(obs, legal))


def test_save_is_deterministic(agent, tmp_path):
    d1 = save_checkpoint(agent, tmp_path / "a.json")
    d2 = save_checkpoint(agent, tmp_path / "b.json")
    assert d1 == d2
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_truncated_file_is_corruption(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path)
    data = path.read_text()
    path.write_text(data[: len(data) // 2])
    with pytest.raises(CorruptionError):
        load_checkpoint(path)


def test_single_bit_flip_is_detected(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path)
    payload = json.loads(path.read_text())
    blob = payload["parameters"][0]["data"]
    flipped = ("A" if blob[10] != "A" else "B") + blob[11:]
    payload["parameters"][0]["data"] = blob[:10] + flipped
    path.write_text(json.dumps(payload))
    with pytest.raises(CorruptionError):
        load_checkpoint(path)


def test_unknown_version_rejected(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path)
    payload = json.loads(path.read_text())
    payload["format_version"] = 99
    # re-digest so only the version is wrong
    from hintguess.checkpoint import _digest

    body = {k: v for k, v in payload.items() if k != "digest"}
    payload["digest"] = _digest(body)
    path.write_text(json.dumps(payload))
    with pytest.raises(UnsupportedFormatError):
        load_checkpoint(path)


def test_config_guard_on_load(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path)
    sine = GameConfig(hand_size=3, spaces=number_line_spaces(20), encoding="sinusoidal")
    with pytest.raises(ConfigurationError):
        load_checkpoint(path, expect_game=sine)


def test_meta_readable_without_agent(agent, tmp_path):
    path = tmp_path / "a.ckpt.json"
    save_checkpoint(agent, path, {"variant": "iql"})
    meta = read_checkpoint_meta(path)
    assert meta["role"] == HINTER
    assert meta["architecture"]["name"] == "sa2i"
    assert meta["train_manifest"]["variant"] == "iql"


def test_roles_roundtrip(tmp_path):
    guesser = build_agent(ArchitectureKind("mlp"), GRID, GUESSER, 2)
    path = tmp_path / "g.json"
    save_checkpoint(guesser, path)
    assert load_checkpoint(path).role == GUESSER
