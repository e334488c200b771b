"""Checkpoint persistence: JSON manifest + base64 little-endian float64 blobs.

The digest is SHA-256 over the canonical JSON serialization (sorted keys, no
whitespace) of everything except the digest field itself, so any bit flip in
shapes, metadata, or parameter bytes is caught on load.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path
from typing import Optional

import numpy as np

from hintguess.errors import ConfigurationError, CorruptionError, UnsupportedFormatError
from hintguess.agents import Agent, ArchitectureKind, build_agent
from hintguess.game import GameConfig
from hintguess.numerics.layers import AttentionSpec

FORMAT_VERSION = 1


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def _digest(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


def _kind_dict(kind: ArchitectureKind) -> dict:
    d: dict = {"name": kind.name}
    if kind.attention is not None:
        d["attention"] = {
            "heads": kind.attention.heads,
            "layers": kind.attention.layers,
            "model_dim": kind.attention.model_dim,
            "scale_mode": kind.attention.scale_mode,
        }
    return d


def _kind_from_dict(d: dict) -> ArchitectureKind:
    att = d.get("attention")
    spec = AttentionSpec(**att) if att else None
    return ArchitectureKind(d["name"], spec)


def checkpoint_payload(agent: Agent, train_manifest: Optional[dict] = None) -> dict:
    parameters = [
        {
            "name": name,
            "shape": list(t.data.shape),
            "dtype": "<f8",
            "data": base64.b64encode(np.ascontiguousarray(t.data, dtype="<f8").tobytes()).decode(),
        }
        for name, t in agent.params.items()
    ]
    payload = {
        "format_version": FORMAT_VERSION,
        "architecture": _kind_dict(agent.kind),
        "game": agent.config.to_dict(),
        "role": agent.role,
        "seed": agent.seed,
        "train_manifest": train_manifest or {},
        "parameters": parameters,
    }
    payload["digest"] = _digest(payload)
    return payload


def save_checkpoint(agent: Agent, path, train_manifest: Optional[dict] = None) -> str:
    """Write the agent to path; returns the content digest."""
    payload = checkpoint_payload(agent, train_manifest)
    Path(path).write_text(json.dumps(payload, indent=1))
    return payload["digest"]


def read_checkpoint_meta(path) -> dict:
    """Parse and digest-verify a checkpoint without instantiating the agent."""
    try:
        payload = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptionError(f"unreadable checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or "digest" not in payload:
        raise CorruptionError(f"checkpoint {path} has no digest")
    stored = payload["digest"]
    body = {k: v for k, v in payload.items() if k != "digest"}
    if _digest(body) != stored:
        raise CorruptionError(f"checkpoint {path} failed digest verification")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"checkpoint format {version!r} not supported")
    return payload


def load_checkpoint(path, expect_game: Optional[GameConfig] = None) -> Agent:
    """Rebuild a frozen agent; parameters round-trip bitwise."""
    payload = read_checkpoint_meta(path)
    game = GameConfig.from_dict(payload["game"])
    if expect_game is not None and game != expect_game:
        raise ConfigurationError(f"checkpoint {path} was trained on a different game config")
    agent = build_agent(_kind_from_dict(payload["architecture"]), game, payload["role"], payload["seed"])
    arrays = {}
    for p in payload["parameters"]:
        if p["dtype"] != "<f8":
            raise UnsupportedFormatError(f"unsupported dtype {p['dtype']!r}")
        raw = base64.b64decode(p["data"])
        arr = np.frombuffer(raw, dtype="<f8").reshape(p["shape"])
        arrays[p["name"]] = arr
    agent.params.load_arrays(arrays)
    agent.train_manifest = payload["train_manifest"]  # type: ignore[attr-defined]
    agent.digest = payload["digest"]  # type: ignore[attr-defined]
    return agent
