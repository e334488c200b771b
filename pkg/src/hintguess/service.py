"""Live human-vs-agent sessions under the zero-feedback protocol, over HTTP.

A session is a fixed list of independently generated games played by one
human against a frozen checkpoint. Until the session closes, no response
carries a reward, a target (for a guesser), or any partner decision; the
per-session JSONL log is append-only and is the scoring source of truth.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from hintguess.errors import ConfigurationError, CorruptionError, ProtocolError
from hintguess.agents import Agent, q_values
from hintguess.checkpoint import load_checkpoint
from hintguess.game import (
    GUESSER,
    HINTER,
    EpisodeState,
    GameConfig,
    encode_observation,
    legal_actions,
    new_game,
    step,
)

DEFAULT_GAMES = 15


class RunStore:
    """Filesystem layout: <root>/runs/<id>/... and <root>/sessions/<id>.jsonl."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "runs").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str, create: bool = False) -> Path:
        d = self.root / "runs" / run_id
        if create:
            d.mkdir(parents=True, exist_ok=True)
        return d

    def list_runs(self) -> list[Path]:
        return sorted(p for p in (self.root / "runs").iterdir() if p.is_dir())

    def session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.jsonl"

    def resolve(self, path_str: str) -> Path:
        p = Path(path_str)
        return p if p.is_absolute() else self.root / p


@dataclass
class SessionGame:
    index: int
    hinter_hand: list[str]  # display (permuted) order, card labels
    guesser_hand: list[str]
    target: str  # label; never sent to a human guesser
    hint: Optional[str]  # generated opponent hint (guesser sessions)
    action: Optional[str] = None
    answered_at: Optional[float] = None


@dataclass
class Session:
    session_id: str
    role: str  # the human's role
    config: GameConfig
    opponent_digest: str
    opponent_path: Optional[str]
    seed: int
    games: list[SessionGame]
    closed: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def next_unanswered(self) -> Optional[SessionGame]:
        for g in self.games:
            if g.action is None:
                return g
        return None


def _hand_labels(config: GameConfig, hand, order) -> list[str]:
    return [config.spaces.label(hand[i]) for i in order]


def _legal_labels(config: GameConfig, hand_labels: list[str]) -> list[str]:
    seen: list[str] = []
    for lab in hand_labels:
        if lab not in seen:
            seen.append(lab)
    return seen


class SessionManager:
    def __init__(self, store: RunStore):
        self.store = store
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._agents: dict[str, Agent] = {}  # checkpoint path -> loaded agent

    # --- persistence ----------------------------------------------------------

    def _append(self, session_id: str, event: dict) -> None:
        path = self.store.session_path(session_id)
        with open(path, "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")

    def _load_agent(self, path_str: str) -> Agent:
        key = str(self.store.resolve(path_str))
        if key not in self._agents:
            self._agents[key] = load_checkpoint(key)
        return self._agents[key]

    # --- lifecycle -------------------------------------------------------------

    def create_session(
        self,
        role: str,
        checkpoint: Optional[str],
        games: int = DEFAULT_GAMES,
        seed: Optional[int] = None,
        hints_from_session: Optional[str] = None,
    ) -> Session:
        if role not in (HINTER, GUESSER):
            raise ConfigurationError(f"unknown role {role!r}")
        if games < 1:
            raise ConfigurationError("need at least one game")
        seed = int(seed) if seed is not None else int.from_bytes(uuid.uuid4().bytes[:4], "big")
        session_id = uuid.uuid4().hex[:12]

        if hints_from_session is not None:
            if role != GUESSER:
                raise ConfigurationError("hints_from_session only makes sense for a guesser session")
            source = self.get(hints_from_session)
            if not source.closed or source.role != HINTER:
                raise ConfigurationError("hint source must be a closed hinter session")
            config = source.config
            game_rows = [
                SessionGame(g.index, g.hinter_hand, g.guesser_hand, g.target, g.action)
                for g in source.games[:games]
            ]
            opponent_digest, opponent_path = f"session:{hints_from_session}", None
        else:
            if checkpoint is None:
                raise ConfigurationError("a checkpoint is required")
            opponent = self._load_agent(checkpoint)
            expected = GUESSER if role == HINTER else HINTER
            if opponent.role != expected:
                raise ConfigurationError(
                    f"human {role} needs a {expected}-role checkpoint, got {opponent.role}"
                )
            config = opponent.config
            opponent_digest = getattr(opponent, "digest", "unknown")
            opponent_path = checkpoint
            rng = np.random.default_rng([seed, 17])
            game_rows = []
            for k in range(games):
                state = new_game(config, rng)
                hint_label = None
                if role == GUESSER:
                    obs = encode_observation(state, HINTER, rng)
                    qv = q_values(opponent, obs, legal_actions(state, HINTER).mask)
                    hint_card = config.spaces.unravel(qv.argmax_legal())
                    hint_label = config.spaces.label(hint_card)
                order1 = rng.permutation(config.hand_size)
                order2 = rng.permutation(config.hand_size)
                game_rows.append(
                    SessionGame(
                        k,
                        _hand_labels(config, state.hinter_hand, order1),
                        _hand_labels(config, state.guesser_hand, order2),
                        config.spaces.label(state.target_card),
                        hint_label,
                    )
                )

        session = Session(session_id, role, config, opponent_digest, opponent_path, seed, game_rows)
        with self._registry_lock:
            self._sessions[session_id] = session
        self._append(
            session_id,
            {
                "event": "created",
                "session_id": session_id,
                "role": role,
                "opponent_digest": opponent_digest,
                "opponent_path": opponent_path,
                "config": config.to_dict(),
                "seed": seed,
                "games": [
                    {
                        "index": g.index,
                        "hinter_hand": g.hinter_hand,
                        "guesser_hand": g.guesser_hand,
                        "target": g.target,
                        "hint": g.hint,
                    }
                    for g in game_rows
                ],
                "created_at": time.time(),
            },
        )
        return session

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self._rehydrate(session_id)
        with self._registry_lock:
            return self._sessions.setdefault(session_id, session)

    def _rehydrate(self, session_id: str) -> Session:
        path = self.store.session_path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        return rehydrate_session(path)

    # --- protocol operations ----------------------------------------------------

    def next_prompt(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.closed:
                return {"session_id": session_id, "complete": True}
            game = session.next_unanswered()
            if game is None:
                return {"session_id": session_id, "complete": True}
            own = game.hinter_hand if session.role == HINTER else game.guesser_hand
            prompt = {
                "session_id": session_id,
                "complete": False,
                "game_index": game.index,
                "total_games": len(session.games),
                "role": session.role,
                "hinter_hand": game.hinter_hand,
                "guesser_hand": game.guesser_hand,
                "query": {
                    "kind": "target" if session.role == HINTER else "hint",
                    "card": game.target if session.role == HINTER else game.hint,
                },
                "legal_actions": _legal_labels(session.config, own),
            }
            return prompt

    def submit_action(self, session_id: str, game_index: int, action: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.closed:
                raise ProtocolError("session already closed")
            if not 0 <= game_index < len(session.games):
                raise KeyError(f"no game {game_index}")
            game = session.games[game_index]
            if game.action is not None:
                raise FileExistsError(f"game {game_index} already answered")
            current = session.next_unanswered()
            if current is None or current.index != game_index:
                raise ProtocolError(f"game {current.index if current else '?'} is the open prompt")
            own = game.hinter_hand if session.role == HINTER else game.guesser_hand
            legal = _legal_labels(session.config, own)
            if action not in legal:
                raise LookupError(json.dumps(legal))
            game.action = action
            game.answered_at = time.time()
            self._append(
                session_id,
                {"event": "action", "game_index": game_index, "action": action, "ts": game.answered_at},
            )
            if session.next_unanswered() is None:
                session.closed = True
                self._append(session_id, {"event": "closed", "ts": time.time()})
            return {"acknowledged": True, "game_index": game_index}

    def close_session(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            if not session.closed:
                session.closed = True
                self._append(session_id, {"event": "closed", "ts": time.time()})
        answered = sum(1 for g in session.games if g.action is not None)
        return {"closed": True, "answered": answered, "games": len(session.games)}

    def results(self, session_id: str) -> dict:
        session = self.get(session_id)
        if not session.closed:
            raise ProtocolError("results are only available after the session closes")
        if session.role == GUESSER:
            return score_guesser_session(session)
        checkpoints = [session.opponent_path] if session.opponent_path else []
        return score_hinter_session(session, [self.store.resolve(c) for c in checkpoints])


# --- scoring -------------------------------------------------------------------


def agreement_pct(a: list, b: list) -> float:
    """Percentage of positions where two decision lists agree."""
    if len(a) != len(b) or not a:
        raise ValueError("need equal-length, non-empty decision lists")
    return 100.0 * sum(x == y for x, y in zip(a, b)) / len(a)


def score_guesser_session(session: Session) -> dict:
    answered = [g for g in session.games if g.action is not None]
    per_game = [
        {"game_index": g.index, "guess": g.action, "target": g.target, "reward": int(g.action == g.target)}
        for g in answered
    ]
    mean = float(np.mean([r["reward"] for r in per_game])) if per_game else float("nan")
    return {
        "session_id": session.session_id,
        "role": session.role,
        "games_answered": len(answered),
        "mean_score": mean,
        "per_game": per_game,
    }


def _replay_state(session: Session, game: SessionGame) -> EpisodeState:
    spaces = session.config.spaces
    h1 = tuple(spaces.card_from_label(lab) for lab in game.hinter_hand)
    h2 = tuple(spaces.card_from_label(lab) for lab in game.guesser_hand)
    target_idx = [spaces.label(c) for c in h2].index(game.target)
    state = EpisodeState(session.config, h1, h2, target_idx)
    return step(state, spaces.card_from_label(game.action))


def score_hinter_session(session: Session, checkpoint_paths: list, replay_seed: int = 101) -> dict:
    """Feed the recorded human hints to guesser checkpoints and score them."""
    if session.role != HINTER:
        raise ConfigurationError("hinter-session scoring needs a hinter session")
    answered = [g for g in session.games if g.action is not None]
    per_checkpoint = []
    guesses_by_ckpt: list[list[str]] = []
    for path in checkpoint_paths:
        guesser = load_checkpoint(path)
        if guesser.role != GUESSER:
            raise ConfigurationError(f"{path} is not a guesser checkpoint")
        if guesser.config != session.config:
            raise ConfigurationError(f"{path} was trained on a different game config")
        rng = np.random.default_rng([replay_seed])
        rewards, guesses = [], []
        for game in answered:
            state = _replay_state(session, game)
            obs = encode_observation(state, GUESSER, rng)
            qv = q_values(guesser, obs, legal_actions(state, GUESSER).mask)
            guess = session.config.spaces.unravel(qv.argmax_legal())
            label = session.config.spaces.label(guess)
            guesses.append(label)
            rewards.append(int(label == game.target))
        per_checkpoint.append(
            {
                "checkpoint": str(path),
                "digest": getattr(guesser, "digest", "unknown"),
                "mean_score": float(np.mean(rewards)) if rewards else float("nan"),
                "guesses": guesses,
            }
        )
        guesses_by_ckpt.append(guesses)
    agreements = []
    for i in range(len(per_checkpoint)):
        for j in range(i + 1, len(per_checkpoint)):
            agreements.append(
                {
                    "a": per_checkpoint[i]["checkpoint"],
                    "b": per_checkpoint[j]["checkpoint"],
                    "agreement_pct": agreement_pct(guesses_by_ckpt[i], guesses_by_ckpt[j]),
                }
            )
    return {
        "session_id": session.session_id,
        "role": session.role,
        "games_answered": len(answered),
        "per_checkpoint": per_checkpoint,
        "agreement": agreements,
    }


def rehydrate_session(path) -> Session:
    """Rebuild a session's state by replaying its JSONL event log."""
    path = Path(path)
    session: Optional[Session] = None
    for line in path.read_text().splitlines():
        event = json.loads(line)
        if event["event"] == "created":
            config = GameConfig.from_dict(event["config"])
            games = [
                SessionGame(g["index"], g["hinter_hand"], g["guesser_hand"], g["target"], g["hint"])
                for g in event["games"]
            ]
            session = Session(
                path.stem,
                event["role"],
                config,
                event["opponent_digest"],
                event.get("opponent_path"),
                event["seed"],
                games,
            )
        elif event["event"] == "action" and session is not None:
            g = session.games[event["game_index"]]
            g.action, g.answered_at = event["action"], event["ts"]
        elif event["event"] == "closed" and session is not None:
            session.closed = True
    if session is None:
        raise CorruptionError(f"session file {path} has no created event")
    return session


def score_session_file(path, checkpoint_paths: list) -> dict:
    """Offline session scoring straight from a JSONL file."""
    session = rehydrate_session(path)
    if not session.closed:
        raise ProtocolError("refusing to score an open session")
    if session.role == GUESSER:
        return score_guesser_session(session)
    return score_hinter_session(session, checkpoint_paths)
