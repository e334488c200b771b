"""The hint-guess game: rules, featurization, symmetries, and probe scenarios.

Two players, a hinter and a guesser, each hold N cards drawn iid uniform
over the feature grid (both hands public). The hinter sees the target (one
of the guesser's cards) and shows one of its own cards; the guesser then
names a feature tuple from its hand. Both score 1 iff the named tuple
matches the target's tuple.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from hintguess.errors import ConfigurationError, ProtocolError

HINTER = "hinter"
GUESSER = "guesser"

Card = tuple  # one value index per feature space

ONE_HOT = "one_hot"
SINUSOIDAL = "sinusoidal"


class Phase(str, enum.Enum):
    AWAIT_HINT = "await_hint"
    AWAIT_GUESS = "await_guess"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class FeatureSpace:
    name: str
    values: tuple
    ordinal: bool = False

    def __post_init__(self):
        if len(self.values) == 0:
            raise ConfigurationError(f"feature space {self.name!r} is empty")
        if self.ordinal and not all(isinstance(v, int) for v in self.values):
            raise ConfigurationError("ordinal feature spaces need integer values")

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FeatureSpaces:
    spaces: tuple[FeatureSpace, ...]

    def __post_init__(self):
        if len(self.spaces) == 0:
            raise ConfigurationError("need at least one feature space")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.spaces)

    @property
    def n_combos(self) -> int:
        return math.prod(self.sizes)

    def ravel(self, card: Card) -> int:
        idx = 0
        for value, size in zip(card, self.sizes):
            idx = idx * size + value
        return idx

    def unravel(self, idx: int) -> Card:
        out = []
        for size in reversed(self.sizes):
            out.append(idx % size)
            idx //= size
        return tuple(reversed(out))

    def label(self, card: Card) -> str:
        return "".join(str(s.values[v]) for s, v in zip(self.spaces, card))

    def card_from_label(self, label: str) -> Card:
        """Inverse of label(): "2B" on the grid, "17" on a single number line."""
        if len(self.spaces) == 1:
            s = self.spaces[0]
            return (s.values.index(type(s.values[0])(label)),)
        if len(label) != len(self.spaces):
            raise ValueError(f"label {label!r} does not match {len(self.spaces)} spaces")
        return tuple(
            s.values.index(type(s.values[0])(ch)) for s, ch in zip(self.spaces, label)
        )

    def all_cards(self) -> list[Card]:
        return [self.unravel(i) for i in range(self.n_combos)]


def standard_spaces() -> FeatureSpaces:
    """The 3x3 grid: numbers {1,2,3} x letters {A,B,C}."""
    return FeatureSpaces(
        (
            FeatureSpace("number", ("1", "2", "3")),
            FeatureSpace("letter", ("A", "B", "C")),
        )
    )


def number_line_spaces(n: int = 20) -> FeatureSpaces:
    """Single ordinal feature {0..n-1}."""
    return FeatureSpaces((FeatureSpace("number", tuple(range(n)), ordinal=True),))


@dataclass(frozen=True)
class GameConfig:
    hand_size: int
    spaces: FeatureSpaces
    same_hand: bool = False
    encoding: str = ONE_HOT
    sine_dim: int = 200

    def __post_init__(self):
        if self.hand_size < 1:
            raise ConfigurationError("hand_size must be >= 1")
        if self.encoding not in (ONE_HOT, SINUSOIDAL):
            raise ConfigurationError(f"unknown encoding {self.encoding!r}")
        if self.encoding == SINUSOIDAL:
            if len(self.spaces.spaces) != 1 or not self.spaces.spaces[0].ordinal:
                raise ConfigurationError("sinusoidal encoding needs a single ordinal feature space")
            if self.sine_dim % 2:
                raise ConfigurationError("sinusoidal dim must be even")

    @property
    def n_actions(self) -> int:
        return self.spaces.n_combos

    @property
    def card_width(self) -> int:
        base = self.sine_dim if self.encoding == SINUSOIDAL else sum(self.spaces.sizes)
        return base + 2  # owner bit + query bit

    @property
    def seq_len(self) -> int:
        return 2 * self.hand_size + 1

    def to_dict(self) -> dict:
        features = []
        for s in self.spaces.spaces:
            if s.ordinal:
                features.append({"name": s.name, "type": "ordinal", "low": s.values[0], "high": s.values[-1]})
            else:
                features.append({"name": s.name, "type": "categorical", "values": list(s.values)})
        enc: dict = {"kind": self.encoding}
        if self.encoding == SINUSOIDAL:
            enc["dim"] = self.sine_dim
        return {
            "hand_size": self.hand_size,
            "features": features,
            "encoding": enc,
            "same_hand": self.same_hand,
        }

    @staticmethod
    def from_dict(d: dict) -> "GameConfig":
        spaces = []
        for f in d["features"]:
            if f["type"] == "ordinal":
                spaces.append(FeatureSpace(f["name"], tuple(range(f["low"], f["high"] + 1)), ordinal=True))
            elif f["type"] == "categorical":
                spaces.append(FeatureSpace(f["name"], tuple(f["values"])))
            else:
                raise ConfigurationError(f"unknown feature type {f['type']!r}")
        enc = d.get("encoding", {"kind": ONE_HOT})
        return GameConfig(
            hand_size=d["hand_size"],
            spaces=FeatureSpaces(tuple(spaces)),
            same_hand=bool(d.get("same_hand", False)),
            encoding=enc["kind"],
            sine_dim=int(enc.get("dim", 200)),
        )


@dataclass(frozen=True)
class EpisodeState:
    config: GameConfig
    hinter_hand: tuple[Card, ...]
    guesser_hand: tuple[Card, ...]
    target_index: int
    hinted_card: Optional[Card] = None
    phase: Phase = Phase.AWAIT_HINT
    reward: Optional[int] = None

    @property
    def target_card(self) -> Card:
        return self.guesser_hand[self.target_index]


@dataclass(frozen=True)
class ActionSet:
    cards: tuple[Card, ...]  # distinct feature tuples, ascending grid order
    mask: np.ndarray  # bool over the full action grid

    def __len__(self) -> int:
        return len(self.cards)


@dataclass(frozen=True)
class FeatureSequence:
    vectors: np.ndarray  # (seq_len, width) float64
    tags: tuple[str, ...]  # hinter_card | guesser_card | query_card per element


def new_game(config: GameConfig, rng: np.random.Generator) -> EpisodeState:
    n = config.hand_size
    h1 = tuple(config.spaces.unravel(int(i)) for i in rng.integers(0, config.spaces.n_combos, size=n))
    if config.same_hand:
        h2 = h1
    else:
        h2 = tuple(config.spaces.unravel(int(i)) for i in rng.integers(0, config.spaces.n_combos, size=n))
    target = int(rng.integers(0, n))
    return EpisodeState(config, h1, h2, target)


def _acting_hand(state: EpisodeState, role: str) -> tuple[Card, ...]:
    if role == HINTER:
        if state.phase != Phase.AWAIT_HINT:
            raise ProtocolError(f"hinter cannot act in phase {state.phase.value}")
        return state.hinter_hand
    if role == GUESSER:
        if state.phase != Phase.AWAIT_GUESS:
            raise ProtocolError(f"guesser cannot act in phase {state.phase.value}")
        return state.guesser_hand
    raise ValueError(f"unknown role {role!r}")


def legal_actions(state: EpisodeState, role: str) -> ActionSet:
    hand = _acting_hand(state, role)
    spaces = state.config.spaces
    mask = np.zeros(spaces.n_combos, dtype=bool)
    for card in hand:
        mask[spaces.ravel(card)] = True
    cards = tuple(spaces.unravel(i) for i in np.flatnonzero(mask))
    return ActionSet(cards, mask)


def step(state: EpisodeState, action: Card) -> EpisodeState:
    action = tuple(action)
    if state.phase == Phase.AWAIT_HINT:
        acting = state.hinter_hand
        if action not in acting:
            raise ProtocolError(f"hint {action} not in hinter hand")
        return replace(state, hinted_card=action, phase=Phase.AWAIT_GUESS)
    if state.phase == Phase.AWAIT_GUESS:
        if action not in state.guesser_hand:
            raise ProtocolError(f"guess {action} not in guesser hand")
        reward = int(action == state.target_card)
        return replace(state, phase=Phase.TERMINAL, reward=reward)
    raise ProtocolError("episode already terminal")


def sinusoidal_encode(n: int, dim: int) -> np.ndarray:
    """Interleaved sin/cos of n at geometrically spaced frequencies."""
    if dim % 2:
        raise ConfigurationError("sinusoidal dim must be even")
    i = np.arange(dim // 2, dtype=np.float64)
    angle = n / np.power(10000.0, 2.0 * i / dim)
    out = np.empty(dim, dtype=np.float64)
    out[0::2] = np.sin(angle)
    out[1::2] = np.cos(angle)
    return out


# slot kinds for the encoding table
SLOT_HINTER_CARD = 0  # owner=hinter, not query (also: action taken by the hinter)
SLOT_GUESSER_CARD = 1  # owner=guesser, not query (also: action taken by the guesser)
SLOT_QUERY_TARGET = 2  # the target shown to the hinter (owned by the guesser)
SLOT_QUERY_HINT = 3  # the hint shown to the guesser (owned by the hinter)

_SLOT_FLAGS = {
    SLOT_HINTER_CARD: (0.0, 0.0),
    SLOT_GUESSER_CARD: (1.0, 0.0),
    SLOT_QUERY_TARGET: (1.0, 1.0),
    SLOT_QUERY_HINT: (0.0, 1.0),
}

ACTION_SLOT = {HINTER: SLOT_HINTER_CARD, GUESSER: SLOT_GUESSER_CARD}


class ObservationEncoder:
    """Precomputed card-row tables for one GameConfig.

    Every sequence element is the same card featurization plus an owner bit
    and a query bit, so an observation reduces to (slot kind, combo index)
    pairs materialized through one table.
    """

    def __init__(self, config: GameConfig):
        self.config = config
        spaces = config.spaces
        width = config.card_width
        n = spaces.n_combos
        base = np.zeros((n, width - 2), dtype=np.float64)
        for combo in range(n):
            card = spaces.unravel(combo)
            if config.encoding == SINUSOIDAL:
                value = spaces.spaces[0].values[card[0]]
                base[combo] = sinusoidal_encode(value, config.sine_dim)
            else:
                offset = 0
                for space, v in zip(spaces.spaces, card):
                    base[combo, offset + v] = 1.0
                    offset += space.size
        self.table = np.zeros((4, n, width), dtype=np.float64)
        for slot, (owner, query) in _SLOT_FLAGS.items():
            self.table[slot, :, : width - 2] = base
            self.table[slot, :, width - 2] = owner
            self.table[slot, :, width - 1] = query
        n_hand = config.hand_size
        self.hinter_kinds = np.array(
            [SLOT_HINTER_CARD] * n_hand + [SLOT_GUESSER_CARD] * n_hand + [SLOT_QUERY_TARGET],
            dtype=np.int8,
        )
        self.guesser_kinds = np.array(
            [SLOT_HINTER_CARD] * n_hand + [SLOT_GUESSER_CARD] * n_hand + [SLOT_QUERY_HINT],
            dtype=np.int8,
        )

    def kinds(self, role: str) -> np.ndarray:
        return self.hinter_kinds if role == HINTER else self.guesser_kinds

    def kinds_for(self, role: str, hand_size: int) -> np.ndarray:
        """Kinds vector for an arbitrary hand size (probe scenarios shrink N)."""
        if hand_size == self.config.hand_size:
            return self.kinds(role)
        query = SLOT_QUERY_TARGET if role == HINTER else SLOT_QUERY_HINT
        return np.array(
            [SLOT_HINTER_CARD] * hand_size + [SLOT_GUESSER_CARD] * hand_size + [query],
            dtype=np.int8,
        )

    def materialize(self, kinds: np.ndarray, combo_idx: np.ndarray) -> np.ndarray:
        """kinds (S,), combo_idx (..., S) -> (..., S, width) float rows."""
        return self.table[kinds, combo_idx]

    def action_rows(self, role: str, combo_idx: np.ndarray) -> np.ndarray:
        return self.table[ACTION_SLOT[role], combo_idx]


@lru_cache(maxsize=32)
def get_encoder(config: GameConfig) -> ObservationEncoder:
    return ObservationEncoder(config)


def encode_observation(state: EpisodeState, role: str, rng: np.random.Generator) -> FeatureSequence:
    """Permuted H1 cards + permuted H2 cards + the query card.

    The query is the target for the hinter and the hint for the guesser; it
    keeps its true owner bit and gets the query flag. Hand permutations are
    resampled fresh on every call.
    """
    config = state.config
    if role == HINTER and state.phase != Phase.AWAIT_HINT:
        raise ProtocolError("hinter observation only exists in the hint phase")
    if role == GUESSER and state.phase == Phase.AWAIT_HINT:
        raise ProtocolError("guesser observation needs a hint")
    enc = get_encoder(config)
    spaces = config.spaces
    n = config.hand_size
    h1 = np.array([spaces.ravel(c) for c in state.hinter_hand], dtype=np.int64)
    h2 = np.array([spaces.ravel(c) for c in state.guesser_hand], dtype=np.int64)
    h1 = h1[rng.permutation(n)]
    h2 = h2[rng.permutation(n)]
    if role == HINTER:
        query = spaces.ravel(state.target_card)
    else:
        query = spaces.ravel(state.hinted_card)
    combo_idx = np.concatenate([h1, h2, [query]])
    vectors = enc.materialize(enc.kinds(role), combo_idx)
    tags = ("hinter_card",) * n + ("guesser_card",) * n + ("query_card",)
    return FeatureSequence(vectors, tags)


# --- symmetries -------------------------------------------------------------

SymmetryTransform = tuple  # one value-index permutation tuple per feature space


def identity_transform(spaces: FeatureSpaces) -> SymmetryTransform:
    return tuple(tuple(range(s.size)) for s in spaces.spaces)


def random_transform(spaces: FeatureSpaces, rng: np.random.Generator) -> SymmetryTransform:
    return tuple(tuple(int(v) for v in rng.permutation(s.size)) for s in spaces.spaces)


def inverse_transform(transform: SymmetryTransform) -> SymmetryTransform:
    out = []
    for perm in transform:
        inv = [0] * len(perm)
        for i, p in enumerate(perm):
            inv[p] = i
        out.append(tuple(inv))
    return tuple(out)


def _check_transform(state: EpisodeState, transform: SymmetryTransform) -> None:
    sizes = state.config.spaces.sizes
    if len(transform) != len(sizes):
        raise ValueError("one permutation per feature space required")
    for perm, size in zip(transform, sizes):
        if sorted(perm) != list(range(size)):
            raise ValueError(f"{perm} is not a bijection on 0..{size - 1}")


def apply_symmetry(state: EpisodeState, transform: SymmetryTransform) -> EpisodeState:
    """Relabel every card's feature values by the per-space permutations."""
    _check_transform(state, transform)

    def relabel(card: Card) -> Card:
        return tuple(perm[v] for perm, v in zip(transform, card))

    return replace(
        state,
        hinter_hand=tuple(relabel(c) for c in state.hinter_hand),
        guesser_hand=tuple(relabel(c) for c in state.guesser_hand),
        hinted_card=None if state.hinted_card is None else relabel(state.hinted_card),
    )


# --- probe scenarios --------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    state: EpisodeState
    human_hint: Card
    note: str = ""


def scenario_library() -> list[Scenario]:
    """Four N=2 probes on the 3x3 grid, each with a human-compatible hint.

    The exact-match and mutual-exclusivity hands follow the canonical
    narrations; the feature-similarity and similarity+exclusivity hands are
    constructions satisfying the same structural constraints (each probe
    dimension is uniquely determined, no accidental ambiguity).
    """
    spaces = standard_spaces()
    config = GameConfig(hand_size=2, spaces=spaces)

    def make(name, h1, h2, target_label, hint, note=""):
        hand1 = tuple(spaces.card_from_label(c) for c in h1)
        hand2 = tuple(spaces.card_from_label(c) for c in h2)
        target = hand2.index(spaces.card_from_label(target_label))
        state = EpisodeState(config, hand1, hand2, target)
        return Scenario(name, state, spaces.card_from_label(hint), note)

    return [
        make(
            "exact_match",
            ["2B", "1C"],
            ["2B", "3A"],
            "2B",
            "2B",
            "hinter holds a copy of the target",
        ),
        make(
            "feature_similarity",
            ["1A", "2B"],
            ["1C", "3B"],
            "1C",
            "1A",
            "no exact match; each hinter card shares exactly one feature with a distinct guesser card",
        ),
        make(
            "mutual_exclusivity",
            ["1B", "3C"],
            ["1B", "2A"],
            "2A",
            "3C",
            "1B would have been the hint for 1B, so 3C must mean 2A despite zero overlap",
        ),
        make(
            "similarity_exclusivity",
            ["1A", "2B"],
            ["1C", "3C"],
            "3C",
            "2B",
            "1A pairs with 1C by similarity, so 2B must mean 3C despite zero overlap",
        ),
    ]
