"""Independent Q-learning self-play, plus Other-Play and OBL baseline trainers.

The episode loop is vectorized: parameters only change at update boundaries,
so every episode between two updates can be dealt, encoded, and acted on as
one batch. One update block = update_every new observations = update_every/2
episodes (each episode yields one observation per role).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from hintguess.errors import ConfigurationError, StateError
from hintguess.agents import (
    Agent,
    ArchitectureKind,
    build_agent,
    epsilon_schedule,
)
from hintguess.batchops import (
    egreedy_batch,
    legal_mask_from_hands,
    permute_rows,
    uniform_legal_batch,
)
from hintguess.game import GUESSER, HINTER, GameConfig, get_encoder
from hintguess.numerics import tensor as T
from hintguess.numerics.layers import sgd_step

IQL = "iql"
OTHER_PLAY = "op"
OBL = "obl"

SELF_PLAY = 0
FICTITIOUS_PI0 = 1

PROVENANCE_NAMES = {SELF_PLAY: "self_play", FICTITIOUS_PI0: "fictitious_pi0"}


@dataclass(frozen=True)
class Transition:
    role: str
    obs_indices: np.ndarray  # (seq_len,) combo indices, permutation baked in
    action_index: int  # grid index of the taken feature tuple
    reward: float
    provenance: int = SELF_PLAY


@dataclass
class TransitionBatch:
    obs_indices: np.ndarray  # (B, seq_len) int
    action_index: np.ndarray  # (B,) int
    reward: np.ndarray  # (B,) float
    provenance: np.ndarray  # (B,) int

    def __len__(self) -> int:
        return len(self.reward)


def learning_target(transition: Transition) -> float:
    """Regression target for a completed episode: the raw common reward.

    Both decisions in an episode are terminal-adjacent (the game ends after
    the guess), so one-step Q-learning has no bootstrap term for either role.
    """
    return float(transition.reward)


class ReplayBuffer:
    """Bounded FIFO store with uniform-with-replacement sampling."""

    def __init__(self, capacity: int, seq_len: int):
        if capacity < 1:
            raise ConfigurationError("replay capacity must be >= 1")
        self.capacity = capacity
        self._obs = np.zeros((capacity, seq_len), dtype=np.int16)
        self._act = np.zeros(capacity, dtype=np.int32)
        self._rew = np.zeros(capacity, dtype=np.float64)
        self._prov = np.zeros(capacity, dtype=np.int8)
        self._start = 0  # oldest element
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        self.push_batch(
            t.obs_indices[None, :],
            np.array([t.action_index]),
            np.array([t.reward]),
            np.array([t.provenance]),
        )

    def push_batch(self, obs, act, rew, prov=None) -> None:
        n = len(act)
        if prov is None:
            prov = np.zeros(n, dtype=np.int8)
        if n > self.capacity:  # only the newest fit
            obs, act, rew, prov = (x[-self.capacity:] for x in (obs, act, rew, prov))
            n = self.capacity
        pos = (self._start + self._size + np.arange(n)) % self.capacity
        self._obs[pos] = obs
        self._act[pos] = act
        self._rew[pos] = rew
        self._prov[pos] = prov
        overflow = max(0, self._size + n - self.capacity)
        self._start = (self._start + overflow) % self.capacity
        self._size = min(self.capacity, self._size + n)

    def sample(self, batch: int, rng: np.random.Generator) -> TransitionBatch:
        if self._size < batch:
            raise StateError(f"buffer holds {self._size} < batch {batch}")
        pos = (self._start + rng.integers(0, self._size, size=batch)) % self.capacity
        return TransitionBatch(
            self._obs[pos].astype(np.int64),
            self._act[pos].astype(np.int64),
            self._rew[pos].copy(),
            self._prov[pos].copy(),
        )

    def snapshot(self) -> list[Transition]:
        """Contents oldest-first (for audits)."""
        pos = (self._start + np.arange(self._size)) % self.capacity
        return [
            Transition("?", self._obs[p].copy(), int(self._act[p]), float(self._rew[p]), int(self._prov[p]))
            for p in pos
        ]


class SymmetryGroup:
    """Uniform sampler over products of within-space value permutations."""

    def __init__(self, config: GameConfig, identity_only: bool = False):
        self.config = config
        self.identity_only = identity_only
        self.sizes = config.spaces.sizes

    def n_transforms(self) -> int:
        return 1 if self.identity_only else math.prod(math.factorial(s) for s in self.sizes)

    def sample_relabel_maps(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """(n, n_combos) combo relabeling maps for n sampled transforms."""
        combos = self.config.spaces.n_combos
        if self.identity_only:
            return np.broadcast_to(np.arange(combos), (n, combos))
        perms = [
            np.argsort(rng.random((n, size)), axis=1) for size in self.sizes
        ]
        maps = np.zeros((n, combos), dtype=np.int64)
        for combo in range(combos):
            card = self.config.spaces.unravel(combo)
            relabeled = np.zeros(n, dtype=np.int64)
            for perm, v, size in zip(perms, card, self.sizes):
                relabeled = relabeled * size + perm[:, v]
            maps[:, combo] = relabeled
        return maps


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 4_000_000
    lr: float = 1e-4
    batch_size: int = 500
    update_every: int = 500  # new observations (2 per episode) between SGD steps
    replay_capacity: int = 300_000
    eps_min: float = 0.01
    eps_start: float = 0.95
    eps_decay: float = 50_000.0
    seed: int = 0
    variant: str = IQL
    obl_level: int = 1

    def __post_init__(self):
        if min(self.episodes, self.batch_size, self.update_every, self.replay_capacity) < 1:
            raise ConfigurationError("counts must be positive")
        if self.update_every % 2:
            raise ConfigurationError("update_every must be even (2 observations per episode)")
        if self.variant not in (IQL, OTHER_PLAY, OBL):
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.variant == OBL and self.obl_level < 1:
            raise ConfigurationError("OBL level must be >= 1")


@dataclass
class CurvePoint:
    episode: int
    epsilon: float
    score: float
    loss_hinter: float
    loss_guesser: float


@dataclass
class TrainResult:
    hinter: Agent
    guesser: Agent
    curve: list[CurvePoint]
    config: TrainConfig
    game: GameConfig
    kind: ArchitectureKind



class _SelfPlayLoop:
    """One training run; variant differences are hooks on this loop."""

    def __init__(
        self,
        config: TrainConfig,
        game: GameConfig,
        kind: ArchitectureKind,
        symmetry: Optional[SymmetryGroup] = None,
        frozen_pi0: Optional[Agent] = None,
    ):
        self.tc = config
        self.gc = game
        self.kind = kind
        self.symmetry = symmetry
        self.frozen_pi0 = frozen_pi0
        self.hinter = build_agent(kind, game, HINTER, config.seed)
        self.guesser = build_agent(kind, game, GUESSER, config.seed)
        self.encoder = get_encoder(game)
        self.rng = np.random.default_rng([config.seed, 1])
        self.sym_rng = np.random.default_rng([config.seed, 2])
        seq = game.seq_len
        self.replay = {
            HINTER: ReplayBuffer(config.replay_capacity, seq),
            GUESSER: ReplayBuffer(config.replay_capacity, seq),
        }
        self.curve: list[CurvePoint] = []

    # --- helpers ---

    def _deal(self, b: int):
        combos = self.gc.spaces.n_combos
        n = self.gc.hand_size
        h1 = self.rng.integers(0, combos, size=(b, n))
        h2 = h1.copy() if self.gc.same_hand else self.rng.integers(0, combos, size=(b, n))
        target_pos = self.rng.integers(0, n, size=b)
        return h1, h2, target_pos

    def _observe(self, role: str, h1: np.ndarray, h2: np.ndarray, query: np.ndarray) -> np.ndarray:
        """Freshly permuted hands + query column -> (B, seq) combo indices."""
        return np.concatenate(
            [
                permute_rows(h1, self.rng),
                permute_rows(h2, self.rng),
                query[:, None],
            ],
            axis=1,
        )

    def _act(self, agent: Agent, obs_idx: np.ndarray, legal: np.ndarray, eps: np.ndarray) -> np.ndarray:
        obs = self.encoder.materialize(self.encoder.kinds(agent.role), obs_idx)
        q = agent.q_batch(obs, legal)
        return egreedy_batch(q, legal, eps, self.rng)

    def _update(self, agent: Agent) -> float:
        buf = self.replay[agent.role]
        if len(buf) < self.tc.batch_size:
            return math.nan
        batch = buf.sample(self.tc.batch_size, self.rng)
        obs = self.encoder.materialize(self.encoder.kinds(agent.role), batch.obs_indices)
        pred = agent.q_taken_t(obs, batch.action_index)
        loss = T.mse_loss(pred, batch.reward)
        T.backward(loss)
        sgd_step(agent.params, self.tc.lr)
        return float(loss.data)

    # --- one block of episodes between two updates ---

    def _play_block(self, first_episode: int, b: int) -> float:
        tc, gc = self.tc, self.gc
        eps = tc.eps_min + (tc.eps_start - tc.eps_min) * np.exp(
            -(first_episode + np.arange(b)) / tc.eps_decay
        )
        h1, h2, target_pos = self._deal(b)
        target_combo = h2[np.arange(b), target_pos]

        obs_h = self._observe(HINTER, h1, h2, target_combo)
        hint = self._act(self.hinter, obs_h, legal_mask_from_hands(h1, gc.n_actions), eps)

        # the guesser may see a feature-relabeled version of the game
        if self.symmetry is not None:
            maps = self.symmetry.sample_relabel_maps(b, self.sym_rng)
            rows = np.arange(b)[:, None]
            h1_g, h2_g = maps[rows, h1], maps[rows, h2]
            hint_g = maps[np.arange(b), hint]
            target_g = maps[np.arange(b), target_combo]
        else:
            h1_g, h2_g, hint_g, target_g = h1, h2, hint, target_combo

        obs_g = self._observe(GUESSER, h1_g, h2_g, hint_g)
        guess = self._act(self.guesser, obs_g, legal_mask_from_hands(h2_g, gc.n_actions), eps)
        reward = (guess == target_g).astype(np.float64)

        self.replay[HINTER].push_batch(obs_h, hint, reward)
        if self.tc.variant == OBL:
            self._push_fictitious(h1, h2, target_combo, eps)
        else:
            self.replay[GUESSER].push_batch(obs_g, guess, reward)
        return float(reward.mean())

    def _push_fictitious(self, h1, h2, target_combo, eps) -> None:
        """OBL: the guesser trains on hints drawn from the fixed lower-level policy."""
        b = len(target_combo)
        legal_h = legal_mask_from_hands(h1, self.gc.n_actions)
        if self.frozen_pi0 is None:  # level 1: uniform over legal hints
            hint0 = uniform_legal_batch(legal_h, self.rng)
        else:
            obs0 = self._observe(HINTER, h1, h2, target_combo)
            rows = self.encoder.materialize(self.encoder.kinds(HINTER), obs0)
            q0 = self.frozen_pi0.q_batch(rows, legal_h)
            hint0 = np.argmax(q0, axis=1)
        obs_g0 = self._observe(GUESSER, h1, h2, hint0)
        guess0 = self._act(self.guesser, obs_g0, legal_mask_from_hands(h2, self.gc.n_actions), eps)
        reward0 = (guess0 == target_combo).astype(np.float64)
        self.replay[GUESSER].push_batch(
            obs_g0, guess0, reward0, np.full(b, FICTITIOUS_PI0, dtype=np.int8)
        )

    def run(self) -> TrainResult:
        tc = self.tc
        block = tc.update_every // 2
        episode = 0
        while episode < tc.episodes:
            b = min(block, tc.episodes - episode)
            score = self._play_block(episode, b)
            episode += b
            if b == block:
                loss_h = self._update(self.hinter)
                loss_g = self._update(self.guesser)
            else:
                loss_h = loss_g = math.nan
            self.curve.append(
                CurvePoint(episode, epsilon_schedule(episode, tc.eps_min, tc.eps_start, tc.eps_decay), score, loss_h, loss_g)
            )
        return TrainResult(self.hinter, self.guesser, self.curve, tc, self.gc, self.kind)


def run_selfplay(config: TrainConfig, game: GameConfig, kind: ArchitectureKind) -> TrainResult:
    """Standard IQL self-play."""
    return _SelfPlayLoop(config, game, kind).run()


def run_other_play(
    config: TrainConfig,
    game: GameConfig,
    kind: ArchitectureKind,
    identity_only: bool = False,
) -> TrainResult:
    """IQL where the guesser plays a per-episode feature-relabeled game."""
    group = SymmetryGroup(game, identity_only=identity_only)
    return _SelfPlayLoop(config, game, kind, symmetry=group).run()


def run_obl(
    config: TrainConfig,
    game: GameConfig,
    kind: ArchitectureKind,
    level: int = 1,
    lower_hinter: Optional[Agent] = None,
) -> TrainResult:
    """Off-belief training: the guesser learns against fictitious hints.

    Level 1 draws fictitious hints uniformly from the hinter's legal set;
    level k>1 draws them from the frozen level k-1 hinter (greedy). The
    hinter itself trains against the concurrently learning guesser.
    """
    if level > 1 and lower_hinter is None:
        raise ConfigurationError(f"OBL level {level} needs the level {level - 1} hinter")
    tc = replace(config, variant=OBL, obl_level=level)
    return _SelfPlayLoop(tc, game, kind, frozen_pi0=lower_hinter if level > 1 else None).run()
