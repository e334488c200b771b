"""The five Q-architectures behind one interface: observation in, masked Q out.

Batched entry points come in two flavors: `q_batch` (forward-only, via the
kernel backend, used for acting and evaluation) and `q_taken_t` (autodiff,
used for training updates). Both share the same parameters and agree to
float64 roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hintguess.errors import ConfigurationError
from hintguess.game import (
    GameConfig,
    FeatureSequence,
    ObservationEncoder,
    get_encoder,
)
from hintguess.numerics import backend
from hintguess.numerics import tensor as T
from hintguess.numerics.layers import (
    SCALE_BY_INPUT_COUNT,
    AttentionSpec,
    ParameterSet,
    add_attention,
    add_mlp,
    cross_attention_t,
    mlp_forward_t,
    self_attention_t,
)

MLP = "mlp"
MLP_ACTION_IN = "mlp_action_in"
ATTN = "attn"
CA2I = "ca2i"
SA2I = "sa2i"

ALL_KINDS = (MLP, MLP_ACTION_IN, ATTN, CA2I, SA2I)
ATTENTION_KINDS = (ATTN, CA2I, SA2I)
PER_ACTION_KINDS = (MLP_ACTION_IN, SA2I)

MASK_SENTINEL = -1e9

HIDDEN_WIDTH = 128
HIDDEN_LAYERS = 3

_ROLE_ID = {"hinter": 0, "guesser": 1}


@dataclass(frozen=True)
class ArchitectureKind:
    name: str
    attention: Optional[AttentionSpec] = None

    def __post_init__(self):
        if self.name not in ALL_KINDS:
            raise ConfigurationError(f"unknown architecture {self.name!r}")
        if self.name in ATTENTION_KINDS and self.attention is None:
            object.__setattr__(self, "attention", AttentionSpec())
        if self.name not in ATTENTION_KINDS and self.attention is not None:
            raise ConfigurationError(f"{self.name} takes no attention spec")


@dataclass(frozen=True)
class QVector:
    values: np.ndarray  # (n_actions,), masked entries hold the sentinel
    mask: np.ndarray  # bool (n_actions,)

    def argmax_legal(self) -> int:
        legal = np.flatnonzero(self.mask)
        return int(legal[int(np.argmax(self.values[legal]))])


class Agent:
    """One trained (or training) player: architecture + parameters + role."""

    def __init__(self, kind: ArchitectureKind, config: GameConfig, role: str, seed: int):
        if role not in _ROLE_ID:
            raise ValueError(f"unknown role {role!r}")
        self.kind = kind
        self.config = config
        self.role = role
        self.seed = seed
        self.encoder: ObservationEncoder = get_encoder(config)
        self.params = ParameterSet()
        self.forward_passes = 0  # logical per-action passes, for instrumentation
        rng = np.random.default_rng([seed, _ROLE_ID[role], ALL_KINDS.index(kind.name)])
        self._build(rng)

    # --- construction -------------------------------------------------------

    def _build(self, rng) -> None:
        cfg = self.config
        w, s, a = cfg.card_width, cfg.seq_len, cfg.n_actions
        hidden = [HIDDEN_WIDTH] * HIDDEN_LAYERS
        name = self.kind.name
        if name == MLP:
            add_mlp(self.params, "fc", [s * w] + hidden + [a], rng)
        elif name == MLP_ACTION_IN:
            add_mlp(self.params, "fc", [s * w + w] + hidden + [1], rng)
        elif name == ATTN:
            dim = self.kind.attention.resolved_dim(w)
            add_attention(self.params, "sa", w, self.kind.attention, rng)
            add_mlp(self.params, "fc", [dim] + hidden + [a], rng)
        elif name == CA2I:
            dim = self.kind.attention.resolved_dim(w)
            add_attention(self.params, "ca", w, self.kind.attention, rng)
            add_mlp(self.params, "fc", [dim] + hidden + [a], rng)
        elif name == SA2I:
            dim = self.kind.attention.resolved_dim(w)
            add_attention(self.params, "sa", w, self.kind.attention, rng)
            add_mlp(self.params, "fc", [dim] + hidden + [1], rng)

    # --- shared plumbing ----------------------------------------------------

    def _mlp_arrays(self):
        ws, bs = [], []
        i = 1
        while f"fc{i}.weight" in self.params:
            ws.append(self.params[f"fc{i}.weight"].data)
            bs.append(self.params[f"fc{i}.bias"].data)
            i += 1
        return ws, bs

    def _attn_arrays(self, prefix: str):
        spec = self.kind.attention
        return [
            tuple(self.params[f"{prefix}{layer}.{p}"].data for p in ("wq", "wk", "wv", "wo"))
            for layer in range(1, spec.layers + 1)
        ]

    def _denom(self, n_keys: int) -> float:
        spec = self.kind.attention
        if spec.scale_mode == SCALE_BY_INPUT_COUNT:
            return math.sqrt(n_keys)
        return math.sqrt(spec.resolved_dim(self.config.card_width) // spec.heads)

    def _sa_stack(self, x: np.ndarray, prefix: str = "sa") -> np.ndarray:
        spec = self.kind.attention
        denom = self._denom(x.shape[1])
        for wq, wk, wv, wo in self._attn_arrays(prefix):
            x = backend.sa_forward(x, wq, wk, wv, wo, spec.heads, denom)
        return x

    def _ca_stack(self, queries: np.ndarray, context: np.ndarray) -> np.ndarray:
        spec = self.kind.attention
        denom = self._denom(context.shape[1])
        y = queries
        for wq, wk, wv, wo in self._attn_arrays("ca"):
            y = backend.ca_forward(y, context, wq, wk, wv, wo, spec.heads, denom)
        return y

    def _action_rows(self) -> np.ndarray:
        return self.encoder.action_rows(self.role, np.arange(self.config.n_actions))

    # --- inference (kernel backend) ------------------------------------------

    def q_batch(self, obs: np.ndarray, legal: np.ndarray) -> np.ndarray:
        """obs (B, S, w) float rows, legal (B, A) bool -> (B, A) masked Q."""
        b = obs.shape[0]
        a = self.config.n_actions
        ws, bs = self._mlp_arrays()
        name = self.kind.name
        if name == MLP:
            q = backend.mlp_forward(obs.reshape(b, -1), ws, bs)
            self.forward_passes += b
        elif name == ATTN:
            pooled = self._sa_stack(obs).mean(axis=1)
            q = backend.mlp_forward(pooled, ws, bs)
            self.forward_passes += b
        elif name == CA2I:
            queries = np.broadcast_to(self._action_rows(), (b, a, self.config.card_width))
            pooled = self._ca_stack(np.ascontiguousarray(queries), obs).mean(axis=1)
            q = backend.mlp_forward(pooled, ws, bs, relu_hidden=False)
            self.forward_passes += b
        else:  # one forward pass per legal action
            ep, act = np.nonzero(legal)
            rows = self.encoder.action_rows(self.role, act)
            if name == MLP_ACTION_IN:
                flat = np.concatenate([obs.reshape(b, -1)[ep], rows], axis=1)
                vals = backend.mlp_forward(flat, ws, bs)[:, 0]
            else:  # SA2I
                seq = np.concatenate([obs[ep], rows[:, None, :]], axis=1)
                pooled = self._sa_stack(seq).mean(axis=1)
                vals = backend.mlp_forward(pooled, ws, bs)[:, 0]
            self.forward_passes += len(ep)
            q = np.full((b, a), MASK_SENTINEL)
            q[ep, act] = vals
            return q
        return np.where(legal, q, MASK_SENTINEL)

    # --- training (autodiff) --------------------------------------------------

    def q_taken_t(self, obs: np.ndarray, action_idx: np.ndarray) -> T.Tensor:
        """Q(observation)[taken action] as a Tensor batch: obs (B,S,w), idx (B,)."""
        b = obs.shape[0]
        a = self.config.n_actions
        name = self.kind.name
        spec = self.kind.attention
        if name == MLP:
            out = mlp_forward_t(self.params, "fc", T.constant(obs.reshape(b, -1)))
            return T.gather_last(out, action_idx)
        if name == ATTN:
            h = self_attention_t(self.params, "sa", T.constant(obs), spec)
            out = mlp_forward_t(self.params, "fc", T.mean_axis(h, 1))
            return T.gather_last(out, action_idx)
        if name == CA2I:
            queries = np.broadcast_to(self._action_rows(), (b, a, self.config.card_width))
            h = cross_attention_t(
                self.params, "ca", T.constant(np.ascontiguousarray(queries)), T.constant(obs), spec
            )
            out = mlp_forward_t(self.params, "fc", T.mean_axis(h, 1), relu_hidden=False)
            return T.gather_last(out, action_idx)
        rows = self.encoder.action_rows(self.role, action_idx)
        if name == MLP_ACTION_IN:
            flat = np.concatenate([obs.reshape(b, -1), rows], axis=1)
            out = mlp_forward_t(self.params, "fc", T.constant(flat))
            return T.reshape(out, (b,))
        seq = np.concatenate([obs, rows[:, None, :]], axis=1)
        h = self_attention_t(self.params, "sa", T.constant(seq), spec)
        out = mlp_forward_t(self.params, "fc", T.mean_axis(h, 1))
        return T.reshape(out, (b,))


def build_agent(kind: ArchitectureKind, config: GameConfig, role: str, seed: int) -> Agent:
    return Agent(kind, config, role, seed)


def q_values(agent: Agent, observation: FeatureSequence, legal_mask: np.ndarray) -> QVector:
    """Masked Q-vector for a single encoded observation.

    Attention-based kinds accept any sequence length (e.g. probe scenarios
    with a smaller hand); the flat MLP kinds are bound to their training
    sequence length.
    """
    width = agent.config.card_width
    seq = observation.vectors.shape[0]
    if observation.vectors.shape[-1] != width:
        raise ConfigurationError(
            f"observation width {observation.vectors.shape[-1]} != config width {width}"
        )
    if agent.kind.name in (MLP, MLP_ACTION_IN) and seq != agent.config.seq_len:
        raise ConfigurationError(
            f"{agent.kind.name} needs sequence length {agent.config.seq_len}, got {seq}"
        )
    q = agent.q_batch(observation.vectors[None, :, :], legal_mask[None, :])
    return QVector(q[0], legal_mask.astype(bool))


def select_action(qvec: QVector, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over legal entries; greedy ties go to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    legal = np.flatnonzero(qvec.mask)
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(legal[rng.integers(len(legal))])
    return int(legal[int(np.argmax(qvec.values[legal]))])


def epsilon_schedule(n: int, eps_min: float = 0.01, eps_start: float = 0.95, decay: float = 50_000.0) -> float:
    """Exponentially decayed exploration rate at episode n."""
    if n < 0:
        raise ValueError("episode count must be >= 0")
    return eps_min + (eps_start - eps_min) * math.exp(-n / decay)
