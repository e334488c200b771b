"""Gradient validation harness over whole architectures."""

from __future__ import annotations

import numpy as np

from hintguess.agents import Agent, ArchitectureKind, build_agent
from hintguess.game import (
    GUESSER,
    HINTER,
    GameConfig,
    encode_observation,
    legal_actions,
    new_game,
    step,
)
from hintguess.numerics import tensor as T
from hintguess.numerics.gradcheck import grad_check


def _random_instance(agent: Agent, rng: np.random.Generator):
    """A (observation, legal action, regression target) triple for agent's role."""
    config = agent.config
    state = new_game(config, rng)
    if agent.role == GUESSER:
        hint_set = legal_actions(state, HINTER)
        state = step(state, hint_set.cards[rng.integers(len(hint_set))])
    legal = legal_actions(state, agent.role)
    obs = encode_observation(state, agent.role, rng).vectors[None, :, :]
    action_idx = np.array([config.spaces.ravel(legal.cards[rng.integers(len(legal))])])
    target = rng.random(1)
    return obs, action_idx, target


def architecture_grad_check(
    kind: ArchitectureKind,
    config: GameConfig,
    samples: int = 20,
    seed: int = 0,
    h: float = 1e-5,
    entries_per_param: int = 6,
) -> float:
    """Worst analytic-vs-finite-difference relative error over random instances.

    Alternates hinter and guesser roles across instances; parameters are the
    random initialization for the given seed.
    """
    worst = 0.0
    agents = {
        HINTER: build_agent(kind, config, HINTER, seed),
        GUESSER: build_agent(kind, config, GUESSER, seed),
    }
    rng = np.random.default_rng([seed, 99])
    for i in range(samples):
        agent = agents[HINTER if i % 2 == 0 else GUESSER]
        obs, action_idx, target = _random_instance(agent, rng)

        def loss_fn():
            return T.mse_loss(agent.q_taken_t(obs, action_idx), target)

        err = grad_check(
            loss_fn, agent.params, h=h, max_entries_per_param=entries_per_param, rng=rng
        )
        worst = max(worst, err)
    return worst
