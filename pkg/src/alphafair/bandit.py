"""Bandit-feedback policies built on a scale-free adversarial MAB subroutine.

The subroutine is exponential weights over importance-weighted reward
estimates. Estimates are divided by the largest reward magnitude observed
so far and the learning rate adapts to the normalised second moment of the
estimates, so multiplying every fed reward by a positive constant leaves
all selection distributions unchanged.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import CumulativeRewards, _check_alpha, update_realized


def context_rng(seed: int, context: int) -> np.random.Generator:
    """Generator for instance ``context`` of a run seeded with ``seed``.

    Streams are keyed by context index, so they do not depend on the order in
    which instances are created.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(context,)))


def exploration_rate(num_arms: int, rounds: int) -> float:
    return min(1.0 / num_arms, 1.0 / math.sqrt(rounds + 1))


@dataclass
class SfMabContextState:
    estimates: np.ndarray
    second_moment: float = 0.0  # sum of p_arm * (reward / p_arm)**2, unnormalised
    G: float = 0.0
    rounds: int = 0
    gamma: float = 0.0

    @classmethod
    def fresh(cls, num_arms: int) -> "SfMabContextState":
        return cls(estimates=np.zeros(num_arms), gamma=exploration_rate(num_arms, 0))

    @property
    def num_arms(self) -> int:
        return self.estimates.shape[0]


def sfmab_distribution(state: SfMabContextState) -> np.ndarray:
    n = state.num_arms
    gamma = exploration_rate(n, state.rounds)
    state.gamma = gamma
    if state.G > 0.0:
        q = state.second_moment / (state.G * state.G)
        eta = math.sqrt(math.log(n)) / math.sqrt(n * (1.0 + q))
        z = eta * (state.estimates / state.G)
        w = np.exp(z - z.max())
        soft = w / w.sum()
    else:
        soft = np.full(n, 1.0 / n)
    return (1.0 - gamma) * soft + gamma / n


def sample_arm(p: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    arm = int(np.searchsorted(np.cumsum(p), u * p.sum(), side="right"))
    return min(arm, p.shape[0] - 1)


def sfmab_select(state: SfMabContextState, rng: np.random.Generator):
    """Return the selection distribution and an arm drawn from it."""
    if rng is None:
        raise ValueError("sfmab_select needs a random generator")
    p = sfmab_distribution(state)
    return p, sample_arm(p, rng)


def sfmab_update(
    state: SfMabContextState, arm: int, observed_reward: float, p_arm: float
) -> SfMabContextState:
    """Importance-weighted update with the reward of the pulled arm only."""
    if not (0.0 < p_arm <= 1.0):
        raise ValueError(f"p_arm must lie in (0, 1], got {p_arm}")
    est = observed_reward / p_arm
    state.estimates[arm] += est
    state.G = max(state.G, abs(observed_reward))
    state.second_moment += p_arm * est * est
    state.rounds += 1
    return state


class MabSubroutine(abc.ABC):
    """Select/update interface of the per-context bandit learner."""

    @abc.abstractmethod
    def select(self, rng: np.random.Generator) -> tuple:
        """Return ``(distribution, arm)``."""

    @abc.abstractmethod
    def update(self, arm: int, reward: float, p_arm: float) -> None:
        ...


class ScaleFreeMab(MabSubroutine):
    def __init__(self, num_arms: int):
        self.state = SfMabContextState.fresh(num_arms)

    def select(self, rng):
        return sfmab_select(self.state, rng)

    def update(self, arm, reward, p_arm):
        sfmab_update(self.state, arm, reward, p_arm)


def faircb_bandit_round(
    instances: Sequence[MabSubroutine],
    R: CumulativeRewards,
    context: int,
    r_t: np.ndarray,
    alpha: float,
    rngs: Sequence[np.random.Generator],
):
    """One round of alpha-FairCB under bandit feedback.

    Only ``r_t[arm]`` is read by the policy. ``R`` is advanced in place.
    Returns the pulled arm and the distribution it was drawn from.
    """
    if not (0 <= context < len(instances)):
        raise IndexError(f"context {context} out of range for {len(instances)} instances")
    inst = instances[context]
    p, arm = inst.select(rngs[context])
    reward = float(r_t[arm])
    modified = reward * R.values[arm] ** (-alpha)
    inst.update(arm, modified, float(p[arm]))
    update_realized(R, arm, reward)
    return arm, p


def sfmab_baseline_round(
    instance: MabSubroutine, R: Optional[CumulativeRewards], r_t: np.ndarray, rng
):
    """Context-agnostic baseline: one shared instance fed raw rewards."""
    p, arm = instance.select(rng)
    reward = float(r_t[arm])
    instance.update(arm, reward, float(p[arm]))
    if R is not None:
        update_realized(R, arm, reward)
    return arm, p


class AlphaFairCBBandit:
    """alpha-FairCB with bandit feedback: M coupled scale-free MAB instances."""

    feedback = "bandit"

    def __init__(self, num_arms: int, num_contexts: int, alpha: float, seed: int,
                 subroutine=ScaleFreeMab):
        _check_alpha(alpha)
        self.alpha = alpha
        self.instances = [subroutine(num_arms) for _ in range(num_contexts)]
        self.rngs = [context_rng(seed, j) for j in range(num_contexts)]

    def play(self, context: int, r_t: np.ndarray, R: CumulativeRewards):
        return faircb_bandit_round(self.instances, R, context, r_t, self.alpha, self.rngs)


class SfMabBaseline:
    """Single scale-free MAB instance that ignores contexts."""

    feedback = "bandit"

    def __init__(self, num_arms: int, seed: int, subroutine=ScaleFreeMab):
        self.instance = subroutine(num_arms)
        # same stream as context 0 of alpha-FairCB, so M=1, alpha=0 runs coincide
        self.rng = context_rng(seed, 0)

    def play(self, context: int, r_t: np.ndarray, R: CumulativeRewards):
        return sfmab_baseline_round(self.instance, R, r_t, self.rng)
