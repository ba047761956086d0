"""Shared domain types, alpha-fair utility math and cumulative-reward accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Sum tolerance for a vector to count as a probability distribution.
DIST_TOL = 1e-9


def _check_alpha(alpha: float) -> None:
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha!r}")


def check_distribution(x: np.ndarray, n: Optional[int] = None) -> None:
    """Raise ValueError unless ``x`` is a probability vector (of length ``n``)."""
    if x.ndim != 1 or (n is not None and x.shape[0] != n):
        raise ValueError(f"expected a length-{n} vector, got shape {x.shape}")
    if np.any(x < 0.0) or abs(float(x.sum()) - 1.0) > DIST_TOL:
        raise ValueError(f"not a distribution: {x}")


@dataclass(frozen=True)
class AdversarySequence:
    """Oblivious adversary: a fixed stream of (context, reward vector) pairs.

    ``rewards[t]`` is the reward vector revealed on round ``t + 1``; every
    entry lies in ``[delta, 1]``.
    """

    num_arms: int
    num_contexts: int
    contexts: np.ndarray
    rewards: np.ndarray
    delta: float

    def __post_init__(self):
        contexts = np.asarray(self.contexts, dtype=np.int64).reshape(-1)
        rewards = np.asarray(self.rewards, dtype=np.float64)
        if rewards.size == 0:
            rewards = rewards.reshape(0, self.num_arms)
        if self.num_arms < 1 or self.num_contexts < 1:
            raise ValueError("num_arms and num_contexts must be positive")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        if rewards.ndim != 2 or rewards.shape != (contexts.shape[0], self.num_arms):
            raise ValueError(
                f"rewards must be T x N = {contexts.shape[0]} x {self.num_arms}, "
                f"got {rewards.shape}"
            )
        if contexts.size and (contexts.min() < 0 or contexts.max() >= self.num_contexts):
            raise ValueError("context index out of range")
        if rewards.size and (rewards.min() < self.delta or rewards.max() > 1.0):
            raise ValueError(f"rewards must lie in [delta, 1] = [{self.delta}, 1]")
        contexts.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "contexts", contexts)
        object.__setattr__(self, "rewards", rewards)

    @property
    def horizon(self) -> int:
        return int(self.contexts.shape[0])

    def head(self, t: int) -> "AdversarySequence":
        """The first ``t`` rounds as a new sequence."""
        return AdversarySequence(
            self.num_arms, self.num_contexts, self.contexts[:t], self.rewards[:t], self.delta
        )


@dataclass(frozen=True)
class FairnessParams:
    alpha: float
    beta: float = field(init=False)
    c_alpha: float = field(init=False)

    def __post_init__(self):
        _check_alpha(self.alpha)
        object.__setattr__(self, "beta", 1.0 / (1.0 - self.alpha))
        object.__setattr__(self, "c_alpha", c_alpha(self.alpha))


def utility(x, alpha: float):
    """alpha-fair utility ``x**(1 - alpha) / (1 - alpha)``; accepts scalars or arrays."""
    _check_alpha(alpha)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise ValueError("utility is defined for x > 0 only")
    out = arr ** (1.0 - alpha) / (1.0 - alpha)
    return float(out) if out.ndim == 0 else out


def utility_grad(x, alpha: float):
    """Derivative of :func:`utility`, i.e. ``x**(-alpha)``."""
    _check_alpha(alpha)
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise ValueError("utility_grad is defined for x > 0 only")
    out = arr ** (-alpha)
    return float(out) if out.ndim == 0 else out


def c_alpha(alpha: float) -> float:
    """Approximation factor ``(1 - alpha)**(-(1 - alpha))``; bounded by e**(1/e)."""
    _check_alpha(alpha)
    return (1.0 - alpha) ** (-(1.0 - alpha))


def beta(alpha: float) -> float:
    _check_alpha(alpha)
    return 1.0 / (1.0 - alpha)


class CumulativeRewards:
    """Per-arm cumulative reward vector, initialised to all ones.

    The update functions mutate in place and return the same object; a
    ``CumulativeRewards`` belongs to exactly one run.
    """

    __slots__ = ("values", "rounds")

    def __init__(self, num_arms: int = None, values=None):
        if values is None:
            if num_arms is None or num_arms < 1:
                raise ValueError("num_arms must be a positive count")
            self.values = np.ones(num_arms, dtype=np.float64)
        else:
            self.values = np.array(values, dtype=np.float64)
            if self.values.ndim != 1 or np.any(self.values < 1.0):
                raise ValueError("cumulative rewards must be a vector with entries >= 1")
        self.rounds = 0

    @property
    def num_arms(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "CumulativeRewards":
        other = CumulativeRewards(values=self.values)
        other.rounds = self.rounds
        return other

    def __repr__(self):
        return f"CumulativeRewards({self.values.tolist()!r})"


def _check_rewards(r: np.ndarray, delta: Optional[float]) -> None:
    lo = delta if delta is not None else 0.0
    if np.any(r > 1.0) or (np.any(r < lo) if delta is not None else np.any(r <= 0.0)):
        raise ValueError(f"rewards out of range [{lo}, 1]: {r}")


def update_expected(
    R: CumulativeRewards, x, r, delta: Optional[float] = None, check: bool = True
) -> CumulativeRewards:
    """Full-information accounting: ``R_i += x_i * r_i``."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x.shape != R.values.shape or r.shape != R.values.shape:
        raise ValueError(
            f"dimension mismatch: R{R.values.shape}, x{x.shape}, r{r.shape}"
        )
    if check:
        check_distribution(x)
        _check_rewards(r, delta)
    R.values += x * r
    R.rounds += 1
    return R


def update_realized(
    R: CumulativeRewards, arm: int, r_arm: float, delta: Optional[float] = None
) -> CumulativeRewards:
    """Bandit accounting: only the pulled arm's entry grows, by ``r_arm``."""
    if not (0 <= arm < R.num_arms):
        raise IndexError(f"arm {arm} out of range for {R.num_arms} arms")
    lo = delta if delta is not None else 0.0
    if not (r_arm <= 1.0 and (r_arm >= lo if delta is not None else r_arm > 0.0)):
        raise ValueError(f"reward {r_arm} out of range [{lo}, 1]")
    R.values[arm] += r_arm
    R.rounds += 1
    return R


class RunTrace:
    """Per-round record of a run, stored as preallocated arrays.

    Row ``k`` describes round ``t = k + 1``: the revealed context, the played
    distribution, the pulled arm (``-1`` under full information), the full
    reward vector, the post-round cumulative rewards and the surrogate
    gradient ``utility_grad(R(t-1)) * r(t)``.
    """

    def __init__(self, horizon: int, num_arms: int, num_contexts: int, feedback: str):
        if feedback not in ("full_info", "bandit"):
            raise ValueError(f"unknown feedback mode {feedback!r}")
        self.feedback = feedback
        self.num_arms = num_arms
        self.num_contexts = num_contexts
        self.contexts = np.zeros(horizon, dtype=np.int64)
        self.played = np.zeros((horizon, num_arms))
        self.arms = np.full(horizon, -1, dtype=np.int64)
        self.rewards = np.zeros((horizon, num_arms))
        self.cumulative = np.zeros((horizon, num_arms))
        self.grads = np.zeros((horizon, num_arms))
        self.length = 0

    def record(self, context, played, arm, rewards, cumulative, grad) -> None:
        k = self.length
        self.contexts[k] = context
        self.played[k] = played
        if arm is not None:
            self.arms[k] = arm
        self.rewards[k] = rewards
        self.cumulative[k] = cumulative
        self.grads[k] = grad
        self.length = k + 1

    def __len__(self):
        return self.length

    def actions(self, t: Optional[int] = None, start: int = 0) -> np.ndarray:
        """Played vectors for rounds ``start+1 .. t``: distributions under full
        information, one-hot pulls under bandit feedback."""
        t = self.length if t is None else t
        if self.feedback == "full_info":
            return self.played[start:t]
        onehot = np.zeros((t - start, self.num_arms))
        onehot[np.arange(t - start), self.arms[start:t]] = 1.0
        return onehot

    def cumulative_at(self, t: int) -> np.ndarray:
        """R(t); ``t = 0`` gives the all-ones initialisation."""
        if t == 0:
            return np.ones(self.num_arms)
        if not (0 < t <= self.length):
            raise ValueError(f"round {t} outside recorded range [0, {self.length}]")
        return self.cumulative[t - 1]

    def check(self) -> None:
        """Assert the stored distributions and R snapshots are well formed."""
        n = self.length
        p = self.played[:n]
        if np.any(p < 0.0) or np.any(np.abs(p.sum(axis=1) - 1.0) > DIST_TOL):
            raise AssertionError("trace holds an invalid distribution")
        if n > 1 and np.any(np.diff(self.cumulative[:n], axis=0) < 0.0):
            raise AssertionError("cumulative rewards decreased")
