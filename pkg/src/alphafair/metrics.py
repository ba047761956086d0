"""Fairness and regret metrics computed from a RunTrace."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .benchmark import reward_totals, surrogate_totals
from .core import AdversarySequence, RunTrace, c_alpha, utility
from .full_info import DIAMETER


@dataclass
class MetricSeries:
    name: str
    checkpoints: List[Tuple[int, float]] = field(default_factory=list)

    def append(self, t: int, value: float) -> None:
        if self.checkpoints and t <= self.checkpoints[-1][0]:
            raise ValueError(f"checkpoint rounds must increase: {t} after {self.checkpoints[-1][0]}")
        self.checkpoints.append((t, float(value)))

    def rounds(self) -> np.ndarray:
        return np.array([t for t, _ in self.checkpoints], dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.checkpoints])


def alpha_performance(R, alpha: float) -> float:
    """Total alpha-fair utility of the cumulative reward vector."""
    return float(np.sum(utility(np.asarray(getattr(R, "values", R)), alpha)))


def jain_index(R) -> float:
    R = np.asarray(getattr(R, "values", R), dtype=np.float64)
    if R.size == 0 or np.any(R <= 0.0):
        raise ValueError("Jain's index needs a non-empty vector of positive entries")
    return float(R.sum() ** 2 / (R.size * np.sum(R * R)))


def avg_cumulative_reward(R) -> float:
    R = np.asarray(getattr(R, "values", R), dtype=np.float64)
    return float(R.mean())


def approx_regret(trace: RunTrace, benchmark_objective: float, alpha: float,
                  t: Optional[int] = None, c: Optional[float] = None) -> float:
    """Benchmark utility minus ``c`` times the policy's utility at round ``t``.

    ``c`` defaults to the approximation factor ``c_alpha(alpha)``.
    """
    t = trace.length if t is None else t
    if t > trace.length:
        raise ValueError(f"trace has {trace.length} rounds, asked for {t}")
    c = c_alpha(alpha) if c is None else c
    return benchmark_objective - c * alpha_performance(trace.cumulative_at(t), alpha)


def per_context_surrogate_regret(trace: RunTrace, t: Optional[int] = None) -> np.ndarray:
    """Regret of each context's learner against its best fixed arm on the
    linearised rewards."""
    t = trace.length if t is None else t
    G = surrogate_totals(trace, t)
    earned = np.zeros(trace.num_contexts)
    np.add.at(earned, trace.contexts[:t],
              np.einsum("ti,ti->t", trace.grads[:t], trace.actions(t)))
    return G.max(axis=1) - earned


def surrogate_regret(trace: RunTrace, t: Optional[int] = None) -> float:
    return float(per_context_surrogate_regret(trace, t).sum())


def oga_regret_bound(trace: RunTrace, t: Optional[int] = None) -> np.ndarray:
    """Per-context adaptive OGA guarantee ``D * sqrt(2 * sum ||g_t||^2)``."""
    t = trace.length if t is None else t
    sq = np.zeros(trace.num_contexts)
    np.add.at(sq, trace.contexts[:t], np.einsum("ti,ti->t", trace.grads[:t], trace.grads[:t]))
    return DIAMETER * np.sqrt(2.0 * sq)


def reduction_bound(surrogate: float, alpha: float, num_arms: int) -> float:
    """Right-hand side ``(1-alpha)**alpha * surrogate + c_alpha * N`` that upper
    bounds the c_alpha-approximate regret of any policy."""
    return (1.0 - alpha) ** alpha * surrogate + c_alpha(alpha) * num_arms


def standard_regret(trace: RunTrace, seq: Optional[AdversarySequence] = None,
                    t: Optional[int] = None) -> float:
    """Best fixed per-context arm's raw reward minus the policy's raw reward."""
    t = trace.length if t is None else t
    rewards = trace.rewards[:t] if seq is None else seq.rewards[:t]
    if seq is not None:
        W = reward_totals(seq, t)
    else:
        W = np.zeros((trace.num_contexts, trace.num_arms))
        np.add.at(W, trace.contexts[:t], rewards)
    earned = float(np.einsum("ti,ti->", rewards, trace.actions(t)))
    return float(W.max(axis=1).sum()) - earned
