"""Full-information policies: per-context adaptive OGA (alpha-FairCB), Hedge,
and the probability-floored FairCB baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import _check_alpha

# Euclidean diameter bound of the probability simplex.
DIAMETER = math.sqrt(2.0)

GRADIENT_TIMINGS = ("previous_occurrence", "current_round")


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold).

    >>> simplex_project([1.5, 0.5])
    array([1., 0.])
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("simplex_project expects a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite input to simplex_project: {v}")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0.0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.clip(v - theta, 0.0, 1.0)


def simplex_project_rows(V: np.ndarray) -> np.ndarray:
    """Project every row of a 2-D array onto the simplex."""
    V = np.asarray(V, dtype=np.float64)
    m, n = V.shape
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    k = np.arange(1, n + 1)
    rho = np.count_nonzero(U - css / k > 0.0, axis=1) - 1
    theta = css[np.arange(m), rho] / (rho + 1)
    return np.clip(V - theta[:, None], 0.0, 1.0)


@dataclass
class OgaContextState:
    """Online gradient ascent state of one context."""

    x: np.ndarray
    S: float = 0.0
    last_reward: Optional[np.ndarray] = None
    seen: bool = False

    @classmethod
    def fresh(cls, num_arms: int) -> "OgaContextState":
        return cls(x=np.full(num_arms, 1.0 / num_arms))


def _oga_step(state: OgaContextState, g: np.ndarray) -> None:
    state.S += float(g @ g)
    state.x = simplex_project(state.x + (DIAMETER / math.sqrt(2.0 * state.S)) * g)


def faircb_full_select(
    state: OgaContextState, R, alpha: float, gradient_timing: str = "previous_occurrence"
) -> np.ndarray:
    """Distribution to play for the context owning ``state``.

    ``R`` holds the pre-round cumulative rewards ``R(t-1)``. Under the default
    timing the gradient is the reward vector seen at the context's previous
    occurrence scaled by ``R(t-1)**-alpha``, and the ascent step happens here.
    Under ``current_round`` timing the step already happened in
    :func:`faircb_full_observe`, so the stored iterate is returned unchanged.
    """
    if gradient_timing == "current_round" or not state.seen:
        return state.x.copy()
    if state.last_reward is None:
        raise RuntimeError("context marked seen but holds no previous reward vector")
    R = np.asarray(getattr(R, "values", R), dtype=np.float64)
    _oga_step(state, state.last_reward * R ** (-alpha))
    return state.x.copy()


def faircb_full_observe(
    state: OgaContextState,
    r_t,
    R_prev=None,
    alpha: Optional[float] = None,
    gradient_timing: str = "previous_occurrence",
) -> OgaContextState:
    """Record this round's reward vector for the context.

    With ``current_round`` timing the ascent step is taken immediately with
    gradient ``R_prev**-alpha * r_t`` and the new iterate is played on the
    context's next occurrence.
    """
    r_t = np.asarray(r_t, dtype=np.float64)
    if r_t.shape != state.x.shape:
        raise ValueError(f"reward vector shape {r_t.shape} != {state.x.shape}")
    if gradient_timing == "current_round":
        if R_prev is None or alpha is None:
            raise ValueError("current_round timing needs R_prev and alpha")
        R_prev = np.asarray(getattr(R_prev, "values", R_prev), dtype=np.float64)
        _oga_step(state, r_t * R_prev ** (-alpha))
    state.last_reward = r_t.copy()
    state.seen = True
    return state


def _softmax(z: np.ndarray) -> np.ndarray:
    w = np.exp(z - z.max())
    return w / w.sum()


def hedge_eta(num_arms: int, horizon: Optional[int]) -> float:
    if not horizon:
        raise ValueError("Hedge needs either a known horizon or an explicit eta")
    return math.sqrt(8.0 * math.log(num_arms) / horizon)


def hedge_select(log_weights: np.ndarray, eta: float = None) -> np.ndarray:
    """Normalised exponential weights. Weights are kept in log space."""
    return _softmax(np.asarray(log_weights, dtype=np.float64))


def hedge_update(log_weights: np.ndarray, r_t, eta: float) -> np.ndarray:
    """Multiply every weight by ``exp(eta * r_i)``; returns the new log-weights."""
    return log_weights + eta * np.asarray(r_t, dtype=np.float64)


@dataclass
class FairCbBaselineState:
    log_weights: np.ndarray
    nu: float
    eta: float
    context_distribution: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        n = self.log_weights.shape[1]
        if not (0.0 < self.nu < 1.0 / n):
            raise ValueError(f"nu must lie in (0, 1/N) = (0, {1.0 / n}), got {self.nu}")


def faircb_baseline_select(state: FairCbBaselineState, context: int) -> np.ndarray:
    """Per-context exponential weights mixed with a uniform floor ``nu``."""
    n = state.log_weights.shape[1]
    h = _softmax(state.log_weights[context])
    return (1.0 - n * state.nu) * h + state.nu


# Policy objects driven by the harness. ``select`` sees R(t-1); ``observe``
# receives the full reward vector and R(t-1) before the accounting update.


class AlphaFairCB:
    """alpha-FairCB under full information: one adaptive OGA learner per context."""

    feedback = "full_info"

    def __init__(
        self,
        num_arms: int,
        num_contexts: int,
        alpha: float,
        gradient_timing: str = "previous_occurrence",
    ):
        _check_alpha(alpha)
        if gradient_timing not in GRADIENT_TIMINGS:
            raise ValueError(f"gradient_timing must be one of {GRADIENT_TIMINGS}")
        self.alpha = alpha
        self.gradient_timing = gradient_timing
        self.states = [OgaContextState.fresh(num_arms) for _ in range(num_contexts)]

    def select(self, context: int, R: np.ndarray) -> np.ndarray:
        return faircb_full_select(self.states[context], R, self.alpha, self.gradient_timing)

    def observe(self, context: int, r_t: np.ndarray, R_prev: np.ndarray) -> None:
        faircb_full_observe(
            self.states[context], r_t, R_prev, self.alpha, self.gradient_timing
        )


class Hedge:
    """Context-agnostic Hedge over arms with a horizon-tuned fixed rate."""

    feedback = "full_info"

    def __init__(self, num_arms: int, eta: Optional[float] = None, horizon: Optional[int] = None):
        self.eta = eta if eta is not None else hedge_eta(num_arms, horizon)
        self.log_weights = np.zeros(num_arms)

    def select(self, context: int, R: np.ndarray) -> np.ndarray:
        return hedge_select(self.log_weights)

    def observe(self, context: int, r_t: np.ndarray, R_prev: np.ndarray) -> None:
        self.log_weights = hedge_update(self.log_weights, r_t, self.eta)


class FloorFairCB:
    """Floored FairCB baseline: every arm is played with probability >= nu."""

    feedback = "full_info"

    def __init__(
        self,
        num_arms: int,
        num_contexts: int,
        nu: Optional[float] = None,
        eta: Optional[float] = None,
        horizon: Optional[int] = None,
        context_distribution=None,
    ):
        self.state = FairCbBaselineState(
            log_weights=np.zeros((num_contexts, num_arms)),
            nu=nu if nu is not None else 1.0 / (2 * num_arms),
            eta=eta if eta is not None else hedge_eta(num_arms, horizon),
            context_distribution=context_distribution,
        )

    def select(self, context: int, R: np.ndarray) -> np.ndarray:
        return faircb_baseline_select(self.state, context)

    def observe(self, context: int, r_t: np.ndarray, R_prev: np.ndarray) -> None:
        lw = self.state.log_weights
        lw[context] = hedge_update(lw[context], r_t, self.state.eta)
