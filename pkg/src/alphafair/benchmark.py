"""Offline benchmarks: the best fixed collection of per-context distributions
for the alpha-fair objective, a brute-force grid oracle for it, and the best
fixed per-context arm of the linearised (surrogate) problem."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import AdversarySequence, DIST_TOL, RunTrace, _check_alpha
from .full_info import simplex_project_rows


@dataclass
class BenchmarkSolution:
    collection: np.ndarray  # M x N, one distribution per context
    objective: float
    iterations: int = 0
    gradient_mapping_norm: float = 0.0
    converged: bool = True


def reward_totals(seq: AdversarySequence, up_to_t: Optional[int] = None) -> np.ndarray:
    """``W[j, i]``: total reward of arm ``i`` over the rounds with context ``j``."""
    t = seq.horizon if up_to_t is None else up_to_t
    if not (0 <= t <= seq.horizon):
        raise ValueError(f"up_to_t={t} outside [0, {seq.horizon}]")
    W = np.zeros((seq.num_contexts, seq.num_arms))
    np.add.at(W, seq.contexts[:t], seq.rewards[:t])
    return W


def _objective(X: np.ndarray, W: np.ndarray, alpha: float) -> float:
    R = 1.0 + np.einsum("ji,ji->i", W, X)
    return float(np.sum(R ** (1.0 - alpha)) / (1.0 - alpha))


def _check_collection(X: np.ndarray, shape) -> None:
    if X.shape != shape:
        raise ValueError(f"collection must have shape {shape}, got {X.shape}")
    if np.any(X < 0.0) or np.any(np.abs(X.sum(axis=1) - 1.0) > DIST_TOL):
        raise ValueError("collection rows must be probability distributions")


def offline_objective(collection, seq: AdversarySequence, alpha: float,
                      up_to_t: Optional[int] = None) -> float:
    """Total utility a static policy playing ``collection`` would accrue."""
    _check_alpha(alpha)
    X = np.asarray(collection, dtype=np.float64)
    _check_collection(X, (seq.num_contexts, seq.num_arms))
    return _objective(X, reward_totals(seq, up_to_t), alpha)


def _grad(X: np.ndarray, W: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 + np.einsum("ji,ji->i", W, X)) ** (-alpha) * W


def solve_totals(
    W: np.ndarray,
    alpha: float,
    tol: float = 1e-8,
    warm_start: Optional[np.ndarray] = None,
    max_sweeps: Optional[int] = None,
) -> BenchmarkSolution:
    """Accelerated projected gradient ascent over a product of simplices.

    Momentum steps with backtracking; a step that would lower the objective
    is rejected and the momentum restarted, so accepted iterates never
    decrease. Stops when an accepted step improves the objective by at most
    ``tol`` relative, or after ``max_sweeps`` iterations.
    """
    _check_alpha(alpha)
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n = W.shape
    cap = max_sweeps if max_sweeps is not None else 50 * n * m
    if warm_start is None:
        X = np.full((m, n), 1.0 / n)
    else:
        X = np.array(warm_start, dtype=np.float64)
        _check_collection(X, (m, n))
    f = _objective(X, W, alpha)
    Y, fy, theta = X, f, 1.0
    grad = _grad(Y, W, alpha)
    step = 1.0 / max(1.0, float(np.abs(grad).max()))
    gm_norm = math.inf
    it = 0
    while it < cap:
        it += 1
        while True:
            Z = simplex_project_rows(Y + step * grad)
            d = Z - Y
            fz = _objective(Z, W, alpha)
            # sufficient-ascent test for an L-smooth concave objective with L = 1/step
            if fz >= fy + float(np.sum(grad * d)) - float(np.sum(d * d)) / (2.0 * step) - 1e-15 * abs(fy):
                break
            step *= 0.5
            if step < 1e-300:
                break
        gm_norm = math.sqrt(float(np.sum(d * d))) / step
        if fz >= f:
            improvement = fz - f
            theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
            Y = Z + ((theta - 1.0) / theta_next) * (Z - X)
            if np.any(Y < 0.0):
                Y = simplex_project_rows(Y)
            X, f, theta = Z, fz, theta_next
            fy, grad = _objective(Y, W, alpha), _grad(Y, W, alpha)
            if improvement <= tol * max(1.0, abs(f)):
                break
        else:
            Y, fy, theta = X, f, 1.0
            grad = _grad(Y, W, alpha)
        step *= 2.0
    converged = it < cap or gm_norm <= 1e3 * tol
    return BenchmarkSolution(X, f, it, gm_norm, converged)


def solve_benchmark(
    seq: AdversarySequence,
    alpha: float,
    up_to_t: Optional[int] = None,
    tol: float = 1e-8,
    warm_start: Optional[np.ndarray] = None,
    max_sweeps: Optional[int] = None,
) -> BenchmarkSolution:
    """Best fixed collection of per-context distributions over the first
    ``up_to_t`` rounds. Starts from the uniform collection unless warm-started."""
    return solve_totals(reward_totals(seq, up_to_t), alpha, tol, warm_start, max_sweeps)


def benchmark_checkpoints(
    seq: AdversarySequence, alpha: float, checkpoints: Sequence[int], tol: float = 1e-8
) -> list:
    """Solve at each checkpoint in increasing order, warm-starting from the last."""
    out, warm = [], None
    W = np.zeros((seq.num_contexts, seq.num_arms))
    prev = 0
    for t in checkpoints:
        np.add.at(W, seq.contexts[prev:t], seq.rewards[prev:t])
        prev = t
        sol = solve_totals(W.copy(), alpha, tol, warm)
        warm = sol.collection
        out.append(sol)
    return out


def simplex_grid(num_arms: int, grid_step: float) -> np.ndarray:
    """Lattice points of the simplex at spacing ``grid_step``, plus the barycentre."""
    k = max(1, int(math.floor(1.0 / grid_step + 1e-9)))
    pts = [
        np.diff(np.concatenate(([0], c, [k]))) / k
        for c in itertools.combinations_with_replacement(range(k + 1), num_arms - 1)
    ]
    pts.append(np.full(num_arms, 1.0 / num_arms))
    return np.unique(np.array(pts), axis=0)


GRID_POINT_CAP = 5 * 10**7


def brute_force_benchmark(
    seq: AdversarySequence, alpha: float, grid_step: float, up_to_t: Optional[int] = None
) -> BenchmarkSolution:
    """Exhaustive search over the product grid; small instances only."""
    _check_alpha(alpha)
    n, m = seq.num_arms, seq.num_contexts
    if n > 3 or m > 2:
        raise ValueError("brute_force_benchmark is limited to N <= 3 and M <= 2")
    P = simplex_grid(n, grid_step)
    if P.shape[0] ** m > GRID_POINT_CAP:
        raise ValueError(f"grid too large: {P.shape[0]}^{m} points")
    W = reward_totals(seq, up_to_t)
    base = 1.0 + P @ np.diag(W[0])  # K x N contribution of context 0
    if m == 1:
        vals = np.sum(base ** (1.0 - alpha), axis=1) / (1.0 - alpha)
        k = int(np.argmax(vals))
        return BenchmarkSolution(P[k][None, :].copy(), float(vals[k]), P.shape[0], 0.0, True)
    other = P * W[1]
    best, best_idx = -math.inf, (0, 0)
    for a in range(P.shape[0]):
        vals = np.sum((base[a] + other) ** (1.0 - alpha), axis=1) / (1.0 - alpha)
        b = int(np.argmax(vals))
        if vals[b] > best:
            best, best_idx = float(vals[b]), (a, b)
    X = np.stack([P[best_idx[0]], P[best_idx[1]]])
    return BenchmarkSolution(X, best, P.shape[0] ** 2, 0.0, True)


def best_arm_collection(seq: AdversarySequence, up_to_t: Optional[int] = None) -> np.ndarray:
    """Per-context one-hot on the arm with the largest total reward (the alpha=0 optimum)."""
    W = reward_totals(seq, up_to_t)
    X = np.zeros_like(W)
    X[np.arange(W.shape[0]), np.argmax(W, axis=1)] = 1.0
    return X


class SurrogateBest(NamedTuple):
    arm: int
    value: float
    empty: bool


def surrogate_totals(trace: RunTrace, t: Optional[int] = None) -> np.ndarray:
    """Per-context sums of surrogate gradients over the first ``t`` rounds."""
    t = trace.length if t is None else t
    G = np.zeros((trace.num_contexts, trace.num_arms))
    np.add.at(G, trace.contexts[:t], trace.grads[:t])
    return G


def surrogate_best(trace: RunTrace, context: int, t: Optional[int] = None) -> SurrogateBest:
    """Best fixed arm of ``context`` for the linearised rewards; lowest index on ties."""
    t = trace.length if t is None else t
    mask = trace.contexts[:t] == context
    if not mask.any():
        return SurrogateBest(0, 0.0, True)
    G = trace.grads[:t][mask].sum(axis=0)
    arm = int(np.argmax(G))
    return SurrogateBest(arm, float(G[arm]), False)
