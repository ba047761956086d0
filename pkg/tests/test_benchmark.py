import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphafair.benchmark import (
    best_arm_collection,
    brute_force_benchmark,
    offline_objective,
    reward_totals,
    simplex_grid,
    solve_benchmark,
    solve_totals,
    surrogate_best,
)
from alphafair.core import AdversarySequence, RunTrace
from alphafair.data import gen_synthetic

# Exhaustive search over a 1001 x 1001 grid on the seed-1337 instance below,
# computed once with an independent vectorised evaluation.
GRID_GOLDEN_1337 = 15.975145594445092


def _trace_from_grads(contexts, grads, num_contexts):
    grads = np.asarray(grads, dtype=float)
    tr = RunTrace(len(contexts), grads.shape[1], num_contexts, "full_info")
    n = grads.shape[1]
    for c, g in zip(contexts, grads):
        tr.record(c, np.full(n, 1 / n), None, np.ones(n), np.ones(n), g)
    return tr


def test_offline_objective_examples():
    seq = AdversarySequence(2, 1, [0, 0], [[1.0, 0.2], [1.0, 0.2]], 0.2)
    assert offline_objective([[1.0, 0.0]], seq, 0.5) == pytest.approx(2 * math.sqrt(3) + 2, abs=1e-12)
    assert offline_objective([[0.3, 0.7]], seq, 0.4, up_to_t=0) == pytest.approx(2 / 0.6)
    X = np.array([[0.3, 0.7]])
    assert offline_objective(X, seq, 0.0) == pytest.approx(2 + 2 * (0.3 + 0.7 * 0.2))
    with pytest.raises(ValueError):
        offline_objective([[0.6, 0.6]], seq, 0.5)
    with pytest.raises(ValueError):
        offline_objective([[1.0, 0.0], [1.0, 0.0]], seq, 0.5)


def test_constant_objective_instance():
    seq = AdversarySequence(2, 1, [0] * 4, [[0.6, 0.6]] * 4, 0.2)
    sol = solve_benchmark(seq, 0.7)
    assert sol.objective == pytest.approx(offline_objective([[0.5, 0.5]], seq, 0.7), rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_alpha_zero_closed_form(seed):
    seq = gen_synthetic("iid_uniform", 3, 2, 40, 0.2, seed)
    W = reward_totals(seq)
    closed = 3 + W.max(axis=1).sum()
    assert solve_benchmark(seq, 0.0).objective == pytest.approx(closed, abs=1e-8)
    assert offline_objective(best_arm_collection(seq), seq, 0.0) == pytest.approx(closed, abs=1e-12)
    brute = brute_force_benchmark(seq, 0.0, 0.5)
    assert brute.objective == pytest.approx(closed, abs=1e-12)


def test_seed_1337_golden():
    seq = gen_synthetic("iid_uniform", 2, 2, 50, 0.2, 1337)
    assert solve_benchmark(seq, 0.5).objective == pytest.approx(GRID_GOLDEN_1337, abs=1e-4)
    assert brute_force_benchmark(seq, 0.5, 1e-3).objective == pytest.approx(GRID_GOLDEN_1337, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), st.integers(1, 2), st.floats(0.0, 0.95), st.integers(0, 2**31))
def test_optimality_sandwich(N, M, alpha, seed):
    seq = gen_synthetic("iid_uniform", N, M, 30, 0.2, seed)
    step = 0.02
    brute = brute_force_benchmark(seq, alpha, step)
    sol = solve_benchmark(seq, alpha)
    lipschitz = float(np.linalg.norm(reward_totals(seq)))
    assert brute.objective <= sol.objective + 1e-9
    assert sol.objective <= brute.objective + lipschitz * step * math.sqrt(2 * N * M)
    assert sol.converged
    np.testing.assert_allclose(sol.collection.sum(axis=1), 1.0, atol=1e-9)
    assert sol.objective == pytest.approx(offline_objective(sol.collection, seq, alpha), abs=1e-9)
    # dominates uniform and every vertex collection
    assert sol.objective >= offline_objective(np.full((M, N), 1 / N), seq, alpha) - 1e-12
    for i in range(N):
        X = np.zeros((M, N))
        X[:, i] = 1.0
        assert sol.objective >= offline_objective(X, seq, alpha) - 1e-12


def test_solver_monotone_in_iterations():
    W = reward_totals(gen_synthetic("context_dependent_best", 4, 3, 200, 0.2, 2))
    values = [solve_totals(W, 0.8, max_sweeps=k).objective for k in range(1, 30)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_warm_start_and_tol_errors():
    W = reward_totals(gen_synthetic("iid_uniform", 3, 2, 100, 0.2, 4))
    cold = solve_totals(W, 0.6)
    warm = solve_totals(W, 0.6, warm_start=cold.collection)
    assert warm.objective >= cold.objective - 1e-12
    assert warm.iterations <= 2
    with pytest.raises(ValueError):
        solve_totals(W, 0.6, tol=0.0)
    with pytest.raises(ValueError):
        solve_totals(W, 0.6, warm_start=np.ones((2, 3)))


def test_iteration_cap_flags_nonconvergence():
    W = reward_totals(gen_synthetic("iid_uniform", 5, 3, 2000, 0.2, 0))
    sol = solve_totals(W, 0.9, tol=1e-15, max_sweeps=1)
    assert not sol.converged


def test_brute_force_guard_and_grid():
    with pytest.raises(ValueError):
        brute_force_benchmark(gen_synthetic("iid_uniform", 4, 1, 10, 0.2, 0), 0.5, 0.1)
    with pytest.raises(ValueError):
        brute_force_benchmark(gen_synthetic("iid_uniform", 2, 3, 10, 0.2, 0), 0.5, 0.1)
    grid = simplex_grid(3, 1.0)
    assert grid.shape == (4, 3)  # three vertices plus the barycentre
    seq = gen_synthetic("iid_uniform", 3, 1, 20, 0.2, 3)
    vertices = [offline_objective(v[None, :], seq, 0.3) for v in grid]
    assert brute_force_benchmark(seq, 0.3, 1.0).objective == pytest.approx(max(vertices))


def test_surrogate_best_examples():
    tr = _trace_from_grads([0] * 4, [[0, 0, 1]] * 4, 2)
    assert surrogate_best(tr, 0) == (2, 4.0, False)
    assert surrogate_best(tr, 1) == (0, 0.0, True)
    tr = _trace_from_grads([0] * 3, [[0.5, 0.5, 0.5]] * 3, 1)
    assert surrogate_best(tr, 0).arm == 0


@given(st.integers(0, 2**31))
def test_surrogate_best_is_vertex_optimal(seed):
    rng = np.random.default_rng(seed)
    grads = rng.uniform(0, 1, size=(5, 3))
    tr = _trace_from_grads([0] * 5, grads, 1)
    best = surrogate_best(tr, 0)
    totals = grads.sum(axis=0)
    assert best.value == pytest.approx(max(totals[i] for i in range(3)))
    for p in rng.dirichlet(np.ones(3), size=100):
        assert best.value >= float(totals @ p) - 1e-12
