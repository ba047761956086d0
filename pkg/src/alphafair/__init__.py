"""alpha-fair contextual bandits: policies, offline benchmarks, metrics and an
experiment harness."""

from .bandit import AlphaFairCBBandit, ScaleFreeMab, SfMabBaseline
from .benchmark import BenchmarkSolution, offline_objective, solve_benchmark
from .core import (
    AdversarySequence,
    CumulativeRewards,
    FairnessParams,
    RunTrace,
    c_alpha,
    update_expected,
    update_realized,
    utility,
    utility_grad,
)
from .data import gen_synthetic, load_ratings_csv
from .full_info import AlphaFairCB, FloorFairCB, Hedge, simplex_project
from .metrics import (
    alpha_performance,
    approx_regret,
    avg_cumulative_reward,
    jain_index,
    standard_regret,
    surrogate_regret,
)

__version__ = "0.1.0"
