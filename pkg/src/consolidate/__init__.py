"""Integrated inventory-replenishment and outbound-dispatch policy analytics.

Evaluates, simulates, optimizes, and compares quantity-based, time-based, and
hybrid shipment-consolidation policies for a warehouse facing Poisson demand
under an order-up-to replenishment rule.
"""

from .compare import (
    CompareResult,
    ComparisonRow,
    MatchSpec,
    OptimResult,
    SearchBounds,
    TheoremReport,
    VerifyGrid,
    compare_matched,
    optimize,
    verify_theorems,
)
from .metrics import (
    CostParams,
    CycleMetrics,
    Evaluation,
    HybridPolicy,
    MatchInfeasibleError,
    Policy,
    QuantityPolicy,
    ReplenishMetrics,
    ServiceMetrics,
    SystemConfig,
    TimePolicy,
    average_cost,
    cycle_metrics,
    match_consolidation_cycle,
    replenish_metrics,
    service_metrics,
)
from .renewal import (
    IncrementDist,
    RenewalTable,
    build_increment_hp,
    build_increment_tp,
    expected_k,
    holding_sum,
    renewal_table,
)
from .sim import SimConfig, SimEstimate, SimReport, per_order_delays, simulate
from .truncated_poisson import (
    QuadratureError,
    conditional_mean_var,
    cubed_mean_ratio,
    gamma_min_moment,
    poisson_cdf,
    poisson_pmf,
    poisson_tail,
    squared_mean_ratio,
    trunc_factorial_moment,
    trunc_factorial_moment_dmu,
    trunc_mean,
    trunc_pmf,
    trunc_variance,
)

__version__ = "0.1.0"

__all__ = [
    "CompareResult",
    "ComparisonRow",
    "CostParams",
    "CycleMetrics",
    "Evaluation",
    "HybridPolicy",
    "IncrementDist",
    "MatchInfeasibleError",
    "MatchSpec",
    "OptimResult",
    "Policy",
    "QuadratureError",
    "QuantityPolicy",
    "RenewalTable",
    "ReplenishMetrics",
    "SearchBounds",
    "ServiceMetrics",
    "SimConfig",
    "SimEstimate",
    "SimReport",
    "SystemConfig",
    "TheoremReport",
    "TimePolicy",
    "VerifyGrid",
    "average_cost",
    "build_increment_hp",
    "build_increment_tp",
    "compare_matched",
    "conditional_mean_var",
    "cubed_mean_ratio",
    "cycle_metrics",
    "expected_k",
    "gamma_min_moment",
    "holding_sum",
    "match_consolidation_cycle",
    "optimize",
    "per_order_delays",
    "poisson_cdf",
    "poisson_pmf",
    "poisson_tail",
    "renewal_table",
    "replenish_metrics",
    "service_metrics",
    "simulate",
    "squared_mean_ratio",
    "trunc_factorial_moment",
    "trunc_factorial_moment_dmu",
    "trunc_mean",
    "trunc_pmf",
    "trunc_variance",
    "verify_theorems",
]
