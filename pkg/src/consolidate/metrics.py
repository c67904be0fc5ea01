"""Closed-form cycle, service, and cost analytics for the three policies.

Policies dispatch a consolidated load either at a target count q (quantity
policy), at a fixed period T (time policy), or at whichever of the two
triggers first (hybrid policy).  Inventory follows an order-up-to rule: when
on-hand cannot cover the load, the warehouse replenishes back to level Q and
dispatches, ending a replenishment cycle.

All long-run rates follow from renewal-reward ratios of per-cycle
expectations.  With e_n the expected load per consolidation cycle, e_k the
expected number of consolidation cycles per replenishment cycle, and e_lc,
e_lr the corresponding expected cycle lengths (e_lr = e_k * e_lc,
e_n = rate * e_lc):

    average cost  = rate*(c_R + c_D) + rate*A_R/(e_k*e_n) + rate*A_D/e_n
                    + h*AIR + w*rate*AOD            (linear-delay penalty)

where AIR is average on-hand inventory per time unit and AOD the average
delay per order.  Exact mode computes e_k and the holding factor from the
renewal table of the load distribution; approximate mode treats the cycle
count as continuous, giving e_k ~ (Q+1)/e_n and the Table-style closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

from . import renewal
from .truncated_poisson import _factorial_moment, trunc_mean

MATCH_BRACKET_FLOOR = 1e-8
MATCH_MEAN_TOL = 1e-9
MATCH_MAX_ITER = 200


class MatchInfeasibleError(ValueError):
    """No finite hybrid period can reach the requested mean cycle length."""


@dataclass(frozen=True)
class QuantityPolicy:
    """Dispatch as soon as q orders have accumulated."""

    q: int

    def __post_init__(self):
        if self.q != int(self.q) or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q}")
        object.__setattr__(self, "q", int(self.q))

    kind = "QP"

    def label(self) -> str:
        return f"QP(q={self.q})"


@dataclass(frozen=True)
class TimePolicy:
    """Dispatch every ``period`` time units regardless of accumulated load."""

    period: float

    def __post_init__(self):
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "period", float(self.period))

    kind = "TP"

    def label(self) -> str:
        return f"TP(T={self.period:g})"


@dataclass(frozen=True)
class HybridPolicy:
    """Dispatch at the q-th order or after ``period``, whichever comes first."""

    q: int
    period: float

    def __post_init__(self):
        if self.q != int(self.q) or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q}")
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "period", float(self.period))

    kind = "HP"

    def label(self) -> str:
        return f"HP(q={self.q}, T={self.period:g})"


Policy = Union[QuantityPolicy, TimePolicy, HybridPolicy]


@dataclass(frozen=True)
class CostParams:
    """Cost coefficients; currency and time units are abstract but consistent."""

    replenish_fixed: float = 0.0   # per replenishment order
    replenish_unit: float = 0.0    # per unit replenished
    holding: float = 0.0           # per unit on hand per time unit
    dispatch_fixed: float = 0.0    # per outbound dispatch
    dispatch_unit: float = 0.0     # per unit dispatched
    wait_linear: float = 0.0       # per unit of order-delay
    wait_squared: float = 0.0      # per unit of squared order-delay

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = float(getattr(self, name))
            if value < 0.0:
                raise ValueError(f"cost coefficient {name} must be nonnegative, got {value}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class SystemConfig:
    """A policy operating against Poisson demand with an order-up-to level."""

    demand_rate: float
    policy: Policy
    order_up_to: int
    costs: CostParams = field(default_factory=CostParams)

    def __post_init__(self):
        if not self.demand_rate > 0.0:
            raise ValueError(f"demand_rate must be positive, got {self.demand_rate}")
        q_up = self.order_up_to
        if q_up != int(q_up) or q_up < 0:
            raise ValueError(f"order_up_to must be a nonnegative integer, got {q_up}")
        object.__setattr__(self, "order_up_to", int(q_up))
        object.__setattr__(self, "demand_rate", float(self.demand_rate))
        if isinstance(self.policy, QuantityPolicy) and self.order_up_to % self.policy.q:
            raise ValueError(
                f"quantity policy needs order_up_to divisible by q; "
                f"got Q={self.order_up_to}, q={self.policy.q}"
            )

    @classmethod
    def quantity(cls, demand_rate: float, q: int, n_dispatches: int,
                 costs: CostParams | None = None) -> "SystemConfig":
        """Quantity-policy system from the dispatch count n: Q = (n-1)*q."""
        if n_dispatches != int(n_dispatches) or n_dispatches < 1:
            raise ValueError(f"n_dispatches must be a positive integer, got {n_dispatches}")
        return cls(demand_rate, QuantityPolicy(q), (int(n_dispatches) - 1) * int(q),
                   costs if costs is not None else CostParams())

    @property
    def n_dispatches(self) -> int:
        """Deterministic dispatches per replenishment cycle (quantity policy only)."""
        if not isinstance(self.policy, QuantityPolicy):
            raise TypeError("n_dispatches is defined only for quantity policies")
        return self.order_up_to // self.policy.q + 1


@dataclass(frozen=True)
class CycleMetrics:
    """Expected values over one consolidation cycle."""

    length: float      # E[cycle length]
    orders: float      # E[orders per cycle]; equals rate * length
    delay: float       # E[summed per-order delay per cycle]
    sq_delay: float    # E[summed per-order squared delay per cycle]


@dataclass(frozen=True)
class ReplenishMetrics:
    """Expected values over one replenishment cycle."""

    cycles: float      # E[consolidation cycles per replenishment cycle]
    length: float      # E[replenishment cycle length]
    holding: float     # E[integral of on-hand inventory over the cycle]
    mode: str          # "exact" | "approx"


@dataclass(frozen=True)
class ServiceMetrics:
    aod: float     # average delay per order
    aosd: float    # average squared delay per order
    air: float     # average on-hand inventory per time unit


@dataclass(frozen=True)
class Evaluation:
    """Average cost rate with its component breakdown and service metrics."""

    avg_cost: float
    components: dict
    aod: float
    aosd: float
    air: float

    def to_dict(self) -> dict:
        return {
            "avg_cost": self.avg_cost,
            "components": dict(self.components),
            "aod": self.aod,
            "aosd": self.aosd,
            "air": self.air,
        }


def cycle_metrics(demand_rate: float, policy: Policy) -> CycleMetrics:
    """Per-consolidation-cycle expectations for any policy.

    Hybrid closed forms use truncated factorial moments of the load
    Y_q = min(Poisson(rate*T), q):

        length   = E[Y_q] / rate           delay    = E[Y_q^(2)] / (2 rate)
        orders   = E[Y_q]                  sq_delay = E[Y_{q+1}^(3)] / (3 rate^2)

    Quantity and time policies are the q -> infinity and T -> infinity
    reductions of the same formulas.
    """
    rate = float(demand_rate)
    if not rate > 0.0:
        raise ValueError(f"demand_rate must be positive, got {demand_rate}")
    if isinstance(policy, QuantityPolicy):
        q = policy.q
        return CycleMetrics(
            length=q / rate,
            orders=float(q),
            delay=q * (q - 1) / (2.0 * rate),
            sq_delay=(q**3 - q) / (3.0 * rate**2),
        )
    if isinstance(policy, TimePolicy):
        t = policy.period
        return CycleMetrics(
            length=t,
            orders=rate * t,
            delay=rate * t * t / 2.0,
            sq_delay=rate * t**3 / 3.0,
        )
    if isinstance(policy, HybridPolicy):
        mu = rate * policy.period
        q = policy.q
        orders = _factorial_moment(mu, q, 1)
        return CycleMetrics(
            length=orders / rate,
            orders=orders,
            delay=_factorial_moment(mu, q, 2) / (2.0 * rate),
            sq_delay=_factorial_moment(mu, q + 1, 3) / (3.0 * rate**2),
        )
    raise TypeError(f"unknown policy type: {policy!r}")


@lru_cache(maxsize=512)
def _policy_table(demand_rate: float, policy: Policy, order_up_to: int) -> renewal.RenewalTable:
    if isinstance(policy, TimePolicy):
        inc = renewal.build_increment_tp(demand_rate, policy.period)
    else:
        inc = renewal.build_increment_hp(demand_rate, policy.q, policy.period)
    return renewal.renewal_table(inc, order_up_to)


def replenish_metrics(cfg: SystemConfig, mode: str = "exact") -> ReplenishMetrics:
    """Per-replenishment-cycle expectations.

    Exact mode resolves the random cycle count through the renewal table of
    the load distribution; the quantity policy is deterministic (the cycle
    count is exactly n = Q/q + 1) and therefore identical in both modes.
    Approximate mode treats the cycle count as continuous:

        cycles ~ (Q+1)/e_n,  length ~ (Q+1)/rate,
        holding ~ e_n*Q/rate + Q(Q+1)/(2*rate).
    """
    if mode not in ("exact", "approx"):
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    rate = cfg.demand_rate
    q_up = cfg.order_up_to
    cyc = cycle_metrics(rate, cfg.policy)
    if isinstance(cfg.policy, QuantityPolicy):
        n = cfg.n_dispatches
        q = cfg.policy.q
        return ReplenishMetrics(
            cycles=float(n),
            length=n * q / rate,
            holding=n * (n - 1) * q * q / (2.0 * rate),
            mode=mode,
        )
    if mode == "approx":
        return ReplenishMetrics(
            cycles=(q_up + 1) / cyc.orders,
            length=(q_up + 1) / rate,
            holding=cyc.orders * q_up / rate + q_up * (q_up + 1) / (2.0 * rate),
            mode=mode,
        )
    table = _policy_table(rate, cfg.policy, q_up)
    cycles = renewal.expected_k(table)
    return ReplenishMetrics(
        cycles=cycles,
        length=cycles * cyc.length,
        holding=cyc.length * renewal.holding_sum(table),
        mode=mode,
    )


def service_metrics(cfg: SystemConfig, mode: str = "exact") -> ServiceMetrics:
    """Average order delay, squared delay, and inventory rate.

    AOD and AOSD are per-order ratios of the cycle expectations and do not
    depend on the mode.  AIR is the ratio of expected cumulative inventory to
    expected replenishment cycle length; the quantity policy's (n-1)q/2 is
    exact and used in both modes.
    """
    cyc = cycle_metrics(cfg.demand_rate, cfg.policy)
    rep = replenish_metrics(cfg, mode)
    return ServiceMetrics(
        aod=cyc.delay / cyc.orders,
        aosd=cyc.sq_delay / cyc.orders,
        air=rep.holding / rep.length,
    )


def average_cost(cfg: SystemConfig, mode: str = "exact", delay: str = "linear") -> Evaluation:
    """Long-run average cost per time unit with its component breakdown.

    Components are per-cycle expectations divided by the expected
    replenishment cycle length; their sum is the renewal-reward cost rate.
    ``delay="squared"`` charges the squared-delay coefficient against AOSD in
    place of the linear penalty.
    """
    if delay not in ("linear", "squared"):
        raise ValueError(f"delay must be 'linear' or 'squared', got {delay!r}")
    rate = cfg.demand_rate
    costs = cfg.costs
    cyc = cycle_metrics(rate, cfg.policy)
    rep = replenish_metrics(cfg, mode)
    svc = service_metrics(cfg, mode)
    components = {
        "replenish": rate * (costs.replenish_fixed / (rep.cycles * cyc.orders)
                             + costs.replenish_unit),
        "holding": costs.holding * svc.air,
        "dispatch": rate * (costs.dispatch_fixed / cyc.orders + costs.dispatch_unit),
        "waiting": (costs.wait_linear * rate * svc.aod if delay == "linear"
                    else costs.wait_squared * rate * svc.aosd),
    }
    return Evaluation(
        avg_cost=sum(components.values()),
        components=components,
        aod=svc.aod,
        aosd=svc.aosd,
        air=svc.air,
    )


def match_consolidation_cycle(demand_rate: float, target_length: float, q: int) -> float:
    """Hybrid period whose expected consolidation cycle length hits a target.

    Solves E[min(Poisson(rate*T), q)] = rate * target_length for T by
    bisection; the truncated mean is strictly increasing in T with supremum q,
    so a solution exists iff rate * target_length < q.
    """
    rate = float(demand_rate)
    if not rate > 0.0 or not target_length > 0.0:
        raise ValueError("demand_rate and target_length must be positive")
    if q != int(q) or q < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    q = int(q)
    target_mean = rate * target_length
    if target_mean >= q:
        raise MatchInfeasibleError(
            f"target mean load {target_mean:g} is not reachable below the cap q={q}"
        )
    lo = MATCH_BRACKET_FLOOR
    hi = 50.0 * max(1.0, target_mean)
    while trunc_mean(hi, q) < target_mean:
        hi *= 2.0
    mu = 0.5 * (lo + hi)
    for _ in range(MATCH_MAX_ITER):
        mean = trunc_mean(mu, q)
        if abs(mean - target_mean) <= MATCH_MEAN_TOL:
            return mu / rate
        if mean < target_mean:
            lo = mu
        else:
            hi = mu
        mu = 0.5 * (lo + hi)
    raise RuntimeError(
        f"bisection did not reach mean tolerance {MATCH_MEAN_TOL} "
        f"for rate={rate}, target_length={target_length}, q={q}"
    )
