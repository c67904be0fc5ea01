"""Discrete renewal tables for integer-valued consolidation-load increments.

A replenishment cycle ends when cumulative dispatched load first exceeds the
order-up-to level Q.  With i.i.d. integer increments distributed as ``g``,
the expected number of dispatches is the renewal function M(Q) of ``g`` and
the holding integral reduces to the weighted renewal-mass sum
``sum_{i<=Q} (Q - i) m(i)``, where ``m(i) = sum_k g^(k)(i)`` counts the
expected visits to cumulative load i.

Because increments are nonnegative, the infinite convolution series satisfies
an exact finite recursion on 0..Q:

    m(i) (1 - g(0)) = [i == 0] + sum_{j=1..min(i, smax)} g(j) m(i - j),

so no truncation error enters beyond the tail cut of a Poisson increment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson as _poisson

from .truncated_poisson import poisson_pmf, poisson_tail, trunc_pmf

# The recursion is O(Q * support); reject absurd tables instead of hanging.
MAX_ORDER_UP_TO = 10_000

# Residual Poisson tail dropped when building a time-policy increment.
DEFAULT_TAIL_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class IncrementDist:
    """Probability masses of one consolidation cycle's load, support 0..smax."""

    masses: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        if masses.ndim != 1 or masses.size == 0:
            raise ValueError("masses must be a nonempty 1-d vector")
        if np.any(masses < 0.0) or np.any(~np.isfinite(masses)):
            raise ValueError("masses must be finite and nonnegative")
        if abs(masses.sum() - 1.0) > 1e-10:
            raise ValueError(f"masses must sum to 1 within 1e-10, got {masses.sum()!r}")
        if not masses[0] < 1.0:
            raise ValueError("increment must place positive mass above zero")
        masses = masses.copy()
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @property
    def support_end(self) -> int:
        return self.masses.size - 1

    def mean(self) -> float:
        return float(np.arange(self.masses.size) @ self.masses)


@dataclass(frozen=True, eq=False)
class RenewalTable:
    """Renewal masses m(i) and partial sums M(i) on 0..Q for one increment."""

    m: np.ndarray
    M: np.ndarray
    order_up_to: int

    def __post_init__(self):
        for name in ("m", "M"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def steady_state(self) -> np.ndarray:
        """Stationary distribution of post-dispatch inventory gap i = Q - I."""
        return self.m / self.M[-1]


def build_increment_hp(rate: float, q: int, period: float) -> IncrementDist:
    """Load distribution under a hybrid policy: min(X, q), X ~ Poisson(rate*period)."""
    if not rate > 0.0 or not period > 0.0:
        raise ValueError("rate and period must be positive")
    mu = rate * period
    masses = np.array([trunc_pmf(mu, q, i) for i in range(q + 1)])
    return IncrementDist(masses)


def build_increment_tp(rate: float, period: float,
                       tail_eps: float = DEFAULT_TAIL_EPS) -> IncrementDist:
    """Load distribution under a time policy: Poisson(rate*period), tail-cut.

    The support is cut at the smallest point whose residual upper tail falls
    below ``tail_eps`` and the remaining masses are renormalized.
    """
    if not rate > 0.0 or not period > 0.0:
        raise ValueError("rate and period must be positive")
    if not 0.0 < tail_eps <= 1e-10:
        raise ValueError(f"tail_eps must be in (0, 1e-10], got {tail_eps}")
    mu = rate * period
    end = int(_poisson.isf(tail_eps, mu)) + 1
    while poisson_tail(mu, end + 1) >= tail_eps:
        end += 1
    while end > 1 and poisson_tail(mu, end) < tail_eps:
        end -= 1
    masses = np.array([poisson_pmf(mu, i) for i in range(end + 1)])
    masses /= masses.sum()
    return IncrementDist(masses)


def renewal_table(inc: IncrementDist, order_up_to: int,
                  max_order_up_to: int = MAX_ORDER_UP_TO) -> RenewalTable:
    """Solve the lattice renewal recursion for m(0..Q) and accumulate M.

    M(Q) equals the expected number of consolidation cycles per replenishment
    cycle.  Zero-mass increments are absorbed by the 1/(1 - g(0)) factor (a
    geometric number of zero-load cycles precedes each level change), which
    diverges when g(0) -> 1.
    """
    if order_up_to != int(order_up_to) or order_up_to < 0:
        raise ValueError(f"order-up-to level must be a nonnegative integer, got {order_up_to}")
    order_up_to = int(order_up_to)
    if order_up_to > max_order_up_to:
        raise ValueError(
            f"order-up-to level {order_up_to} exceeds capacity limit {max_order_up_to}"
        )
    g = inc.masses
    if g[0] >= 1.0 - 1e-12:
        raise ValueError("renewal series diverges: increment mass at zero is too close to 1")
    scale = 1.0 / (1.0 - g[0])
    smax = inc.support_end
    m = np.empty(order_up_to + 1)
    m[0] = scale
    for i in range(1, order_up_to + 1):
        j = min(i, smax)
        stop = i - j - 1
        window = m[i - 1:stop if stop >= 0 else None:-1]
        m[i] = scale * float(g[1:j + 1] @ window)
    return RenewalTable(m=m, M=np.cumsum(m), order_up_to=order_up_to)


def expected_k(table: RenewalTable) -> float:
    """Expected consolidation cycles per replenishment cycle, M(Q)."""
    return float(table.M[-1])


def holding_sum(table: RenewalTable) -> float:
    """sum_{i=0..Q} (Q - i) m(i): the renewal-weighted inventory factor.

    Multiplying by the expected consolidation cycle length gives the expected
    cumulative inventory carried per replenishment cycle; zero iff Q = 0.
    """
    q_levels = table.order_up_to - np.arange(table.order_up_to + 1)
    return float(q_levels @ table.m)
