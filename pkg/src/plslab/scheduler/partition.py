"""Splitting OFDM subcarriers between data and reconciliation traffic.

Rate model
----------
Power comes from water-filling the total budget ``N*P`` over all
subcarriers, which fixes each subcarrier's rate ``r_j`` and the total
``C = sum r_j``.  A partition then only decides which rates carry syndromes
(``D_bar``, total ``S``) and which carry data.  The key rate is what the
syndrome budget can reconcile, capped by what the channel can generate:
``C_SKG = min(K_max, S / kappa)`` with ``K_max`` the sum of per-subcarrier
key capacities at probing power ``P``.  Data sent is throttled to what the
key can protect::

    C_D(S) = min(C - S, C_SKG / beta)

which satisfies all four constraints by construction.  ``C_D(S)`` rises up
to a crossing ``S0`` and falls after it, so the best partition is the subset
sum nearest ``S0`` from either side, found by :func:`solve_exact` with an
integer-cost subset DP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from plslab import kernels
from plslab.channel import Rng
from plslab.errors import DomainError
from plslab.skg.pipeline import skg_rate

MAX_EXACT_N = 64
DEFAULT_TOLERANCE = 1e-3
DEFAULT_MAX_STATES = 20_000_000
SLACK = 1e-9


@dataclass(frozen=True)
class SchedulerInstance:
    """One scheduling problem.

    ``gains`` are linear per-subcarrier power gains, ``P`` the per-subcarrier
    power (total budget ``N*P``).  ``key_capacity`` overrides the default
    ``sum_j skg_rate(P * snr_scale * g_j, 1)``.  ``kappa = 0`` means syndromes
    cost nothing.
    """

    gains: np.ndarray
    P: float = 1.0
    beta: float = 0.5
    kappa: float = 2.0
    snr_scale: float = 1.0
    key_capacity: float | None = None
    per_carrier_cap: float | None = None

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float).ravel()
        object.__setattr__(self, "gains", g)
        if g.size == 0 or np.any(~(g > 0)) or not np.all(np.isfinite(g)):
            raise DomainError("gains must be a nonempty sequence of finite values > 0")
        if not self.P > 0 or not self.snr_scale > 0:
            raise DomainError("P and snr_scale must be > 0")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError("beta must lie in (0, 1]")
        if not self.kappa >= 0:
            raise DomainError("kappa must be >= 0")
        if self.key_capacity is not None and self.key_capacity < 0:
            raise DomainError("key_capacity must be >= 0")

    @property
    def N(self) -> int:
        return self.gains.size

    @property
    def budget(self) -> float:
        return self.N * self.P

    @property
    def effective_gains(self) -> np.ndarray:
        return self.gains * self.snr_scale

    def key_rate_capacity(self) -> float:
        if self.key_capacity is not None:
            return float(self.key_capacity)
        return float(np.sum(skg_rate(self.P * self.effective_gains, 1.0)))


@dataclass
class SubcarrierPlan:
    data_set: tuple
    recon_set: tuple
    powers: np.ndarray
    c_d: float
    c_r: float
    c_skg: float
    offered_data_rate: float = 0.0
    capacity: float = 0.0
    feasible: bool = True
    binding: str = ""
    tolerance: float = 0.0
    solver: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def efficiency(self) -> float:
        return self.c_d / self.capacity if self.capacity > 0 else 0.0


def water_filling(gains, budget: float, cap: float | None = None) -> np.ndarray:
    """Maximise ``sum log2(1 + p_j g_j)`` subject to ``sum p_j = budget``.

    Optional per-subcarrier cap ``p_j <= cap`` (bisection on the water level).
    """
    g = np.asarray(gains, dtype=float)
    if budget < 0:
        raise DomainError("budget must be >= 0")
    if budget == 0:
        return np.zeros_like(g)
    if cap is not None:
        if cap * g.size < budget:
            raise DomainError("per-subcarrier cap below the total budget share")
        lo, hi = 0.0, cap + 1.0 / g.min()
        for _ in range(200):
            mu = 0.5 * (lo + hi)
            if np.clip(mu - 1.0 / g, 0.0, cap).sum() > budget:
                hi = mu
            else:
                lo = mu
        p = np.clip(0.5 * (lo + hi) - 1.0 / g, 0.0, cap)
        return p * (budget / p.sum())
    inv = np.sort(1.0 / g)
    csum = np.cumsum(inv)
    k = np.arange(1, g.size + 1)
    levels = (budget + csum) / k
    # largest active count whose water level stays above its weakest member
    active = int(np.nonzero(levels > inv)[0][-1]) + 1
    mu = levels[active - 1]
    return np.maximum(mu - 1.0 / g, 0.0)


class PlanRates(NamedTuple):
    c_d: float
    c_r: float
    c_skg: float
    feasible: bool


def rates_for_plan(inst: SchedulerInstance, data_set, powers) -> PlanRates:
    """Raw data and syndrome rates of a partition, plus the key rate it supports.

    ``c_d`` is the offered data rate (before throttling to the key rate).
    A power vector over budget gives ``feasible=False`` rather than raising.
    """
    p = np.asarray(powers, dtype=float)
    in_d = np.zeros(inst.N, dtype=bool)
    in_d[list(data_set)] = True
    r = np.log2(1.0 + p * inst.effective_gains)
    c_d = float(r[in_d].sum())
    c_r = float(r[~in_d].sum())
    feasible = bool(np.all(p >= 0) and p.sum() <= inst.budget * (1 + 1e-12) + SLACK)
    if inst.per_carrier_cap is not None:
        feasible = feasible and bool(np.all(p <= inst.per_carrier_cap + SLACK))
    return PlanRates(c_d, c_r, _key_rate(inst, c_r, inst.key_rate_capacity()), feasible)


def _key_rate(inst, s, kmax):
    if inst.kappa == 0:
        return kmax
    return min(kmax, s / inst.kappa)


def _objective(inst, s, total, kmax):
    return min(total - s, _key_rate(inst, s, kmax) / inst.beta)


def _binding(inst, s, total, kmax) -> str:
    key = _key_rate(inst, s, kmax)
    if kmax <= 0:
        return "key_rate"
    if total - s <= key / inst.beta:
        return "data_budget"
    if inst.kappa > 0 and s / inst.kappa < kmax:
        return "syndrome_rate"
    return "key_rate"


def _crossing(inst, total, kmax) -> float:
    """Syndrome rate where the objective stops rising."""
    kb = inst.kappa * inst.beta
    s_free = total * kb / (1.0 + kb)
    if inst.kappa == 0 or s_free / inst.kappa > kmax:
        return max(0.0, total - kmax / inst.beta)
    return s_free


def _plan_from_mask(inst, recon_mask, powers, rates, total, kmax, solver, tol) -> SubcarrierPlan:
    s = float(rates[recon_mask].sum())
    value = _objective(inst, s, total, kmax)
    c_d = max(0.0, value)
    plan = SubcarrierPlan(
        data_set=tuple(int(i) for i in np.flatnonzero(~recon_mask)),
        recon_set=tuple(int(i) for i in np.flatnonzero(recon_mask)),
        powers=powers,
        c_d=c_d,
        c_r=s,
        c_skg=_key_rate(inst, s, kmax),
        offered_data_rate=total - s,
        capacity=total,
        feasible=value > 0,
        binding=_binding(inst, s, total, kmax),
        tolerance=tol,
        solver=solver,
    )
    return plan


def _setup(inst):
    powers = water_filling(inst.effective_gains, inst.budget, inst.per_carrier_cap)
    rates = np.log2(1.0 + powers * inst.effective_gains)
    return powers, rates, float(rates.sum()), inst.key_rate_capacity()


def _mask_to_bool(mask, n):
    m = int(mask)
    return np.array([(m >> j) & 1 for j in range(n)], dtype=bool)


def solve_exact(inst: SchedulerInstance, tolerance: float = DEFAULT_TOLERANCE,
                max_states: int = DEFAULT_MAX_STATES, max_n: int = MAX_EXACT_N) -> SubcarrierPlan:
    """Best partition, within ``tolerance`` bits of the optimal data rate.

    Rates are rounded to a grid of ``tolerance / (N * L)`` where ``L`` is the
    steepest slope of the objective, so rounding can cost at most
    ``tolerance``.  When the table would exceed ``max_states`` the grid is
    coarsened and ``plan.tolerance`` reports the guarantee actually achieved.
    """
    n = inst.N
    if n > min(max_n, MAX_EXACT_N):
        raise DomainError(f"exact solver limited to N <= {min(max_n, MAX_EXACT_N)}")
    if not tolerance > 0:
        raise DomainError("tolerance must be > 0")
    powers, rates, total, kmax = _setup(inst)
    s0 = _crossing(inst, total, kmax)
    if s0 <= 0:
        mask = np.zeros(n, dtype=bool)
        return _plan_from_mask(inst, mask, powers, rates, total, kmax, "exact", 0.0)

    slope = 1.0
    if inst.kappa > 0:
        slope = max(1.0, 1.0 / (inst.kappa * inst.beta))
    step = tolerance / (n * slope)
    span = s0 + float(rates.max())
    size = int(math.ceil(span / step)) + n + 2
    if size > max_states:
        step = span / (max_states - n - 2)
        size = max_states
    tol = n * step * slope

    costs = np.rint(rates / step).astype(np.int64)
    hi, hi_mask, lo, lo_mask = kernels.subset_extremes(costs, rates, size)

    candidates = []
    above = np.flatnonzero(hi >= s0)
    if above.size:
        v = above[0]
        candidates.append(hi_mask[v])
    below = np.flatnonzero(lo <= s0)
    if below.size:
        v = below[-1]
        candidates.append(lo_mask[v])
    best = None
    for m in candidates:
        mask = _mask_to_bool(m, n)
        val = _objective(inst, float(rates[mask].sum()), total, kmax)
        if best is None or val > best[0]:
            best = (val, mask)
    plan = _plan_from_mask(inst, best[1], powers, rates, total, kmax, "exact", tol)
    plan.extra["step"] = step
    plan.extra["states"] = size
    return plan


def solve_heuristic(inst: SchedulerInstance) -> SubcarrierPlan:
    """Give the weakest subcarriers to reconciliation until the key budget is met.

    The two partitions either side of the crossing are compared, then one
    pass of single swaps between the sets is tried.
    """
    n = inst.N
    powers, rates, total, kmax = _setup(inst)
    s0 = _crossing(inst, total, kmax)
    order = np.argsort(inst.gains, kind="stable")
    mask = np.zeros(n, dtype=bool)
    before = mask.copy()
    s = 0.0
    for j in order:
        if s >= s0:
            break
        before = mask.copy()
        mask[j] = True
        s += rates[j]

    def value(m):
        return _objective(inst, float(rates[m].sum()), total, kmax)

    best = mask if value(mask) >= value(before) else before
    best_val = value(best)
    for i in np.flatnonzero(best):
        for j in np.flatnonzero(~best):
            trial = best.copy()
            trial[i], trial[j] = False, True
            v = value(trial)
            if v > best_val + 1e-15:
                best, best_val = trial, v
                break
    return _plan_from_mask(inst, best, powers, rates, total, kmax, "heuristic", 0.0)


def sequential_rate(inst: SchedulerInstance) -> float:
    """Data rate when key generation gets its own time slots.

    Syndrome slots use equal power on every subcarrier (rate ``C_eq``); data
    slots use the water-filled capacity ``C``.  Splitting time so the
    syndromes cover ``kappa * beta`` times the data gives
    ``C * C_eq / (C_eq + kappa beta C)``, capped by the key capacity.
    """
    powers, rates, total, kmax = _setup(inst)
    c_eq = float(np.sum(np.log2(1.0 + inst.P * inst.effective_gains)))
    kb = inst.kappa * inst.beta
    if total <= 0 or c_eq <= 0:
        return 0.0
    rate = total * c_eq / (c_eq + kb * total)
    return max(0.0, min(rate, kmax / inst.beta))


def efficiency(mode: str, inst: SchedulerInstance, sessions: int, rng: Rng,
               solver: str = "exact", tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Long-term efficiency ``E[C_D] / E[C]`` over Rayleigh block fading.

    Each session multiplies ``inst.gains`` by fresh exponential draws.
    ``mode`` is ``"parallel"`` (syndromes and data on disjoint subcarriers)
    or ``"sequential"``.
    """
    return efficiency_details(mode, inst, sessions, rng, solver, tolerance)[0]


def efficiency_details(mode: str, inst: SchedulerInstance, sessions: int, rng: Rng,
                       solver: str = "exact", tolerance: float = DEFAULT_TOLERANCE):
    """:func:`efficiency` plus the number of sessions with no usable data rate."""
    if sessions < 1:
        raise DomainError("sessions must be >= 1")
    if mode not in ("parallel", "sequential"):
        raise DomainError("mode must be 'parallel' or 'sequential'")
    if solver not in ("exact", "heuristic"):
        raise DomainError("solver must be 'exact' or 'heuristic'")
    sum_cd = 0.0
    sum_c = 0.0
    infeasible = 0
    for i in range(sessions):
        stream = rng.spawn(rng.stream_id * 1_000_003 + i + 1)
        fade = -np.log(1.0 - stream.uniform(inst.N))
        session = SchedulerInstance(np.maximum(inst.gains * fade, 1e-300), inst.P, inst.beta,
                                    inst.kappa, inst.snr_scale, inst.key_capacity,
                                    inst.per_carrier_cap)
        _, rates, total, _ = _setup(session)
        if mode == "sequential":
            cd = sequential_rate(session)
        elif solver == "exact":
            cd = solve_exact(session, tolerance).c_d
        else:
            cd = solve_heuristic(session).c_d
        infeasible += cd <= 0
        sum_cd += cd
        sum_c += total
    return (sum_cd / sum_c if sum_c > 0 else 0.0), infeasible
