"""Subcarrier partitioning and delay-aware power allocation."""

from plslab.scheduler.effcap import EffCapQuery, effcap_power_alloc, effective_capacity
from plslab.scheduler.partition import (
    PlanRates,
    SchedulerInstance,
    SubcarrierPlan,
    efficiency,
    efficiency_details,
    rates_for_plan,
    sequential_rate,
    solve_exact,
    solve_heuristic,
    water_filling,
)

__all__ = [
    "EffCapQuery", "effcap_power_alloc", "effective_capacity",
    "PlanRates", "SchedulerInstance", "SubcarrierPlan", "efficiency", "efficiency_details", "rates_for_plan",
    "sequential_rate", "solve_exact", "solve_heuristic", "water_filling",
]
