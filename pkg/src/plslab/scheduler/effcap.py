"""Power allocation under a statistical delay constraint.

The allocation interpolates between water-filling (no delay constraint,
``alpha = 0``) and channel inversion (``alpha -> inf``).  Writing
``e = N / (alpha + N)`` and ``s = -e ln g0`` the optimal power is::

    p_i = max(0, (exp(e ln g_i + s) - 1) / g_i)

which stays finite for any ``alpha``; ``s`` is found by bisection on the
power budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from plslab.channel import Rng
from plslab.errors import DomainError


@dataclass(frozen=True)
class EffCapQuery:
    """Delay exponent ``theta`` (1/s), frame length ``frame_duration`` (s),
    ``bandwidth`` (Hz) and estimated gains.  ``alpha`` is derived."""

    theta: float
    frame_duration: float
    bandwidth: float
    est_gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.est_gains, dtype=float).ravel()
        object.__setattr__(self, "est_gains", g)
        if self.theta < 0:
            raise DomainError("theta must be >= 0")
        if not (self.frame_duration > 0 and self.bandwidth > 0):
            raise DomainError("frame_duration and bandwidth must be > 0")
        if g.size == 0 or np.any(~(g > 0)):
            raise DomainError("est_gains must be > 0")

    @property
    def alpha(self) -> float:
        return self.theta * self.frame_duration * self.bandwidth / math.log(2.0)

    @classmethod
    def from_alpha(cls, alpha: float, est_gains, frame_duration: float = 1e-3,
                   bandwidth: float = 1e3) -> "EffCapQuery":
        return cls(alpha * math.log(2.0) / (frame_duration * bandwidth), frame_duration,
                   bandwidth, est_gains)


def _powers(log_g, g, e, s):
    return np.maximum(np.expm1(e * log_g + s), 0.0) / g


def effcap_power_alloc(q: EffCapQuery, budget: float, with_flag: bool = False,
                       tol: float = 1e-13):
    """Optimal powers for ``q``; they sum to ``budget``.

    With ``with_flag=True`` also returns whether any subcarrier is active
    (False only when the budget underflows).
    """
    if not budget > 0:
        raise DomainError("budget must be > 0")
    g = q.est_gains
    n = g.size
    e = n / (q.alpha + n)
    log_g = np.log(g)
    # sum is nondecreasing in s; at s_hi even the weakest carrier gets > budget
    s_lo = -e * log_g.max()
    s_hi = -e * log_g.min() + math.log1p(budget * g.max())
    for _ in range(400):
        mid = 0.5 * (s_lo + s_hi)
        if _powers(log_g, g, e, mid).sum() > budget:
            s_hi = mid
        else:
            s_lo = mid
        if s_hi - s_lo <= tol * max(1.0, abs(mid)):
            break
    p = _powers(log_g, g, e, 0.5 * (s_lo + s_hi))
    active = bool(p.sum() > 0)
    if active:
        p *= budget / p.sum()  # remove the bisection residue
    return (p, active) if with_flag else p


def effective_capacity(q: EffCapQuery, powers, gains, mc_draws: int, rng: Rng,
                       fading: bool = True) -> float:
    """Monte Carlo ``-1/alpha log2 E[2^(-alpha C_D)]``.

    ``C_D = sum log2(1 + p_i g_i X_i)``; with ``fading`` the ``X_i`` are
    independent unit-mean exponentials, otherwise 1.  ``alpha = 0`` gives
    the mean rate.
    """
    if mc_draws < 1:
        raise DomainError("mc_draws must be >= 1")
    p = np.asarray(powers, dtype=float)
    g = np.asarray(gains, dtype=float)
    if fading:
        x = -np.log(1.0 - rng.uniform((mc_draws, g.size)))
    else:
        x = np.ones((1, g.size))
    c_d = np.log2(1.0 + p * g * x).sum(axis=1)
    a = q.alpha
    if a == 0:
        return float(c_d.mean())
    if np.ptp(c_d) == 0:
        return float(c_d[0])
    # log2 E[2^(-a c)] = (logsumexp(-a c ln2) - ln M) / ln2
    lme = logsumexp(-a * math.log(2.0) * c_d) - math.log(c_d.size)
    return float(-lme / (a * math.log(2.0)))
