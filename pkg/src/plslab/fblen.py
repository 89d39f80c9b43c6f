"""Finite-blocklength normal approximations.

Both approximations drop their remainder terms (``O(log n)`` for the code
size, ``O(log n / n)`` for the secrecy rate), so every value returned here is
the normal approximation and not a bound.  Gaussian channels use the real
convention ``C = 1/2 log2(1 + SNR)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from plslab.errors import DomainError

LOG2E = math.log2(math.e)

AWGN = "awgn"
BSC = "bsc"
SEMI_DETERMINISTIC_WIRETAP = "semi-deterministic-wiretap"
GAUSSIAN_WIRETAP = "gaussian-wiretap"

POINT_TO_POINT = frozenset({AWGN, BSC})
WIRETAP = frozenset({SEMI_DETERMINISTIC_WIRETAP, GAUSSIAN_WIRETAP})


def q_func(t):
    """Standard Gaussian upper tail ``Q(t) = P[N(0,1) > t]``."""
    return special.ndtr(-np.asarray(t, dtype=float))


def q_inv(x: float) -> float:
    """Inverse of :func:`q_func` on (0, 1)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"q_inv is defined on (0, 1), got {x}")
    return float(-special.ndtri(x))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class FblenQuery:
    n: int
    epsilon: float
    delta: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("blocklength n must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise DomainError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class ChannelSpec:
    """A channel together with its (secrecy) capacity and dispersion.

    ``params`` keeps the defining parameters: ``snr`` for AWGN, ``p`` for
    the BSC, ``p_eve`` for the semi-deterministic wiretap channel, and
    ``snr_bob``/``snr_eve`` for the Gaussian wiretap channel (all linear).
    """

    kind: str
    capacity: float
    dispersion: float
    params: tuple = ()

    @property
    def is_wiretap(self) -> bool:
        return self.kind in WIRETAP


def _awgn_dispersion(snr: float) -> float:
    return snr * (snr + 2.0) / (2.0 * (snr + 1.0) ** 2) * LOG2E ** 2


def _check_crossover(p: float, name: str):
    if not 0.0 < p < 0.5:
        raise DomainError(f"{name} must lie in (0, 1/2), got {p}")


def dispersion(kind: str, **params) -> ChannelSpec:
    """Build a :class:`ChannelSpec` with closed-form capacity and dispersion.

    ``awgn(snr)``
        ``C = 1/2 log2(1+snr)``, ``V = snr(snr+2) / (2(snr+1)^2) log2(e)^2``.
    ``bsc(p)``
        ``C = 1 - h2(p)``, ``V = p(1-p) log2((1-p)/p)^2``.
    ``semi-deterministic-wiretap(p_eve)``
        Bob's channel is noiseless and Eve's is BSC(p_eve).  The secrecy
        information density is ``-log2 P(z|x)``, so ``C_S = h2(p_eve)`` and
        ``V = p(1-p) log2((1-p)/p)^2``.
    ``gaussian-wiretap(snr_bob, snr_eve)``
        ``C_S = 1/2 log2(1+snr_bob) - 1/2 log2(1+snr_eve)`` (clamped at 0);
        ``V`` is the variance of ``i(x;y) - i(x;z)`` for a unit-power input
        and independent receiver noises, i.e. the sum of the two AWGN
        dispersions.
    """
    if kind == AWGN:
        snr = float(params["snr"])
        if snr < 0:
            raise DomainError("snr must be >= 0")
        return ChannelSpec(AWGN, 0.5 * math.log2(1.0 + snr), _awgn_dispersion(snr), (snr,))
    if kind == BSC:
        p = float(params["p"])
        _check_crossover(p, "p")
        v = p * (1 - p) * math.log2((1 - p) / p) ** 2
        return ChannelSpec(BSC, 1.0 - binary_entropy(p), v, (p,))
    if kind == SEMI_DETERMINISTIC_WIRETAP:
        p = float(params["p_eve"])
        _check_crossover(p, "p_eve")
        v = p * (1 - p) * math.log2((1 - p) / p) ** 2
        return ChannelSpec(SEMI_DETERMINISTIC_WIRETAP, binary_entropy(p), v, (p,))
    if kind == GAUSSIAN_WIRETAP:
        sb, se = float(params["snr_bob"]), float(params["snr_eve"])
        if sb < 0 or se < 0:
            raise DomainError("SNRs must be >= 0")
        cs = max(0.0, 0.5 * math.log2(1.0 + sb) - 0.5 * math.log2(1.0 + se))
        return ChannelSpec(GAUSSIAN_WIRETAP, cs, _awgn_dispersion(sb) + _awgn_dispersion(se),
                           (sb, se))
    raise DomainError(f"unknown channel kind {kind!r}")


def max_log_code_size(spec: ChannelSpec, q: FblenQuery) -> float:
    """``n C - sqrt(n V) Q^{-1}(eps)`` in bits; may be negative for tiny ``n``."""
    if spec.kind not in POINT_TO_POINT:
        raise DomainError(f"max_log_code_size needs a point-to-point channel, got {spec.kind}")
    return q.n * spec.capacity - math.sqrt(q.n * spec.dispersion) * q_inv(q.epsilon)


def secrecy_rate_fblen(spec: ChannelSpec, q: FblenQuery) -> float:
    """``C_S - sqrt(V/n) Q^{-1}(delta / (1 - eps))`` in bits per channel use."""
    if spec.kind not in WIRETAP:
        raise DomainError(f"secrecy_rate_fblen needs a wiretap channel, got {spec.kind}")
    if q.delta is None:
        raise DomainError("invalid leakage ratio: delta is required")
    ratio = q.delta / (1.0 - q.epsilon)
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"invalid leakage ratio delta/(1-eps) = {ratio}")
    return spec.capacity - math.sqrt(spec.dispersion / q.n) * q_inv(ratio)


def rate(spec: ChannelSpec, q: FblenQuery) -> float:
    """Per-channel-use rate for either channel family."""
    if spec.is_wiretap:
        return secrecy_rate_fblen(spec, q)
    return max_log_code_size(spec, q) / q.n
