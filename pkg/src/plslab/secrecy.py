"""Asymptotic secrecy rates for broadcast channels with a confidential message.

Rates are in bits per complex channel use, ``log2(1 + SNR)``.  The broadcast
regions use superposition coding: a fraction ``alpha`` of the power carries
the secret message M2 and the rest carries the common message M1, which the
weaker receiver must decode while treating the secret layer as noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from plslab.channel import Rng
from plslab.errors import DomainError


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class GaussianBroadcast:
    snr_bob_db: float
    snr_eve_db: float
    snr_bob: float = field(init=False, repr=False)
    snr_eve: float = field(init=False, repr=False)

    def __post_init__(self):
        # -inf dB is allowed and means "no eavesdropper"
        if math.isnan(self.snr_bob_db) or math.isnan(self.snr_eve_db):
            raise DomainError("SNRs must not be NaN")
        if math.isinf(self.snr_bob_db) and self.snr_bob_db > 0:
            raise DomainError("Bob's SNR must be finite")
        object.__setattr__(self, "snr_bob", float(db_to_linear(self.snr_bob_db)))
        object.__setattr__(self, "snr_eve", float(db_to_linear(self.snr_eve_db)))


@dataclass(frozen=True)
class RatePoint:
    common_rate: float
    secret_rate: float


@dataclass
class RateRegion:
    """Boundary of a (common, secret) rate region.

    ``points[i]`` corresponds to ``power_split_grid[i]``; points are ordered
    by increasing common rate.
    """

    points: list[RatePoint]
    power_split_grid: np.ndarray

    @property
    def common(self) -> np.ndarray:
        return np.array([p.common_rate for p in self.points])

    @property
    def secret(self) -> np.ndarray:
        return np.array([p.secret_rate for p in self.points])

    def is_monotone(self, tol: float = 1e-12) -> bool:
        c, s = self.common, self.secret
        return bool(np.all(np.diff(c) >= -tol) and np.all(np.diff(s) <= tol))

    def rows(self):
        for a, p in zip(self.power_split_grid, self.points):
            yield float(a), p.common_rate, p.secret_rate


def secrecy_capacity_gaussian(bc: GaussianBroadcast) -> float:
    """``max(0, log2(1+snr_bob) - log2(1+snr_eve))``."""
    return max(0.0, math.log2(1.0 + bc.snr_bob) - math.log2(1.0 + bc.snr_eve))


def _secret_rate(alpha, snr_b, snr_e):
    return np.log2(1.0 + alpha * snr_b) - np.log2(1.0 + alpha * snr_e)


def _common_rate(alpha, snr):
    return np.log2(1.0 + (1.0 - alpha) * snr / (1.0 + alpha * snr))


def _region(alpha, common, secret) -> RateRegion:
    order = np.argsort(-alpha, kind="stable")  # alpha = 1 has zero common rate
    pts = [RatePoint(float(max(common[i], 0.0)), float(max(secret[i], 0.0))) for i in order]
    return RateRegion(pts, alpha[order])


def broadcast_region(bc: GaussianBroadcast, grid_size: int) -> RateRegion:
    """Secrecy rate region of the degraded Gaussian broadcast channel."""
    if grid_size < 2:
        raise DomainError("grid_size must be >= 2")
    if not bc.snr_bob > bc.snr_eve:
        raise DomainError("secrecy region empty beyond zero secret rate "
                          "(Eve is not degraded with respect to Bob)")
    alpha = np.linspace(0.0, 1.0, grid_size)
    secret = _secret_rate(alpha, bc.snr_bob, bc.snr_eve)
    common = _common_rate(alpha, bc.snr_eve)
    secret[-1] = secrecy_capacity_gaussian(bc)  # exact corner
    return _region(alpha, common, secret)


def broadcast_region_nonsecret(bc: GaussianBroadcast, grid_size: int) -> RateRegion:
    """Same superposition split with no secrecy constraint on M2.

    The private layer is then limited only by Bob's own SNR; this is the
    reference curve that the secrecy region sits under.
    """
    if grid_size < 2:
        raise DomainError("grid_size must be >= 2")
    alpha = np.linspace(0.0, 1.0, grid_size)
    weak = min(bc.snr_bob, bc.snr_eve)
    private = np.log2(1.0 + alpha * bc.snr_bob)
    common = _common_rate(alpha, weak)
    return _region(alpha, common, private)


def ergodic_region_rayleigh(noise_snr_db: float, sigma2_eve: float, grid_size: int,
                            mc_draws: int, rng: Rng, sigma2_bob: float = 1.0) -> RateRegion:
    """Monte Carlo ergodic region for the Rayleigh fading broadcast channel.

    Bob's and Eve's power gains are independent exponentials with means
    ``sigma2_bob`` and ``sigma2_eve``; both receivers see the same average
    SNR ``noise_snr_db`` before fading.  With perfect channel knowledge the
    secret layer earns the positive part of the instantaneous secrecy
    difference.  The common message is coded across the fading blocks, so its
    rate is the smaller of the two receivers' ergodic layer rates.
    """
    if not sigma2_eve > 0:
        raise DomainError("sigma2_eve must be > 0")
    if mc_draws < 1000:
        raise DomainError("mc_draws must be >= 1000")
    if grid_size < 2:
        raise DomainError("grid_size must be >= 2")
    snr = float(db_to_linear(noise_snr_db))
    g_b = np.abs(rng.complex_normal(sigma2_bob, mc_draws)) ** 2 * snr
    g_e = np.abs(rng.complex_normal(sigma2_eve, mc_draws)) ** 2 * snr

    alpha = np.linspace(0.0, 1.0, grid_size)
    secret = np.empty(grid_size)
    common = np.empty(grid_size)
    for i, a in enumerate(alpha):
        secret[i] = np.mean(np.maximum(_secret_rate(a, g_b, g_e), 0.0))
        common[i] = min(np.mean(_common_rate(a, g_b)), np.mean(_common_rate(a, g_e)))
    return _region(alpha, common, secret)
