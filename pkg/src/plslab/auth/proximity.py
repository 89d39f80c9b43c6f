"""Proximity check from RSS measured at several verifier positions.

The verifier fits the transmitter position to the RSS readings by least
squares under the log-distance model and accepts the claimed position when
a likelihood-ratio test against the fit does not reject it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from plslab.channel import RssModel, RssSample
from plslab.errors import DomainError, GeometryError

SIGMA_FLOOR_DB = 1e-9
MIN_DISTANCE = 1e-3


@dataclass(frozen=True)
class ProximityResult:
    accept: bool
    fitted_position: np.ndarray
    statistic: float
    critical_value: float


def _check_geometry(pos: np.ndarray):
    uniq = np.unique(pos, axis=0)
    if uniq.shape[0] < 3:
        raise GeometryError("geometry insufficient: need >= 3 distinct positions")
    centred = uniq - uniq.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    if s[1] <= 1e-9 * max(s[0], 1.0):
        raise GeometryError("geometry insufficient: measurement positions are collinear")


def _residuals(tx, pos, rss, model: RssModel, tx_power_db):
    d = np.maximum(np.hypot(pos[:, 0] - tx[0], pos[:, 1] - tx[1]), MIN_DISTANCE)
    return rss - model.mean_rss_db(tx_power_db, d)


def fit_transmitter(measurements, model: RssModel, tx_power_db: float = 0.0,
                    starts=None) -> np.ndarray:
    """Least-squares transmitter position, best of several starting points."""
    pos = np.array([m.position for m in measurements], dtype=float)
    rss = np.array([m.rss_db for m in measurements], dtype=float)
    _check_geometry(pos)
    centre = pos.mean(axis=0)
    spread = max(float(np.ptp(pos, axis=0).max()), 1.0)
    if starts is None:
        starts = [centre, pos[np.argmax(rss)]]
    starts = list(starts)
    for ang in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        starts.append(centre + 2 * spread * np.array([np.cos(ang), np.sin(ang)]))
    best = None
    for x0 in starts:
        sol = optimize.least_squares(_residuals, np.asarray(x0, float),
                                     args=(pos, rss, model, tx_power_db),
                                     xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost:
            best = sol
    return best.x


def proximity_test(claimed_pos, measurements, model: RssModel, confidence: float = 0.95,
                   tx_power_db: float = 0.0) -> ProximityResult:
    """Likelihood-ratio test of the claimed position against the fitted one.

    With Gaussian shadowing of known std the statistic
    ``(SSR(claimed) - SSR(fit)) / sigma^2`` is approximately chi-square with
    two degrees of freedom when the claim is true.
    """
    if not 0.0 < confidence < 1.0:
        raise DomainError("confidence must lie in (0, 1)")
    measurements = list(measurements)
    if len(measurements) < 3:
        raise GeometryError("geometry insufficient: need >= 3 measurements")
    claimed = np.asarray(claimed_pos, dtype=float)
    pos = np.array([m.position for m in measurements], dtype=float)
    rss = np.array([m.rss_db for m in measurements], dtype=float)
    fit = fit_transmitter(measurements, model, tx_power_db, starts=[claimed])
    sigma = max(model.shadowing_std_db, SIGMA_FLOOR_DB)
    ssr_claim = float(np.sum(_residuals(claimed, pos, rss, model, tx_power_db) ** 2))
    ssr_fit = float(np.sum(_residuals(fit, pos, rss, model, tx_power_db) ** 2))
    stat = max(0.0, ssr_claim - ssr_fit) / sigma ** 2
    crit = float(stats.chi2.ppf(confidence, df=2))
    return ProximityResult(stat <= crit, fit, stat, crit)


def verify_proximity(claimed_pos, measurements, model: RssModel, confidence: float = 0.95,
                     tx_power_db: float = 0.0) -> bool:
    return proximity_test(claimed_pos, measurements, model, confidence, tx_power_db).accept


def probe_positions(center, radius: float, count: int, rng=None) -> np.ndarray:
    """Verifier walk: ``count`` points on a circle, optionally with random phase."""
    phase = 0.0 if rng is None else float(rng.uniform()) * 2 * np.pi
    ang = phase + np.linspace(0, 2 * np.pi, count, endpoint=False)
    return np.asarray(center, float) + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
