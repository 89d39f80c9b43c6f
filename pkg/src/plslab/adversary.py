"""Active attacks on key generation.

Two models live here: a man-in-the-middle with two antennas that precodes so
Alice and Bob receive the same injected signal, and a reactive jammer that
only jams subcarriers whose power it senses above a threshold.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from plslab.channel import Rng
from plslab.errors import DomainError
from plslab.skg.pipeline import skg_rate

# --------------------------------------------------------------------------
# injection


def build_precoder(h_a, h_b) -> np.ndarray:
    """Precoder ``(P1, 1)`` with ``h_a . P == h_b . P``.

    Accepts a single pair of 2-vectors or stacks of shape (M, 2).
    """
    h_a = np.asarray(h_a, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    if h_a.shape[-1] != 2 or h_a.shape != h_b.shape:
        raise DomainError("h_a and h_b must be 2-vectors of the same shape")
    den = h_a[..., 0] - h_b[..., 0]
    if np.any(den == 0):
        raise DomainError("precoder singular: h_a[0] == h_b[0]")
    p1 = (h_b[..., 1] - h_a[..., 1]) / den
    return np.stack([p1, np.ones_like(p1)], axis=-1)


@dataclass
class InjectionScenario:
    h_ab: complex
    h_a: np.ndarray
    h_b: np.ndarray
    x_j: complex = 1.0
    precoder: np.ndarray | None = None

    def __post_init__(self):
        self.h_a = np.asarray(self.h_a, dtype=complex)
        self.h_b = np.asarray(self.h_b, dtype=complex)
        if self.precoder is None:
            self.precoder = build_precoder(self.h_a, self.h_b)

    @classmethod
    def random(cls, rng: Rng, x_j=None, count=None) -> "InjectionScenario":
        """Unit-variance Rayleigh channels; ``x_j`` defaults to a unit-power random phase."""
        shape = () if count is None else (count,)
        h_ab = rng.complex_normal(1.0, shape or None)
        h_a = rng.complex_normal(1.0, shape + (2,))
        h_b = rng.complex_normal(1.0, shape + (2,))
        if x_j is None:
            x_j = rng.unit_phase(shape or None)
        return cls(h_ab, h_a, h_b, x_j)


def injection_signal(scn: InjectionScenario):
    """Injected signal as received by (Alice, Bob)."""
    w_a = np.sum(scn.h_a * scn.precoder, axis=-1) * scn.x_j
    w_b = np.sum(scn.h_b * scn.precoder, axis=-1) * scn.x_j
    return w_a, w_b


def observe_under_attack(scn: InjectionScenario, probes, noise_var: float, rng: Rng):
    """Observations ``z_a = y h + W + n_a`` and ``z_b = x h + W + n_b``.

    ``probes = (x, y)`` are Alice's and Bob's pilots; equal pilots are the
    deterministic-pilot case.
    """
    x, y = probes
    w_a, w_b = injection_signal(scn)
    shape = np.broadcast(np.asarray(scn.h_ab), w_a, np.asarray(x), np.asarray(y)).shape
    if noise_var > 0:
        n_a = rng.complex_normal(noise_var, shape or None)
        n_b = rng.complex_normal(noise_var, shape or None)
    else:
        n_a = n_b = 0.0
    z_a = y * scn.h_ab + w_a + n_a
    z_b = x * scn.h_ab + w_b + n_b
    return z_a, z_b


def counter_injection(z_a, z_b, x, y):
    """Each side multiplies by its own pilot; the common term becomes ``x y h``."""
    return x * z_a, y * z_b


def histogram_mutual_information(bits, values, bins: int = 16) -> float:
    """Plug-in estimate (bits) of I(bit; value) with equal-mass bins on ``values``."""
    bits = np.asarray(bits).astype(np.int64).ravel()
    v = np.asarray(values, dtype=float).ravel()
    edges = np.quantile(v, np.linspace(0, 1, bins + 1)[1:-1])
    cell = np.searchsorted(edges, v, side="right")
    joint = np.zeros((2, bins))
    np.add.at(joint, (bits, cell), 1.0)
    joint /= joint.sum()
    pb = joint.sum(axis=1, keepdims=True)
    pc = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / (pb @ pc)[nz])))


def injection_leakage(sessions: int, rng: Rng, countermeasure: bool, noise_var: float = 0.01,
                      attack_gain: float = 4.0, bins: int = 16) -> float:
    """Information one key bit per session carries about Mallory's signal.

    Each session draws fresh channels, a random injected symbol and (with the
    countermeasure) random unit-phase pilots.  Alice's key bit is the sign
    of the real part of her (post-multiplied) observation; the leakage is
    the plug-in mutual information between that bit and ``Re W``.
    """
    scn = InjectionScenario.random(rng.spawn(1), count=sessions)
    scn.x_j = scn.x_j * attack_gain
    w_a, _ = injection_signal(scn)
    if countermeasure:
        probe_rng = rng.spawn(2)
        x = probe_rng.unit_phase(sessions)
        y = probe_rng.unit_phase(sessions)
    else:
        x = y = np.ones(sessions, dtype=complex)
    z_a, z_b = observe_under_attack(scn, (x, y), noise_var, rng.spawn(3))
    if countermeasure:
        z_a, z_b = counter_injection(z_a, z_b, x, y)
    bits = (np.real(z_a) > 0).astype(np.uint8)
    return histogram_mutual_information(bits, np.real(w_a), bins)


def _complex_corr(u, v) -> float:
    # uncentred: a constant common term is exactly what we want to detect
    return float(abs(np.vdot(v, u)) / np.sqrt(np.vdot(u, u).real * np.vdot(v, v).real))


def attacker_term_correlation(sessions: int, rng: Rng, countermeasure: bool = True,
                              noise_var: float = 0.01, scn: InjectionScenario | None = None):
    """Correlation of the attacker terms and of the full observations.

    The channels and Mallory's precoded symbol stay fixed (one attack setup)
    while each session redraws the pilots and the noise.  Returns
    ``(attacker_corr, shared_corr)``: the magnitude of the complex correlation
    between ``z_a - XYH`` and ``z_b - XYH``, and between ``z_a`` and ``z_b``.

    Holding the channels fixed matters: the injected amplitude is a ratio of
    Gaussians across channel draws and has no finite variance.
    """
    if scn is None:
        scn = InjectionScenario.random(rng.spawn(1))
    probe_rng = rng.spawn(2)
    if countermeasure:
        x = probe_rng.unit_phase(sessions)
        y = probe_rng.unit_phase(sessions)
    else:
        x = y = np.ones(sessions, dtype=complex)
    z_a, z_b = observe_under_attack(scn, (x, y), noise_var, rng.spawn(3))
    if countermeasure:
        z_a, z_b = counter_injection(z_a, z_b, x, y)
    shared = x * y * scn.h_ab
    return _complex_corr(z_a - shared, z_b - shared), _complex_corr(z_a, z_b)


# --------------------------------------------------------------------------
# reactive jamming game

BELOW_THRESHOLD = "below_threshold_equal_power"
FULL_POWER = "full_power_all"
LEADER_STRATEGIES = (BELOW_THRESHOLD, FULL_POWER)


@dataclass(frozen=True)
class JammingGame:
    """Leader (Alice and Bob) against a reactive jammer on ``n_subcarriers``.

    Every subcarrier has legitimate gain ``gain`` and jammer gain
    ``jam_gain``; noise power is 1.  The leader's payoff is the SKG sum rate
    and the jammer's is its negative.
    """

    n_subcarriers: int
    p_leg: float
    p_jam: float
    threshold: float
    gain: float = 1.0
    jam_gain: float = 1.0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise DomainError("n_subcarriers must be >= 1")
        if not (self.p_leg > 0 and self.p_jam > 0) or self.threshold < 0:
            raise DomainError("need p_leg > 0, p_jam > 0, threshold >= 0")
        if not (self.gain > 0 and self.jam_gain > 0):
            raise DomainError("gains must be > 0")

    def powers(self, strategy: str) -> np.ndarray:
        if strategy == BELOW_THRESHOLD:
            return np.full(self.n_subcarriers, min(self.p_leg, self.threshold))
        if strategy == FULL_POWER:
            return np.full(self.n_subcarriers, self.p_leg)
        raise DomainError(f"unknown leader strategy {strategy!r}")

    def sensed(self, strategy: str) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.powers(strategy) > self.threshold))

    def leader_payoff(self, strategy: str, jammed) -> float:
        """SKG sum rate when ``jammed`` subcarriers share the jammer's power."""
        p = self.powers(strategy)
        jammed = list(jammed)
        interference = np.zeros(self.n_subcarriers)
        if jammed:
            interference[jammed] = self.p_jam / len(jammed) * self.jam_gain
        snr = p * self.gain / (1.0 + interference)
        active = snr > 0
        if not np.any(active):
            return 0.0
        return float(np.sum(skg_rate(snr[active], 1.0)))

    @property
    def payoff(self) -> np.ndarray:
        return payoff_matrix(self)


@dataclass(frozen=True)
class GameOutcome:
    leader_strategy: str
    follower_response: tuple
    value: float
    sensed: tuple = ()
    candidates: dict = field(default_factory=dict)


def payoff_matrix(game: JammingGame) -> np.ndarray:
    """Leader payoff, rows per leader strategy, column k = jam the first k subcarriers."""
    n = game.n_subcarriers
    out = np.empty((len(LEADER_STRATEGIES), n + 1))
    for i, s in enumerate(LEADER_STRATEGIES):
        for k in range(n + 1):
            out[i, k] = game.leader_payoff(s, range(k))
    return out


def best_response(game: JammingGame, strategy: str) -> tuple:
    """Jammer's reply: the sensed subset that minimises the leader's rate.

    Subcarriers are symmetric, so only the count matters; ties go to
    jamming more of them.
    """
    sensed = game.sensed(strategy)
    best_k, best_v = 0, game.leader_payoff(strategy, ())
    for k in range(1, len(sensed) + 1):
        v = game.leader_payoff(strategy, sensed[:k])
        if v <= best_v + 1e-12 * max(1.0, abs(best_v)):
            best_k, best_v = k, v
    return sensed[:best_k]


def solve_stackelberg(game: JammingGame) -> GameOutcome:
    """Leader commits to a strategy anticipating the jammer's best response."""
    cands = {}
    for s in LEADER_STRATEGIES:
        resp = best_response(game, s)
        cands[s] = (resp, game.leader_payoff(s, resp))
    below, full = cands[BELOW_THRESHOLD], cands[FULL_POWER]
    # ties go to hiding below the threshold
    pick = FULL_POWER if full[1] > below[1] + 1e-12 * max(1.0, abs(below[1])) else BELOW_THRESHOLD
    resp, value = cands[pick]
    return GameOutcome(pick, resp, value, game.sensed(pick),
                       {k: v[1] for k, v in cands.items()})


def follower_deviations(game: JammingGame, strategy: str):
    """Every subset of the sensed set, for exhaustive equilibrium checks."""
    sensed = game.sensed(strategy)
    for k in range(len(sensed) + 1):
        yield from itertools.combinations(sensed, k)


def strategy_counts(outcomes) -> Counter:
    return Counter(o.leader_strategy for o in outcomes)
