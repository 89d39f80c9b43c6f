"""Seeded channel and measurement models.

Every model draws from an :class:`Rng`, a counter-based (Philox) stream keyed
by ``(seed, stream_id)``.  Complex Gaussians come from a Box-Muller transform
on the stream's uniforms, which makes the modulus and the phase of a Rayleigh
draw two independent closed-form functions of the two uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plslab.errors import DomainError, GeometryError

_TWO_PI = 2.0 * np.pi
_U64 = (1 << 64) - 1


class Rng:
    """Reproducible random stream.

    Identical ``(seed, stream_id)`` pairs give identical sequences; distinct
    ``stream_id`` values under the same seed give independent Philox streams
    (the stream id enters the seed sequence as a spawn key).
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        if not (0 <= seed <= _U64 and 0 <= stream_id <= _U64):
            raise DomainError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "Rng":
        """Independent stream sharing this seed."""
        return Rng(self.seed, stream_id)

    # uniforms ------------------------------------------------------------
    def uniform(self, size=None) -> np.ndarray:
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size=size)

    def bits(self, size) -> np.ndarray:
        return self._gen.integers(0, 2, size=size, dtype=np.uint8)

    def bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)

    def choice(self, n: int) -> int:
        return int(self._gen.integers(0, n))

    # Gaussians via Box-Muller ---------------------------------------------
    def _box_muller(self, size):
        u1 = 1.0 - self._gen.random(size)  # (0, 1], keeps log finite
        u2 = self._gen.random(size)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = _TWO_PI * u2
        return radius, angle

    def standard_normal(self, size=None) -> np.ndarray:
        n = 1 if size is None else int(np.prod(size))
        radius, angle = self._box_muller((n + 1) // 2)
        out = np.empty(2 * radius.size)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        out = out[:n]
        return out[0] if size is None else out.reshape(size)

    def normal(self, mean=0.0, std=1.0, size=None):
        return mean + std * self.standard_normal(size)

    def complex_normal(self, variance: float = 1.0, size=None):
        """Circularly-symmetric CN(0, variance) draws."""
        radius, angle = self._box_muller(size)
        scale = np.sqrt(variance / 2.0)
        z = scale * radius * np.exp(1j * angle)
        return complex(z) if size is None else z

    def unit_phase(self, size=None):
        """Unit-modulus complex numbers with uniform phase."""
        z = np.exp(1j * _TWO_PI * self._gen.random(size))
        return complex(z) if size is None else z


@dataclass(frozen=True)
class FadingConfig:
    """Rayleigh fading with ``E|h|^2 = variance``."""

    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise DomainError(f"fading variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class ChannelDraw:
    """A reciprocal channel realisation and both parties' observations.

    Fields are complex scalars for a single draw, or equal-shape complex
    arrays when drawn in bulk.
    """

    h: complex | np.ndarray
    z_a: complex | np.ndarray
    z_b: complex | np.ndarray
    noise_var: float


def sample_rayleigh(rng: Rng, cfg: FadingConfig, count: int) -> np.ndarray:
    """Draw ``count`` CN(0, cfg.variance) channel coefficients."""
    if count < 1:
        raise DomainError("count must be >= 1")
    return rng.complex_normal(cfg.variance, count)


def probe_pair(rng: Rng, cfg: FadingConfig, noise_var: float = 1.0,
               probe_a=1.0 + 0j, probe_b=1.0 + 0j, count: int | None = None) -> ChannelDraw:
    """Bidirectional pilot exchange within one coherence block.

    Alice sends ``probe_a`` and Bob sends ``probe_b`` over the same channel
    ``h``.  Alice observes Bob's probe, ``z_a = probe_b*h + n_a``, and Bob
    observes Alice's, ``z_b = probe_a*h + n_b``, with independent
    CN(0, noise_var) noise.  Probes may be arrays (one per draw) when
    ``count`` is given.
    """
    if noise_var < 0:
        raise DomainError("noise_var must be >= 0")
    size = None if count is None else int(count)
    h = rng.complex_normal(cfg.variance, size)
    if noise_var > 0:
        n_a = rng.complex_normal(noise_var, size)
        n_b = rng.complex_normal(noise_var, size)
    else:
        n_a = n_b = 0.0
    z_a = probe_b * h + n_a
    z_b = probe_a * h + n_b
    if size is None:
        return ChannelDraw(complex(h), complex(z_a), complex(z_b), float(noise_var))
    return ChannelDraw(h, np.asarray(z_a, dtype=complex), np.asarray(z_b, dtype=complex),
                       float(noise_var))


# --------------------------------------------------------------------------
# received signal strength

@dataclass(frozen=True)
class RssModel:
    """Log-distance path loss with log-normal shadowing (reference 1 m)."""

    pathloss_exponent: float = 2.0
    shadowing_std_db: float = 0.0

    def __post_init__(self):
        if not 1.5 <= self.pathloss_exponent <= 6.0:
            raise DomainError(
                f"pathloss_exponent must lie in [1.5, 6], got {self.pathloss_exponent}")
        if self.shadowing_std_db < 0:
            raise DomainError("shadowing_std_db must be >= 0")

    def mean_rss_db(self, tx_power_db: float, distance) -> np.ndarray:
        return tx_power_db - 10.0 * self.pathloss_exponent * np.log10(distance)


@dataclass(frozen=True)
class RssSample:
    position: tuple[float, float]
    rss_db: float
    pathloss_exponent: float
    shadowing_std_db: float

    def __post_init__(self):
        if not np.isfinite(self.rss_db):
            raise DomainError("rss_db must be finite")


def rss_at(rng: Rng, tx_pos, rx_pos, tx_power_db: float, model: RssModel) -> float:
    """RSS in dB at ``rx_pos`` from a transmitter at ``tx_pos``."""
    d = float(np.hypot(*(np.asarray(rx_pos, float) - np.asarray(tx_pos, float))))
    if d == 0.0:
        raise GeometryError("degenerate geometry: transmitter and receiver coincide")
    rss = float(model.mean_rss_db(tx_power_db, d))
    if model.shadowing_std_db > 0:
        rss += model.shadowing_std_db * float(rng.standard_normal())
    return rss


def measure_rss(rng: Rng, tx_pos, positions, tx_power_db: float,
                model: RssModel) -> list[RssSample]:
    """One :class:`RssSample` per receiver position."""
    out = []
    for pos in np.asarray(positions, float):
        out.append(RssSample((float(pos[0]), float(pos[1])),
                             rss_at(rng, tx_pos, pos, tx_power_db, model),
                             model.pathloss_exponent, model.shadowing_std_db))
    return out
