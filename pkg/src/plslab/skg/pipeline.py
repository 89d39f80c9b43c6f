"""Quantisation, reconciliation and privacy amplification.

:class:`SkgSession` strings the three stages together as a one-way state
machine (``new -> quantized -> reconciled -> keyed``) so that a key can only
be read after privacy amplification has run.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from plslab import kernels
from plslab.channel import Rng
from plslab.errors import DomainError, IntegrityError, ProtocolError
from plslab.skg.codes import BlockCode

SKG_RATE_CEILING = 64.0
DIGEST_BITS = 32
PA_STREAM = 0x5047  # Rng stream reserved for Toeplitz seeds


def skg_rate(channel_var, noise_var, ceiling: float = SKG_RATE_CEILING, with_flag: bool = False):
    """Mutual information ``I(Z_A; Z_B)`` of reciprocal Gaussian observations.

    ``Z = h + n`` at both ends with ``h ~ CN(0, channel_var)`` and
    independent ``n ~ CN(0, noise_var)``, giving
    ``log2((s+n)^2 / ((s+n)^2 - s^2))`` bits per coherence block.  Values
    above ``ceiling`` are clipped; pass ``with_flag=True`` to also get a
    boolean telling whether clipping happened.
    """
    s = np.asarray(channel_var, dtype=float)
    n = np.asarray(noise_var, dtype=float)
    if np.any(s <= 0) or np.any(n <= 0):
        raise DomainError("channel_var and noise_var must be > 0")
    raw = 2.0 * np.log2(s + n) - np.log2(n) - np.log2(2.0 * s + n)
    capped = raw > ceiling
    out = np.minimum(raw, ceiling)
    if out.ndim == 0:
        out, capped = float(out), bool(capped)
    return (out, capped) if with_flag else out


# --------------------------------------------------------------------------
# quantisation

FEATURES = ("magnitude", "real", "imag", "phase")


@dataclass(frozen=True)
class Quantizer:
    """Equiprobable multi-level quantiser with guard bands.

    Thresholds are the empirical ``k/levels`` quantiles of the party's own
    feature values.  ``guard_band_fraction`` of the probability mass is
    discarded, split evenly over the ``levels - 1`` thresholds.
    """

    levels: int = 2
    guard_band_fraction: float = 0.0
    feature: str = "magnitude"

    def __post_init__(self):
        if self.levels < 2 or self.levels & (self.levels - 1):
            raise DomainError("levels must be a power of two >= 2")
        if not 0.0 <= self.guard_band_fraction < 0.5:
            raise DomainError("guard_band_fraction must lie in [0, 0.5)")
        if self.feature not in FEATURES:
            raise DomainError(f"feature must be one of {FEATURES}")

    @property
    def bits_per_sample(self) -> int:
        return self.levels.bit_length() - 1

    def features(self, samples) -> np.ndarray:
        z = np.asarray(samples)
        if self.feature == "magnitude":
            return np.abs(z).astype(float)
        if self.feature == "real":
            return np.real(z).astype(float)
        if self.feature == "imag":
            return np.imag(z).astype(float)
        return np.angle(z)


def _gray_bits(levels_idx: np.ndarray, width: int) -> np.ndarray:
    gray = levels_idx ^ (levels_idx >> 1)
    shifts = np.arange(width - 1, -1, -1)
    return ((gray[:, None] >> shifts[None, :]) & 1).astype(np.uint8).ravel()


def _quantize_levels(f: np.ndarray, q: Quantizer):
    n = f.size
    probs = np.arange(1, q.levels) / q.levels
    thresholds = np.quantile(f, probs)
    level = np.searchsorted(thresholds, f, side="right")
    keep = np.ones(n, dtype=bool)
    if q.guard_band_fraction > 0:
        ranks = np.empty(n)
        ranks[np.argsort(f, kind="stable")] = (np.arange(n) + 0.5) / n
        half = q.guard_band_fraction / (2 * (q.levels - 1))
        dist = np.min(np.abs(ranks[:, None] - probs[None, :]), axis=1)
        keep = dist >= half
    return level, keep


def quantize(samples, q: Quantizer):
    """Quantise one party's observations.

    Returns
    -------
    bits : uint8 array
        ``log2(levels)`` Gray-coded bits per kept sample, in sample order.
    kept_indices : int array
        Indices of samples outside every guard band; these are published so
        that both parties drop the union of their discarded samples.
    """
    f = np.atleast_1d(q.features(samples))
    if f.size == 0:
        raise DomainError("samples must be nonempty")
    level, keep = _quantize_levels(f, q)
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise DomainError("guard band too wide: every sample was dropped")
    return _gray_bits(level[kept], q.bits_per_sample), kept


def quantize_pair(samples_a, samples_b, q: Quantizer):
    """Quantise both parties after exchanging kept indices.

    Each side sets its thresholds from its own samples; only samples kept by
    both are turned into bits.
    """
    fa = np.atleast_1d(q.features(samples_a))
    fb = np.atleast_1d(q.features(samples_b))
    if fa.size == 0 or fa.size != fb.size:
        raise DomainError("sample sequences must be nonempty and of equal length")
    la, ka = _quantize_levels(fa, q)
    lb, kb = _quantize_levels(fb, q)
    kept = np.flatnonzero(ka & kb)
    if kept.size == 0:
        raise DomainError("guard band too wide: every sample was dropped")
    w = q.bits_per_sample
    return _gray_bits(la[kept], w), _gray_bits(lb[kept], w), kept


# --------------------------------------------------------------------------
# reconciliation

def bit_digest(bits, digest_bits: int = DIGEST_BITS) -> np.ndarray:
    """Short SHA-256 digest of a bit string, used to confirm reconciliation."""
    bits = np.asarray(bits, dtype=np.uint8)
    h = hashlib.sha256(len(bits).to_bytes(8, "little") + np.packbits(bits).tobytes()).digest()
    return np.unpackbits(np.frombuffer(h, dtype=np.uint8))[:digest_bits]


class Reconciliation(NamedTuple):
    bits: np.ndarray
    syndrome: np.ndarray
    success: bool


def reconciliation_leakage(code: BlockCode, n_bits: int, digest_bits: int = DIGEST_BITS) -> int:
    """Public bits revealed while reconciling ``n_bits``: syndromes plus digest."""
    return (n_bits // code.n) * code.checks + digest_bits


def reconcile(bits_a, bits_b, code: BlockCode, digest_bits: int = DIGEST_BITS) -> Reconciliation:
    """Syndrome reconciliation of Bob's bits onto Alice's.

    Success is decided the way the parties would decide it: by comparing a
    ``digest_bits``-bit digest of Alice's bits with one of Bob's corrected
    bits.
    """
    bits_a = np.asarray(bits_a, dtype=np.uint8)
    bits_b = np.asarray(bits_b, dtype=np.uint8)
    if bits_a.shape != bits_b.shape:
        raise DomainError("bit sequences differ in length")
    blocks_a = code.blocks(bits_a)
    syn = code.syndrome(blocks_a)
    corrected = code.correct(code.blocks(bits_b), syn).ravel()
    ok = bool(np.array_equal(bit_digest(bits_a, digest_bits), bit_digest(corrected, digest_bits)))
    return Reconciliation(corrected, syn.ravel(), ok)


# --------------------------------------------------------------------------
# privacy amplification

def privacy_amplify(bits, leaked_bits: int, target_len: int, seed: int = 0,
                    method: str = "toeplitz", entropy_bits: float | None = None) -> np.ndarray:
    """Compress reconciled bits into a ``target_len``-bit key.

    ``method="toeplitz"`` multiplies by a random Toeplitz matrix whose
    diagonal bits come from the public ``seed`` (a 2-universal family);
    ``method="shake256"`` uses SHAKE-256 keyed by the seed.  The output may
    not exceed ``entropy_bits - leaked_bits``, where ``entropy_bits``
    defaults to the input length.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if target_len < 1:
        raise DomainError("target_len must be >= 1")
    if leaked_bits < 0:
        raise DomainError("leaked_bits must be >= 0")
    budget = (bits.size if entropy_bits is None else entropy_bits) - leaked_bits
    if target_len > budget:
        raise DomainError(f"insufficient residual entropy: {target_len} > {budget}")
    if method == "toeplitz":
        toeplitz_seed = Rng(seed, PA_STREAM).bits(bits.size + target_len - 1)
        return kernels.toeplitz_hash(bits, toeplitz_seed, target_len)
    if method == "shake256":
        h = hashlib.shake_256(seed.to_bytes(8, "little") + len(bits).to_bytes(8, "little")
                              + np.packbits(bits).tobytes())
        raw = np.frombuffer(h.digest((target_len + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:target_len]
    raise DomainError(f"unknown privacy amplification method {method!r}")


# --------------------------------------------------------------------------
# session state machine

NEW, QUANTIZED, RECONCILED, KEYED, ABORTED = "new", "quantized", "reconciled", "keyed", "aborted"


class SkgSession:
    """One party's secret-key-generation run.

    Alice publishes the syndrome of her bits (:meth:`publish_side_information`);
    Bob corrects his bits with it (:meth:`apply_side_information`).  Either
    side then calls :meth:`amplify`.  Leakage charged to privacy
    amplification is the syndrome length plus ``digest_bits``, whether or
    not the digest is actually sent.
    """

    def __init__(self, code: BlockCode, key_len: int, *, role: str = "alice",
                 pa_seed: int = 0, digest_bits: int = DIGEST_BITS, method: str = "toeplitz"):
        if role not in ("alice", "bob"):
            raise DomainError("role must be 'alice' or 'bob'")
        if key_len < 2:
            raise DomainError("key_len must be >= 2 so it can be split")
        self.code = code
        self.key_len = int(key_len)
        self.role = role
        self.pa_seed = pa_seed
        self.digest_bits = digest_bits
        self.method = method
        self.state = NEW
        self.bits: np.ndarray | None = None
        self.syndrome: np.ndarray | None = None
        self.kept_indices: np.ndarray | None = None
        self._key: np.ndarray | None = None

    def __repr__(self) -> str:
        return f"SkgSession(role={self.role!r}, state={self.state!r}, key_len={self.key_len})"

    def _require(self, *states):
        if self.state == ABORTED:
            raise ProtocolError("session aborted")
        if self.state not in states:
            raise ProtocolError(f"operation not allowed in state {self.state!r}")

    # stage 1 ----------------------------------------------------------------
    def load_bits(self, bits, kept_indices=None) -> "SkgSession":
        self._require(NEW)
        bits = np.asarray(bits, dtype=np.uint8)
        usable = bits.size - bits.size % self.code.n
        if usable == 0:
            raise DomainError("fewer bits than one code block")
        self.bits = bits[:usable].copy()
        self.kept_indices = kept_indices
        self.state = QUANTIZED
        return self

    def load_observations(self, samples, quantizer: Quantizer) -> "SkgSession":
        bits, kept = quantize(samples, quantizer)
        return self.load_bits(bits, kept)

    @property
    def leaked_bits(self) -> int:
        return reconciliation_leakage(self.code, self.bits.size, self.digest_bits)

    # stage 2 ----------------------------------------------------------------
    def publish_side_information(self) -> np.ndarray:
        self._require(QUANTIZED)
        if self.role != "alice":
            raise ProtocolError("only Alice publishes side information")
        self.syndrome = self.code.syndrome(self.code.blocks(self.bits)).ravel()
        self.state = RECONCILED
        return self.syndrome.copy()

    @property
    def digest(self) -> np.ndarray:
        self._require(RECONCILED, KEYED)
        return bit_digest(self.bits, self.digest_bits)

    def apply_side_information(self, syndrome, digest=None) -> "SkgSession":
        self._require(QUANTIZED)
        if self.role != "bob":
            raise ProtocolError("only Bob applies side information")
        syndrome = np.asarray(syndrome, dtype=np.uint8)
        blocks = self.code.blocks(self.bits)
        if syndrome.size != blocks.shape[0] * self.code.checks:
            self.abort()
            raise IntegrityError("syndrome length does not match the block count")
        self.syndrome = syndrome.copy()
        self.bits = self.code.correct(blocks, syndrome.reshape(blocks.shape[0], -1)).ravel()
        if digest is not None and not np.array_equal(
                bit_digest(self.bits, self.digest_bits), np.asarray(digest, dtype=np.uint8)):
            self.abort()
            raise IntegrityError("reconciliation digest mismatch")
        self.state = RECONCILED
        return self

    # stage 3 ----------------------------------------------------------------
    def amplify(self) -> np.ndarray:
        self._require(RECONCILED)
        self._key = privacy_amplify(self.bits, self.leaked_bits, self.key_len,
                                    seed=self.pa_seed, method=self.method)
        self.state = KEYED
        return self._key.copy()

    def abort(self):
        self._key = None
        self.bits = None
        self.state = ABORTED

    @property
    def key(self) -> np.ndarray:
        self._require(KEYED)
        return self._key.copy()

    @property
    def key_enc(self) -> np.ndarray:
        return self.key[: self.key_len // 2]

    @property
    def key_int(self) -> np.ndarray:
        return self.key[self.key_len // 2:]


def max_key_len(code: BlockCode, n_bits: int, digest_bits: int = DIGEST_BITS) -> int:
    """Longest key privacy amplification will release from ``n_bits`` raw bits."""
    usable = n_bits - n_bits % code.n
    return usable - reconciliation_leakage(code, usable, digest_bits)


def run_skg(samples_a, samples_b, quantizer: Quantizer, code: BlockCode, key_len: int | None = None,
            pa_seed: int = 0, digest_bits: int = DIGEST_BITS):
    """Full two-party run with digest verification.

    Returns ``(alice, bob, agreed)``.  When the digests disagree Bob's
    session is aborted and ``agreed`` is False; a key is never released
    on an unverified reconciliation.
    """
    bits_a, bits_b, kept = quantize_pair(samples_a, samples_b, quantizer)
    if key_len is None:
        key_len = max_key_len(code, bits_a.size, digest_bits)
    alice = SkgSession(code, key_len, role="alice", pa_seed=pa_seed, digest_bits=digest_bits)
    bob = SkgSession(code, key_len, role="bob", pa_seed=pa_seed, digest_bits=digest_bits)
    alice.load_bits(bits_a, kept)
    bob.load_bits(bits_b, kept)
    syn = alice.publish_side_information()
    try:
        bob.apply_side_information(syn, alice.digest)
    except IntegrityError:
        alice.abort()
        return alice, bob, False
    alice.amplify()
    bob.amplify()
    return alice, bob, True


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def entropy_per_sample(q: Quantizer) -> float:
    """Upper bound on raw-bit entropy per kept sample."""
    return math.log2(q.levels)
