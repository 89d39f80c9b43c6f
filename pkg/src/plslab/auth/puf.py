"""Simulated PUF with code-offset helper data and single-use CRPs.

A device is a fixed latent vector.  A challenge selects a pseudo-random
projection of it (seeded from SHA-256 of the challenge); the response bits
are the signs of the projection plus fresh Gaussian measurement noise, so
the same challenge gives the same bits up to noise flips.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from plslab.channel import Rng
from plslab.errors import DomainError, ExhaustedError
from plslab.skg.codes import BlockCode

CHALLENGE_BYTES = 16
DB_MAGIC = "# plslab-crp v1"
DB_HEADER = "challenge\tresponse\thelper\tused"


@dataclass(frozen=True, eq=False)
class PufDevice:
    fingerprint: np.ndarray
    response_noise_std: float = 0.01
    n_bits: int = 56

    def __post_init__(self):
        fp = np.array(self.fingerprint, dtype=float).ravel()
        fp.setflags(write=False)
        object.__setattr__(self, "fingerprint", fp)
        if fp.size == 0:
            raise DomainError("fingerprint must be nonempty")
        if self.response_noise_std < 0:
            raise DomainError("response_noise_std must be >= 0")
        if self.n_bits < 1:
            raise DomainError("n_bits must be >= 1")

    @classmethod
    def create(cls, rng: Rng, dim: int = 64, response_noise_std: float = 0.01,
               n_bits: int = 56) -> "PufDevice":
        return cls(rng.standard_normal(dim), response_noise_std, n_bits)

    def _projection(self, challenge: bytes) -> np.ndarray:
        digest = hashlib.sha256(bytes(challenge)).digest()
        seed = int.from_bytes(digest[:8], "little")
        m = Rng(seed, int.from_bytes(digest[8:16], "little")).standard_normal(
            (self.n_bits, self.fingerprint.size))
        return m @ self.fingerprint / np.sqrt(self.fingerprint.size)

    def response(self, challenge: bytes, rng: Rng) -> np.ndarray:
        """One noisy measurement, quantised by sign."""
        v = self._projection(challenge)
        if self.response_noise_std > 0:
            v = v + self.response_noise_std * rng.standard_normal(v.size)
        return (v > 0).astype(np.uint8)


@dataclass
class CrpRecord:
    challenge: bytes
    enrolled_response: np.ndarray
    helper_data: np.ndarray
    used: bool = False

    def mark_used(self):
        if self.used:
            raise ExhaustedError("challenge-response pair already used")
        self.used = True


def _bitstr(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def _parse_bits(s: str) -> np.ndarray:
    if set(s) - {"0", "1"}:
        raise DomainError(f"bad bit string {s!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


@dataclass
class CrpDatabase:
    """Verifier-side CRP store.

    On disk: a magic line, a tab-separated header, then one record per line
    with the challenge in hex, response and helper data as ``0``/``1``
    strings and ``used`` as 0/1.
    """

    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def unused(self) -> list:
        return [r for r in self.records if not r.used]

    def challenges(self) -> set:
        return {r.challenge for r in self.records}

    def to_text(self) -> str:
        lines = [DB_MAGIC, DB_HEADER]
        for r in self.records:
            lines.append("\t".join([r.challenge.hex(), _bitstr(r.enrolled_response),
                                    _bitstr(r.helper_data), "1" if r.used else "0"]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CrpDatabase":
        lines = text.splitlines()
        if len(lines) < 2 or lines[0] != DB_MAGIC or lines[1] != DB_HEADER:
            raise DomainError("not a CRP database file")
        records = []
        for no, line in enumerate(lines[2:], start=3):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4 or parts[3] not in ("0", "1"):
                raise DomainError(f"malformed CRP record on line {no}")
            records.append(CrpRecord(bytes.fromhex(parts[0]), _parse_bits(parts[1]),
                                     _parse_bits(parts[2]), parts[3] == "1"))
        return cls(records)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "CrpDatabase":
        return cls.from_text(Path(path).read_text())


def enroll(device: PufDevice, n_crps: int, code: BlockCode, rng: Rng) -> CrpDatabase:
    """Offline enrolment: ``n_crps`` unique random challenges with helper data."""
    if n_crps < 1:
        raise DomainError("n_crps must be >= 1")
    if device.n_bits % code.n:
        raise DomainError(f"response length {device.n_bits} is not a multiple of n={code.n}")
    db = CrpDatabase()
    seen = set()
    while len(db.records) < n_crps:
        ch = rng.bytes(CHALLENGE_BYTES)
        if ch in seen:
            continue
        seen.add(ch)
        bits = device.response(ch, rng)
        helper = code.syndrome(code.blocks(bits)).ravel()
        db.records.append(CrpRecord(ch, bits, helper))
    return db


def authenticate(device: PufDevice, db: CrpDatabase, code: BlockCode, rng: Rng):
    """Consume one random unused CRP and check the device's fresh response.

    Returns ``(accept, record)``.  The record is spent whatever the outcome.
    """
    pool = [i for i, r in enumerate(db.records) if not r.used]
    if not pool:
        raise ExhaustedError("database exhausted")
    rec = db.records[pool[rng.choice(len(pool))]]
    rec.mark_used()
    fresh = device.response(rec.challenge, rng)
    if fresh.size != rec.enrolled_response.size:
        return False, rec
    blocks = code.blocks(fresh)
    corrected = code.correct(blocks, rec.helper_data.reshape(blocks.shape[0], -1)).ravel()
    return bool(np.array_equal(corrected, rec.enrolled_response)), rec
