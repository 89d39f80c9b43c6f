"""Single-message key agreement plus authenticated encryption.

Alice sends ``[syndrome || ciphertext || tag]``: the syndrome lets Bob finish
key generation, then the integrity half of the key checks the tag over the
ciphertext before the encryption half decrypts it (encrypt-then-sign).
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from plslab.errors import DomainError, IntegrityError, ProtocolError
from plslab.skg.codes import BlockCode
from plslab.skg.pipeline import DIGEST_BITS, SkgSession, bits_to_bytes


class Cipher(Protocol):
    def encrypt(self, key: bytes, plaintext: bytes) -> bytes: ...
    def decrypt(self, key: bytes, ciphertext: bytes) -> bytes: ...


class Mac(Protocol):
    def sign(self, key: bytes, data: bytes) -> bytes: ...
    def verify(self, key: bytes, data: bytes, tag: bytes) -> bool: ...


class XorStreamCipher:
    """Reference cipher: XOR with a SHAKE-256 keystream.

    Test scaffolding only.  A key must never encrypt two messages.
    """

    def _stream(self, key: bytes, n: int) -> bytes:
        return hashlib.shake_256(b"plslab-xor" + key).digest(n)

    def encrypt(self, key: bytes, plaintext: bytes) -> bytes:
        ks = np.frombuffer(self._stream(key, len(plaintext)), dtype=np.uint8)
        return (np.frombuffer(plaintext, dtype=np.uint8) ^ ks).tobytes()

    decrypt = encrypt


class HmacSha256:
    def sign(self, key: bytes, data: bytes) -> bytes:
        return hmac.new(key, data, hashlib.sha256).digest()

    def verify(self, key: bytes, data: bytes, tag: bytes) -> bool:
        return hmac.compare_digest(self.sign(key, data), tag)


_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class HybridMessage:
    """Wire message.  ``syndrome`` is a bit array; its length prefix counts bits."""

    syndrome: np.ndarray
    ciphertext: bytes
    tag: bytes

    def __eq__(self, other):
        if not isinstance(other, HybridMessage):
            return NotImplemented
        return (np.array_equal(self.syndrome, other.syndrome)
                and self.ciphertext == other.ciphertext and self.tag == other.tag)

    def to_bytes(self) -> bytes:
        syn = np.asarray(self.syndrome, dtype=np.uint8)
        return b"".join([
            _U32.pack(syn.size), np.packbits(syn).tobytes(),
            _U32.pack(len(self.ciphertext)), self.ciphertext,
            _U32.pack(len(self.tag)), self.tag,
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "HybridMessage":
        pos = 0

        def take(n):
            nonlocal pos
            if pos + n > len(data):
                raise IntegrityError("truncated hybrid message")
            chunk = data[pos:pos + n]
            pos += n
            return chunk

        n_bits = _U32.unpack(take(4))[0]
        packed = np.frombuffer(take((n_bits + 7) // 8), dtype=np.uint8)
        syndrome = np.unpackbits(packed)[:n_bits]
        if n_bits % 8 and np.any(np.unpackbits(packed)[n_bits:]):
            raise IntegrityError("nonzero padding in syndrome field")
        ct = take(_U32.unpack(take(4))[0])
        tag = take(_U32.unpack(take(4))[0])
        if pos != len(data):
            raise IntegrityError("trailing bytes after hybrid message")
        return cls(syndrome.copy(), bytes(ct), bytes(tag))


def hybrid_send(message: bytes, session: SkgSession, cipher: Cipher | None = None,
                mac: Mac | None = None) -> HybridMessage:
    """Encrypt ``message`` under Alice's freshly generated key and sign the ciphertext."""
    cipher = cipher or XorStreamCipher()
    mac = mac or HmacSha256()
    if session.role != "alice":
        raise ProtocolError("hybrid_send needs Alice's session")
    # raises ProtocolError when amplification has not run
    k_e, k_i = bits_to_bytes(session.key_enc), bits_to_bytes(session.key_int)
    ct = cipher.encrypt(k_e, bytes(message))
    return HybridMessage(session.syndrome.copy(), ct, mac.sign(k_i, ct))


def receive_with(session: SkgSession, msg: HybridMessage, cipher: Cipher | None = None,
                 mac: Mac | None = None) -> bytes:
    """Bob's side given a session already loaded with his quantised bits."""
    cipher = cipher or XorStreamCipher()
    mac = mac or HmacSha256()
    session.apply_side_information(msg.syndrome)
    session.amplify()
    k_e, k_i = bits_to_bytes(session.key_enc), bits_to_bytes(session.key_int)
    if not mac.verify(k_i, msg.ciphertext, msg.tag):
        # a wrong tag means either tampering or failed reconciliation;
        # the key is discarded in both cases
        session.abort()
        raise IntegrityError("tag verification failed")
    return cipher.decrypt(k_e, msg.ciphertext)


def hybrid_receive(msg: HybridMessage, bits_b, code: BlockCode, cipher: Cipher | None = None,
                   mac: Mac | None = None, *, key_len: int, pa_seed: int = 0,
                   digest_bits: int = DIGEST_BITS) -> bytes:
    """Finish key generation from ``msg.syndrome``, verify the tag, then decrypt.

    ``key_len``, ``pa_seed`` and ``digest_bits`` are the public session
    parameters both parties agreed on beforehand.
    """
    if key_len < 2:
        raise DomainError("key_len must be >= 2")
    bob = SkgSession(code, key_len, role="bob", pa_seed=pa_seed, digest_bits=digest_bits)
    bob.load_bits(bits_b)
    return receive_with(bob, msg, cipher, mac)
