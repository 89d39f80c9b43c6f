"""Zero-round-trip session resumption with SKG-refreshed secrets.

Every resumption mixes a fresh SKG key into the resumption secret, so
knowing an old secret is not enough to compute the next one.  Tickets are
addressed by one-time alias ids held in a :class:`TicketStore`.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import time
from dataclasses import dataclass, field

from plslab.errors import DomainError

ALIAS_BYTES = 16
DEFAULT_LIFETIME = 3600.0


def kdf(key: bytes, info: bytes, length: int = 32) -> bytes:
    """HMAC-SHA256 keyed derivation; lengths above 32 bytes are not needed here."""
    if not 1 <= length <= 32:
        raise DomainError("kdf length must be 1..32 bytes")
    return hmac.new(bytes(key), bytes(info), hashlib.sha256).digest()[:length]


def next_secret(resumption_secret: bytes, fresh_skg_key: bytes) -> bytes:
    return kdf(fresh_skg_key, resumption_secret + b"resumption")


def alias_for(secret: bytes) -> bytes:
    return kdf(secret, b"alias", ALIAS_BYTES)


class Decision(enum.Enum):
    ACCEPT = "accept"
    REJECT_EXPIRED = "reject_expired"
    REJECT_REPLAY = "reject_replay"
    REJECT_UNKNOWN = "reject_unknown"


@dataclass(frozen=True)
class SessionTicket:
    alias_id: bytes
    resumption_secret: bytes = field(repr=False)
    skg_key: bytes = field(repr=False)
    expiry: float

    def __repr__(self) -> str:
        # secrets never appear in logs
        return f"SessionTicket(alias_id={self.alias_id.hex()}, expiry={self.expiry})"


class TicketStore:
    """Server state: live tickets by alias, plus every alias already spent."""

    def __init__(self, lifetime: float = DEFAULT_LIFETIME, clock=time.monotonic):
        self.lifetime = lifetime
        self.clock = clock
        self._live: dict[bytes, SessionTicket] = {}
        self._spent: set[bytes] = set()

    def __contains__(self, alias: bytes) -> bool:
        return alias in self._live

    def issue(self, resumption_secret: bytes, skg_key: bytes, now: float | None = None) -> SessionTicket:
        now = self.clock() if now is None else now
        alias = alias_for(resumption_secret)
        if alias in self._spent or alias in self._live:
            raise DomainError("alias collision: resumption secret reused")
        t = SessionTicket(alias, resumption_secret, skg_key, now + self.lifetime)
        self._live[alias] = t
        return t

    def check(self, alias: bytes, now: float) -> Decision:
        if alias in self._spent:
            return Decision.REJECT_REPLAY
        t = self._live.get(alias)
        if t is None:
            return Decision.REJECT_UNKNOWN
        if now > t.expiry:
            return Decision.REJECT_EXPIRED
        return Decision.ACCEPT

    def spend(self, alias: bytes):
        self._live.pop(alias, None)
        self._spent.add(alias)


def issue_ticket(store: TicketStore, master_secret: bytes, skg_key: bytes,
                 now: float | None = None) -> SessionTicket:
    """First ticket after a full handshake."""
    return store.issue(next_secret(master_secret, skg_key), skg_key, now)


def resume_session(ticket: SessionTicket, fresh_skg_key: bytes, store: TicketStore,
                   now: float | None = None):
    """Redeem ``ticket`` and chain a new one keyed by ``fresh_skg_key``.

    Returns ``(new_ticket or None, Decision)``.  The server looks the alias up
    in its own store; a ticket whose secret does not match the stored one is
    treated as unknown.
    """
    now = store.clock() if now is None else now
    decision = store.check(ticket.alias_id, now)
    if decision is Decision.ACCEPT:
        stored = store._live[ticket.alias_id]
        if not hmac.compare_digest(stored.resumption_secret, ticket.resumption_secret):
            return None, Decision.REJECT_UNKNOWN
    if decision is not Decision.ACCEPT:
        if decision is Decision.REJECT_EXPIRED:
            store.spend(ticket.alias_id)
        return None, decision
    store.spend(ticket.alias_id)
    secret = next_secret(ticket.resumption_secret, fresh_skg_key)
    return store.issue(secret, fresh_skg_key, now), Decision.ACCEPT
