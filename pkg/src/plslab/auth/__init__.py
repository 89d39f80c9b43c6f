"""Keyless authentication: PUF challenge-response, RSS proximity, ticket resumption."""

from plslab.auth.proximity import ProximityResult, fit_transmitter, proximity_test, verify_proximity
from plslab.auth.puf import CrpDatabase, CrpRecord, PufDevice, authenticate, enroll
from plslab.auth.resumption import (
    Decision,
    SessionTicket,
    TicketStore,
    issue_ticket,
    kdf,
    next_secret,
    resume_session,
)

__all__ = [
    "ProximityResult", "fit_transmitter", "proximity_test", "verify_proximity",
    "CrpDatabase", "CrpRecord", "PufDevice", "authenticate", "enroll",
    "Decision", "SessionTicket", "TicketStore", "issue_ticket", "kdf", "next_secret",
    "resume_session",
]
