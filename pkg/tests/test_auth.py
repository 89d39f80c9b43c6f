import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule
from scipy import integrate, stats

from plslab.auth import (CrpDatabase, Decision, PufDevice, TicketStore, authenticate, enroll,
                         fit_transmitter, issue_ticket, kdf, next_secret, proximity_test,
                         resume_session, verify_proximity)
from plslab.auth.proximity import probe_positions
from plslab.auth.resumption import alias_for
from plslab.channel import Rng, RssModel, measure_rss
from plslab.errors import DomainError, ExhaustedError, GeometryError
from plslab.skg.codes import make_code

CODE = make_code("hamming7")


def device(seed, noise=0.01):
    return PufDevice.create(Rng(seed), response_noise_std=noise)


# -- PUF --------------------------------------------------------------------

def test_enroll_hundred_unique_unused():
    db = enroll(device(1), 100, CODE, Rng(2))
    assert len(db) == 100 and len(db.challenges()) == 100
    assert len(db.unused()) == 100
    assert all(r.helper_data.size == 8 * 3 for r in db.records)


def test_enroll_validation():
    with pytest.raises(DomainError):
        enroll(device(1), 0, CODE, Rng(0))
    with pytest.raises(DomainError):
        enroll(PufDevice.create(Rng(0), n_bits=10), 3, CODE, Rng(0))


def test_noiseless_verification_exact():
    dev = device(1, noise=0.0)
    db = enroll(dev, 20, CODE, Rng(2))
    assert all(r.helper_data.size for r in db.records)
    r = Rng(3)
    assert all(authenticate(dev, db, CODE, r)[0] for _ in range(20))


class RepeatingRng(Rng):
    """Hands out the same challenge twice before moving on."""

    def __init__(self):
        super().__init__(0)
        self._calls = 0

    def bytes(self, n):
        self._calls += 1
        return bytes([(1, 1, 2)[self._calls - 1]]) * n


def test_duplicate_challenge_redrawn():
    rng = RepeatingRng()
    db = enroll(device(1), 2, CODE, rng)
    assert rng._calls == 3 and len(db.challenges()) == 2


def test_fingerprint_immutable():
    dev = device(4)
    with pytest.raises(ValueError):
        dev.fingerprint[0] = 1.0


def test_response_differs_only_by_noise():
    dev = device(4, noise=0.0)
    ch = b"x" * 16
    assert np.array_equal(dev.response(ch, Rng(1)), dev.response(ch, Rng(2)))


def flip_probability(sigma):
    """P[sign(v + s z1) != sign(v + s z2)], v ~ N(0,1), by quadrature."""
    def integrand(v):
        q = stats.norm.cdf(-abs(v) / sigma)
        return 2 * q * (1 - q) * stats.norm.pdf(v)
    return integrate.quad(integrand, -10, 10, points=[0], limit=200)[0]


def genuine_accept_oracle(sigma, blocks=8, n=7):
    p = flip_probability(sigma)
    ok = (1 - p) ** n + n * p * (1 - p) ** (n - 1)
    return ok ** blocks


def test_genuine_and_impostor_rates():
    dev, other = device(10), device(11)
    db = enroll(dev, 2000, CODE, Rng(12))
    r = Rng(13)
    genuine = np.mean([authenticate(dev, db, CODE, r)[0] for _ in range(1000)])
    impostor = np.mean([authenticate(other, db, CODE, r)[0] for _ in range(1000)])
    expect = genuine_accept_oracle(0.01)
    assert genuine >= 0.99
    assert abs(genuine - expect) <= 4 * math.sqrt(expect * (1 - expect) / 1000) + 1e-3
    # impostor: each block lands in the right coset ball with prob 8/128
    assert (1 / 16) ** 8 < 1e-9
    assert impostor <= 0.01


def test_replay_rejected_and_exhaustion():
    dev = device(1)
    db = enroll(dev, 3, CODE, Rng(2))
    r = Rng(3)
    _, rec = authenticate(dev, db, CODE, r)
    with pytest.raises(ExhaustedError):
        rec.mark_used()
    authenticate(dev, db, CODE, r)
    authenticate(dev, db, CODE, r)
    with pytest.raises(ExhaustedError, match="database exhausted"):
        authenticate(dev, db, CODE, r)


def test_database_round_trip(tmp_path):
    dev = device(1)
    db = enroll(dev, 10, CODE, Rng(2))
    authenticate(dev, db, CODE, Rng(3))
    path = tmp_path / "crp.tsv"
    db.save(path)
    back = CrpDatabase.load(path)
    assert back.to_text() == db.to_text()
    assert [r.used for r in back.records] == [r.used for r in db.records]
    for a, b in zip(back.records, db.records):
        assert a.challenge == b.challenge
        assert np.array_equal(a.enrolled_response, b.enrolled_response)


@pytest.mark.parametrize("text", ["", "nope\n", "# plslab-crp v1\nchallenge\tresponse\thelper\tused\nab\t01\n",
                                  "# plslab-crp v1\nchallenge\tresponse\thelper\tused\nab\t012\t0\t0\n"])
def test_database_rejects_garbage(text):
    with pytest.raises((DomainError, ValueError)):
        CrpDatabase.from_text(text)


def test_rates_monotone_in_noise():
    grid = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4]
    frr, far = [], []
    for s in grid:
        dev = PufDevice.create(Rng(20), response_noise_std=s)
        other = PufDevice.create(Rng(21), response_noise_std=s)
        db = enroll(dev, 600, CODE, Rng(22))
        r = Rng(23)
        frr.append(1 - np.mean([authenticate(dev, db, CODE, r)[0] for _ in range(300)]))
        far.append(np.mean([authenticate(other, db, CODE, r)[0] for _ in range(300)]))
    assert all(b >= a for a, b in zip(frr, frr[1:]))
    assert frr[0] == 0 and frr[-1] > 0.5
    assert all(b >= a - 1e-12 for a, b in zip(far, far[1:]))


class CrpMachine(RuleBasedStateMachine):
    def __init__(self):
        super().__init__()
        self.dev = device(5)
        self.db = enroll(self.dev, 6, CODE, Rng(6))
        self.rng = Rng(7)
        self.seen = set()

    @precondition(lambda self: self.db.unused())
    @rule()
    def auth(self):
        _, rec = authenticate(self.dev, self.db, CODE, self.rng)
        assert rec.challenge not in self.seen
        self.seen.add(rec.challenge)

    @precondition(lambda self: not self.db.unused())
    @rule()
    def exhausted(self):
        with pytest.raises(ExhaustedError):
            authenticate(self.dev, self.db, CODE, self.rng)

    @rule(i=st.integers(0, 5))
    def replay(self, i):
        rec = self.db.records[i]
        if rec.used:
            with pytest.raises(ExhaustedError):
                rec.mark_used()

    @invariant()
    def used_matches_consumed(self):
        assert {r.challenge for r in self.db.records if r.used} == self.seen


TestCrpSingleUse = CrpMachine.TestCase
TestCrpSingleUse.settings = settings(max_examples=40, stateful_step_count=15, deadline=None)


# -- proximity ----------------------------------------------------------------

def test_noiseless_fit_exact():
    model = RssModel(3.0, 0.0)
    tx = np.array([3.0, -2.0])
    pos = probe_positions([0, 0], 10.0, 4)
    m = measure_rss(Rng(0), tx, pos, 0.0, model)
    assert np.linalg.norm(fit_transmitter(m, model) - tx) < 1e-6
    assert verify_proximity(tx, m, model, 0.95)


def test_geometry_errors():
    model = RssModel(3.0, 2.0)
    two = measure_rss(Rng(0), [0, 0], [[1, 0], [0, 1]], 0.0, model)
    with pytest.raises(GeometryError, match="geometry insufficient"):
        verify_proximity([0, 0], two, model)
    line = measure_rss(Rng(0), [0, 5], [[1, 0], [2, 0], [3, 0], [4, 0]], 0.0, model)
    with pytest.raises(GeometryError, match="geometry insufficient"):
        verify_proximity([0, 0], line, model)
    dup = measure_rss(Rng(0), [0, 5], [[1, 0], [1, 0], [2, 1]], 0.0, model)
    with pytest.raises(GeometryError):
        verify_proximity([0, 0], dup, model)
    with pytest.raises(DomainError):
        proximity_test([0, 0], two + two[:1], model, confidence=1.0)


def test_spoofer_rejected():
    model = RssModel(3.0, 2.0)
    r = Rng(30)
    rejects = 0
    for _ in range(400):
        pos = probe_positions([0, 0], 20.0, 8, r)
        m = measure_rss(r, [50.0, 0.0], pos, 0.0, model)
        rejects += not verify_proximity([0, 0], m, model, 0.95)
    assert rejects / 400 >= 0.95


@pytest.mark.parametrize("c", [0.9, 0.95, 0.99])
def test_calibration(c):
    model = RssModel(3.0, 2.0)
    r = Rng(31)
    trials = 600
    fr = 0
    for _ in range(trials):
        pos = probe_positions([0, 0], 20.0, 8, r)
        fr += not verify_proximity([0, 0], measure_rss(r, [0.0, 0.0], pos, 0.0, model), model, c)
    assert fr / trials <= 1.5 * (1 - c)


# -- resumption -----------------------------------------------------------------

def test_kdf_is_hmac():
    import hashlib
    import hmac
    assert kdf(b"k", b"info") == hmac.new(b"k", b"info", hashlib.sha256).digest()
    with pytest.raises(DomainError):
        kdf(b"k", b"i", 0)


def chain(n, seed=b"master", now=0.0):
    store = TicketStore(lifetime=100.0)
    t = issue_ticket(store, seed, b"skg-0", now)
    tickets = [t]
    for i in range(1, n):
        t, d = resume_session(t, f"skg-{i}".encode(), store, now)
        assert d is Decision.ACCEPT
        tickets.append(t)
    return store, tickets


def test_chain_of_ten():
    _, tickets = chain(10)
    assert len({t.alias_id for t in tickets}) == 10


def test_replay_after_next_issued():
    store, tickets = chain(5)
    t, d = resume_session(tickets[2], b"x", store, 0.0)
    assert t is None and d is Decision.REJECT_REPLAY


def test_expired_and_unknown_distinct():
    store = TicketStore(lifetime=10.0)
    t = issue_ticket(store, b"m", b"k", now=0.0)
    assert resume_session(t, b"k2", store, now=11.0) == (None, Decision.REJECT_EXPIRED)
    assert resume_session(t, b"k2", store, now=1.0)[1] is Decision.REJECT_REPLAY
    other = TicketStore()
    stranger = issue_ticket(other, b"m2", b"k", now=0.0)
    assert resume_session(stranger, b"k2", store, now=1.0)[1] is Decision.REJECT_UNKNOWN
    assert len({Decision.REJECT_EXPIRED, Decision.REJECT_REPLAY, Decision.REJECT_UNKNOWN}) == 3


def test_forged_secret_rejected():
    from dataclasses import replace
    store = TicketStore()
    t = issue_ticket(store, b"m", b"k", now=0.0)
    forged = replace(t, resumption_secret=b"\0" * 32)
    assert resume_session(forged, b"k2", store, 0.0)[1] is Decision.REJECT_UNKNOWN


def test_repr_hides_secrets():
    store = TicketStore()
    t = issue_ticket(store, b"m", b"secret-skg", now=0.0)
    assert t.resumption_secret.hex() not in repr(t) and "secret-skg" not in repr(t)


def test_clock_used_when_now_missing():
    clock = iter([0.0, 5.0, 500.0]).__next__
    store = TicketStore(lifetime=100.0, clock=clock)
    t = issue_ticket(store, b"m", b"k")
    t2, d = resume_session(t, b"k2", store)
    assert d is Decision.ACCEPT
    assert resume_session(t2, b"k3", store)[1] is Decision.REJECT_EXPIRED


def test_toy_keyspace_forward_secrecy():
    # knowing secret k leaves all 2^16 toy SKG keys equally plausible for k+1
    secret_k = next_secret(b"master", b"\x12\x34")
    true_key = b"\xbe\xef"
    target = next_secret(secret_k, true_key)
    candidates = [next_secret(secret_k, i.to_bytes(2, "big")) for i in range(1 << 16)]
    assert len(set(candidates)) == 1 << 16
    assert candidates.count(target) == 1
    assert alias_for(target) != alias_for(secret_k)


def test_thousand_distinct_and_deterministic():
    _, a = chain(1000)
    _, b = chain(1000)
    assert len({t.resumption_secret for t in a}) == 1000
    assert [t.resumption_secret for t in a] == [t.resumption_secret for t in b]
