"""Numbered acceptance criteria, one test each, with wall-clock budgets.

Every test prints one ``PASS``/``FAIL`` line; the lines are also repeated in
the pytest terminal summary.  Run alone with ``pytest tests/test_acceptance.py``.
"""

import functools
import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from plslab import fblen
from plslab.adversary import (BELOW_THRESHOLD, FULL_POWER, InjectionScenario, JammingGame,
                              attacker_term_correlation, build_precoder, follower_deviations,
                              injection_signal, solve_stackelberg)
from plslab.auth import (PufDevice, TicketStore, authenticate, enroll, issue_ticket,
                         resume_session, verify_proximity)
from plslab.auth.proximity import probe_positions
from plslab.auth.resumption import Decision
from plslab.channel import FadingConfig, Rng, RssModel, measure_rss, probe_pair
from plslab.cli import main
from plslab.errors import ExhaustedError
from plslab.scheduler import (EffCapQuery, SchedulerInstance, effcap_power_alloc, efficiency,
                              solve_exact)
from plslab.secrecy import GaussianBroadcast, ergodic_region_rayleigh, secrecy_capacity_gaussian
from plslab.skg import Quantizer, hamming_code, privacy_amplify, run_skg


def criterion(number, title, budget_s):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            status, detail = "PASS", ""
            try:
                fn(*args, **kwargs)
            except BaseException as e:
                status, detail = "FAIL", f" ({type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''})"
                raise
            finally:
                dt = time.perf_counter() - t0
                if status == "PASS" and dt > budget_s:
                    status, detail = "FAIL", f" (over budget {budget_s:g} s)"
                line = f"{status} AC{number:>2} {title} [{dt:.2f} s / {budget_s:g} s]{detail}"
                ACCEPTANCE_LINES.append(line)
                print(line)
            assert dt <= budget_s, f"took {dt:.1f} s, budget {budget_s} s"
        return run
    return wrap


@criterion(1, "secrecy-capacity anchors", 1)
def test_ac01_secrecy_anchors():
    assert secrecy_capacity_gaussian(GaussianBroadcast(4.0, 4.0)) == 0.0
    bsc = fblen.dispersion(fblen.SEMI_DETERMINISTIC_WIRETAP, p_eve=0.11)
    assert abs(bsc.capacity - 0.5) < 1e-3
    # real-valued channel: half the complex-baseband value
    gw = fblen.dispersion(fblen.GAUSSIAN_WIRETAP, snr_bob=10 ** 0.3, snr_eve=10 ** -0.3)
    assert abs(gw.capacity - 0.5) < 1e-2
    complex_cs = secrecy_capacity_gaussian(GaussianBroadcast(3.0, -3.0))
    assert gw.capacity == pytest.approx(complex_cs / 2, abs=1e-12)


@criterion(2, "fading secrecy advantage at equal SNR", 10)
def test_ac02_fading_advantage():
    reg = ergodic_region_rayleigh(5.0, 1.0, 11, 100_000, Rng(2))
    assert reg.points[0].secret_rate > 0.05
    assert secrecy_capacity_gaussian(GaussianBroadcast(5.0, 5.0)) == 0.0


@criterion(3, "normal approximation behaviour", 1)
def test_ac03_normal_approximation():
    for spec in (fblen.dispersion(fblen.AWGN, snr=1.0), fblen.dispersion(fblen.BSC, p=0.11)):
        rates = np.array([fblen.rate(spec, fblen.FblenQuery(n, 1e-3)) for n in range(100, 4001, 100)])
        assert np.all(rates < spec.capacity)
        assert np.all(np.diff(rates) > 0)
        assert fblen.rate(spec, fblen.FblenQuery(10 ** 6, 1e-3)) == pytest.approx(spec.capacity, rel=1e-2)
    wt = fblen.dispersion(fblen.SEMI_DETERMINISTIC_WIRETAP, p_eve=0.11)
    for n in (100, 1000, 10_000):
        assert fblen.rate(wt, fblen.FblenQuery(n, 1e-3, 1e-2)) < wt.capacity


@criterion(4, "dispersion against information-density sampling", 30)
def test_ac04_dispersion_oracle():
    for snr in (0.5, 1.0, 10.0):
        _, var = oracles.info_density_variance_awgn(snr, 1_000_000, seed=4)
        assert fblen.dispersion(fblen.AWGN, snr=snr).dispersion == pytest.approx(var, rel=0.02)
    for p in (0.05, 0.11, 0.3):
        _, var = oracles.info_density_variance_bsc(p, 1_000_000, seed=4)
        assert fblen.dispersion(fblen.BSC, p=p).dispersion == pytest.approx(var, rel=0.02)


@criterion(5, "exact scheduler equals brute force on 1000 instances", 60)
def test_ac05_scheduler_optimality():
    worst = 0.0
    for seed in range(1000):
        r = np.random.default_rng(10_000 + seed)
        n = int(r.integers(1, 13))
        inst = SchedulerInstance(r.exponential(size=n) + 1e-3, P=float(r.uniform(0.5, 2)),
                                 beta=float(r.uniform(0.05, 1)), kappa=float(r.uniform(0.1, 3)),
                                 snr_scale=float(10 ** r.uniform(-1, 2)))
        value, _ = oracles.brute_force_partition(inst.gains, inst.P, inst.beta, inst.kappa,
                                                 inst.snr_scale)
        plan = solve_exact(inst)
        gap = value - plan.c_d
        assert -1e-9 <= gap <= plan.extra["step"] * inst.N + 1e-9, (seed, gap)
        worst = max(worst, gap)
    assert worst <= 1e-3


@criterion(6, "efficiency comparison at N=64, SNR 10 dB, kappa 2", 120)
def test_ac06_fig13():
    gains = np.ones(64)
    betas = (0.25, 0.5, 0.75, 1.0)
    sessions, tol = 8, 1e-2
    par, heur, seq = [], [], []
    for b in betas:
        inst = SchedulerInstance(gains, P=1.0, beta=b, kappa=2.0, snr_scale=10.0)
        par.append(efficiency("parallel", inst, sessions, Rng(6), "exact", tol))
        heur.append(efficiency("parallel", inst, sessions, Rng(6), "heuristic", tol))
        seq.append(efficiency("sequential", inst, sessions, Rng(6)))
    par, heur, seq = map(np.array, (par, heur, seq))
    assert np.all(par >= seq - 0.01)
    assert np.all(np.diff(par) <= 0) and par[-1] < par[0]
    assert np.all(np.abs(heur - par) <= 0.02 * par)


@criterion(7, "delay-aware allocation limits", 1)
def test_ac07_effcap_limits():
    g = np.array([0.2, 0.7, 1.5, 3.0, 6.0, 0.05])
    p0 = effcap_power_alloc(EffCapQuery(0.0, 1e-3, 1e3, g), 4.0)
    assert np.allclose(p0, oracles.water_fill_bisect(g, 4.0), atol=1e-6)
    pinf = effcap_power_alloc(EffCapQuery.from_alpha(1e9, g), 4.0)
    target = (1 / g) / (1 / g).sum() * 4.0
    assert np.all(np.abs(pinf - target) <= 1e-4 * target)


@criterion(8, "injection precoder identity and countermeasure", 30)
def test_ac08_injection():
    r = Rng(8)
    h_a, h_b = r.complex_normal(1.0, (10_000, 2)), r.complex_normal(1.0, (10_000, 2))
    p = build_precoder(h_a, h_b)
    wa, wb = np.sum(h_a * p, axis=1), np.sum(h_b * p, axis=1)
    assert np.max(np.abs(wa - wb) / np.abs(wa)) <= 1e-12
    for k in range(5):
        scn = InjectionScenario.random(r.spawn(100 + k))
        att, shared = attacker_term_correlation(100_000, r.spawn(200 + k), True, 0.01, scn)
        w = abs(injection_signal(scn)[0]) ** 2
        h = abs(scn.h_ab) ** 2
        assert att < 0.01
        assert shared == pytest.approx(h / (h + w + 0.01), abs=0.02) and shared > 0


@criterion(9, "Stackelberg equilibrium and regimes", 30)
def test_ac09_game():
    for seed in range(200):
        r = np.random.default_rng(9000 + seed)
        g = JammingGame(int(r.integers(1, 9)), float(r.uniform(0.1, 3)), float(r.uniform(0.1, 10)),
                        float(r.uniform(0, 3)), float(r.uniform(0.2, 3)), float(r.uniform(0.2, 3)))
        out = solve_stackelberg(g)
        tol = 1e-12 * max(1.0, out.value)
        for dev in follower_deviations(g, out.leader_strategy):
            assert g.leader_payoff(out.leader_strategy, dev) >= out.value - tol
        for s in (BELOW_THRESHOLD, FULL_POWER):
            reply = min(follower_deviations(g, s), key=lambda d: g.leader_payoff(s, d))
            assert g.leader_payoff(s, reply) <= out.value + tol
        for k in range(g.n_subcarriers + 1):
            assert g.payoff[1, k] == pytest.approx(
                oracles.jam_payoff(g.n_subcarriers, g.p_leg, g.gain, g.p_jam, g.jam_gain, k),
                rel=1e-12)
    hide = solve_stackelberg(JammingGame(4, 1.0, 4.0, 2.0))
    jammed = solve_stackelberg(JammingGame(4, 1.0, 0.2, 0.25))
    forced = solve_stackelberg(JammingGame(4, 1.0, 4.0, 0.0))
    assert hide.leader_strategy == BELOW_THRESHOLD and hide.follower_response == ()
    assert jammed.leader_strategy == FULL_POWER and jammed.follower_response == (0, 1, 2, 3)
    assert jammed.value > jammed.candidates[BELOW_THRESHOLD] > 0
    assert forced.leader_strategy == FULL_POWER and forced.candidates[BELOW_THRESHOLD] == 0.0


@criterion(10, "key generation end to end", 60)
def test_ac10_skg():
    code, q = hamming_code(3), Quantizer(2, 0.1)
    agreed = 0
    for i in range(2000):
        d = probe_pair(Rng(i, 10), FadingConfig(), 1e-4, count=280)
        alice, bob, ok = run_skg(d.z_a, d.z_b, q, code)
        agreed += ok
    assert agreed / 2000 >= 0.99
    undetected = 0
    for i in range(10_000):
        d = probe_pair(Rng(i, 11), FadingConfig(), 0.01, count=280)
        alice, bob, ok = run_skg(d.z_a, d.z_b, q, code)
        if ok:
            undetected += not np.array_equal(alice.key, bob.key)
        else:
            assert alice.state == bob.state == "aborted"
    assert undetected == 0
    n, m, t = 10_000, 128, 48
    r = Rng(12)
    keys = np.array([privacy_amplify(r.bits(m), 40, t, seed=i) for i in range(n)])
    lo, hi = oracles.monobit_bounds(n)
    ones = keys.sum(axis=0)
    assert np.all((ones >= lo) & (ones <= hi))


@criterion(11, "authentication suite", 60)
def test_ac11_auth():
    from test_auth import TestCrpSingleUse
    code = hamming_code(3)
    dev = PufDevice.create(Rng(110), response_noise_std=0.01)
    other = PufDevice.create(Rng(111), response_noise_std=0.01)
    db = enroll(dev, 2000, code, Rng(112))
    r = Rng(113)
    genuine = np.mean([authenticate(dev, db, code, r)[0] for _ in range(1000)])
    impostor = np.mean([authenticate(other, db, code, r)[0] for _ in range(1000)])
    assert genuine >= 0.99 and impostor <= 0.01
    with pytest.raises(ExhaustedError):
        db.records[next(i for i, x in enumerate(db.records) if x.used)].mark_used()
    TestCrpSingleUse().runTest()

    store = TicketStore()
    tickets = [issue_ticket(store, b"master", b"k0", now=0.0)]
    for i in range(1, 5):
        t, d = resume_session(tickets[-1], b"k%d" % i, store, now=float(i))
        assert d is Decision.ACCEPT
        tickets.append(t)
    assert resume_session(tickets[2], b"x", store, now=9.0)[1] is Decision.REJECT_REPLAY

    model = RssModel(3.0, 2.0)
    pr = Rng(114)
    rejects = 0
    for _ in range(400):
        pos = probe_positions([0, 0], 20.0, 8, pr)
        rejects += not verify_proximity([0, 0], measure_rss(pr, [50.0, 0.0], pos, 0.0, model),
                                        model, 0.95)
    assert rejects / 400 >= 0.95


@criterion(12, "CLI determinism", 120)
def test_ac12_cli_determinism(tmp_path):
    from plslab.cli import COMMANDS
    db = str(tmp_path / "crp.tsv")
    for cmd in COMMANDS:
        extra = ["--db", db] if cmd in ("enroll", "authenticate") else []
        if cmd == "authenticate":
            assert main(["enroll", "--out", str(tmp_path / "e.csv")] + extra) == 0
            snapshot = (tmp_path / "crp.tsv").read_bytes()
        outs = []
        for k in range(2):
            if cmd == "authenticate":
                (tmp_path / "crp.tsv").write_bytes(snapshot)
            out = tmp_path / f"{cmd}-{k}.csv"
            assert main([cmd, "--seed", "12", "--out", str(out)] + extra) == 0, cmd
            outs.append(out.read_bytes())
        assert outs[0] == outs[1], cmd
