"""Command-line experiment runner.

Each subcommand writes one CSV.  Its first line is a ``#`` comment with the
resolved parameters and seed; the second is the column header.  Parameters
come from the subcommand defaults, then ``--config FILE`` (``key=value``
lines), then explicit ``--key value`` flags.

Exit status: 0 on success, 2 on bad usage or configuration, 3 on a runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from plslab import adversary, fblen, secrecy
from plslab.auth import proximity, puf, resumption
from plslab.channel import FadingConfig, RssModel, Rng, measure_rss, probe_pair
from plslab.errors import PlsError
from plslab.scheduler import effcap, partition
from plslab.skg import codes, pipeline

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {s!r}") from None


# --------------------------------------------------------------------------
# experiments: each returns (header, rows)

def run_region(cfg, rng):
    mode = cfg["mode"]
    if mode == "ergodic":
        reg = secrecy.ergodic_region_rayleigh(cfg["snr_bob_db"], cfg["sigma2_eve"], cfg["grid"],
                                              cfg["mc_draws"], rng)
    else:
        bc = secrecy.GaussianBroadcast(cfg["snr_bob_db"], cfg["snr_eve_db"])
        if mode == "static":
            reg = secrecy.broadcast_region(bc, cfg["grid"])
        elif mode == "nonsecret":
            reg = secrecy.broadcast_region_nonsecret(bc, cfg["grid"])
        else:
            raise UsageError("mode must be static, ergodic or nonsecret")
    return ["alpha", "common_rate", "secret_rate"], list(reg.rows())


def run_fblen(cfg, rng):
    kind = cfg["channel"]
    if kind == fblen.AWGN:
        spec = fblen.dispersion(kind, snr=float(secrecy.db_to_linear(cfg["snr_db"])))
    elif kind == fblen.BSC:
        spec = fblen.dispersion(kind, p=cfg["p"])
    elif kind == fblen.SEMI_DETERMINISTIC_WIRETAP:
        spec = fblen.dispersion(kind, p_eve=cfg["p"])
    elif kind == fblen.GAUSSIAN_WIRETAP:
        spec = fblen.dispersion(kind, snr_bob=float(secrecy.db_to_linear(cfg["snr_db"])),
                                snr_eve=float(secrecy.db_to_linear(cfg["snr_eve_db"])))
    else:
        raise UsageError(f"unknown channel {kind!r}")
    rows = []
    delta = cfg["delta"] if spec.is_wiretap else None
    for n in range(cfg["n_min"], cfg["n_max"] + 1, cfg["n_step"]):
        q = fblen.FblenQuery(n, cfg["epsilon"], delta)
        rows.append((n, fblen.rate(spec, q), spec.capacity, spec.dispersion))
    return ["n", "rate", "capacity", "dispersion"], rows


def run_skg_fer(cfg, rng):
    code = codes.make_code(cfg["code"])
    q = pipeline.Quantizer(cfg["levels"], cfg["guard"])
    rows = []
    for snr_db in np.arange(cfg["snr_min_db"], cfg["snr_max_db"] + 1e-9, cfg["snr_step_db"]):
        noise_var = float(10 ** (-snr_db / 10))
        stream = rng.spawn(int(round(snr_db * 1000)) & 0xFFFFFFFF)
        mism = fails = raw = 0
        key_bits = 0
        for _ in range(cfg["sessions"]):
            d = probe_pair(stream, FadingConfig(), noise_var, count=cfg["samples"])
            ba, bb, _ = pipeline.quantize_pair(d.z_a, d.z_b, q)
            usable = ba.size - ba.size % code.n
            ba, bb = ba[:usable], bb[:usable]
            rec = pipeline.reconcile(ba, bb, code)
            mism += int(np.count_nonzero(ba != bb))
            raw += usable
            fails += not rec.success
            key_bits += pipeline.max_key_len(code, usable) if rec.success else 0
        rows.append((float(snr_db), mism / max(raw, 1), fails / cfg["sessions"],
                     key_bits / cfg["sessions"]))
    return ["snr_db", "bit_disagreement", "frame_error_rate", "mean_key_bits"], rows


def run_schedule(cfg, rng):
    base = Rng(rng.seed, 1).uniform(cfg["n"])
    gains = -np.log(1.0 - base)  # mean-one power gains per subcarrier
    snr = float(secrecy.db_to_linear(cfg["snr_db"]))
    rows = []
    for beta in _floats(cfg["betas"]):
        kcap = None if cfg["key_capacity"] < 0 else cfg["key_capacity"]  # -1: channel model
        inst = partition.SchedulerInstance(gains, cfg["P"], beta, cfg["kappa"], snr, kcap)
        for mode, solver in (("parallel", "exact"), ("parallel", "heuristic"),
                             ("sequential", "closed-form")):
            eff, bad = partition.efficiency_details(
                mode, inst, cfg["sessions"], Rng(rng.seed, 2),
                solver="heuristic" if solver == "heuristic" else "exact",
                tolerance=cfg["tolerance"])
            status = "infeasible" if bad == cfg["sessions"] else "ok"
            rows.append((beta, mode, eff, solver, bad, status))
    return ["beta", "mode", "efficiency", "solver", "infeasible_sessions", "status"], rows


def run_effcap(cfg, rng):
    gains = -np.log(1.0 - Rng(rng.seed, 1).uniform(cfg["n"])) * float(
        secrecy.db_to_linear(cfg["snr_db"]))
    rows = []
    for theta in _floats(cfg["thetas"]):
        q = effcap.EffCapQuery(theta, cfg["frame_duration"], cfg["bandwidth"], gains)
        p = effcap.effcap_power_alloc(q, cfg["budget"])
        ec = effcap.effective_capacity(q, p, gains, cfg["mc_draws"], Rng(rng.seed, 2))
        rows.append((theta, q.alpha, ec, ";".join(_fmt(x) for x in p)))
    return ["theta", "alpha", "effective_capacity", "powers"], rows


def run_attack(cfg, rng):
    rows = []
    for cm in (False, True):
        mi = adversary.injection_leakage(cfg["sessions"], Rng(rng.seed, 10), cm,
                                         cfg["noise_var"], cfg["attack_gain"])
        att, shared = adversary.attacker_term_correlation(cfg["sessions"], Rng(rng.seed, 11), cm,
                                                          cfg["noise_var"])
        rows.append(("randomized_probes+post_multiply" if cm else "deterministic_pilots", mi,
                     att, shared))
    return ["scheme", "key_bit_mutual_information", "attacker_term_correlation",
            "observation_correlation"], rows


def run_game(cfg, rng):
    rows = []
    for thr in _floats(cfg["thresholds"]):
        g = adversary.JammingGame(cfg["n"], cfg["p_leg"], cfg["p_jam"], thr, cfg["gain"],
                                  cfg["jam_gain"])
        out = adversary.solve_stackelberg(g)
        rows.append((thr, out.leader_strategy, out.value, len(out.follower_response)))
    return ["threshold", "leader_strategy", "value", "jammed_subcarriers"], rows


def run_auth(cfg, rng):
    code = codes.make_code(cfg["code"])
    trials = cfg["trials"]
    dev = puf.PufDevice.create(Rng(rng.seed, 1), response_noise_std=cfg["noise_std"])
    other = puf.PufDevice.create(Rng(rng.seed, 2), response_noise_std=cfg["noise_std"])
    db = puf.enroll(dev, 2 * trials, code, Rng(rng.seed, 3))
    r = Rng(rng.seed, 4)
    genuine = sum(puf.authenticate(dev, db, code, r)[0] for _ in range(trials))
    impostor = sum(puf.authenticate(other, db, code, r)[0] for _ in range(trials))

    model = RssModel(cfg["pathloss_exponent"], cfg["shadowing_db"])
    claimed = np.zeros(2)
    spoof = np.array([cfg["spoof_distance"], 0.0])
    pr = Rng(rng.seed, 5)
    prox_trials = cfg["proximity_trials"]
    rejects = false_rejects = 0
    for _ in range(prox_trials):
        pos = proximity.probe_positions(claimed, cfg["probe_radius"], cfg["probes"], pr)
        m = measure_rss(pr, spoof, pos, 0.0, model)
        rejects += not proximity.verify_proximity(claimed, m, model, cfg["confidence"])
        m = measure_rss(pr, claimed, pos, 0.0, model)
        false_rejects += not proximity.verify_proximity(claimed, m, model, cfg["confidence"])

    store = resumption.TicketStore(clock=lambda: 0.0)
    kr = Rng(rng.seed, 6)
    t = resumption.issue_ticket(store, kr.bytes(32), kr.bytes(16), now=0.0)
    old = t
    t, _ = resumption.resume_session(t, kr.bytes(16), store, now=1.0)
    _, replay = resumption.resume_session(old, kr.bytes(16), store, now=2.0)
    return ["test", "trials", "rate"], [
        ("puf_genuine_accept", trials, genuine / trials),
        ("puf_impostor_accept", trials, impostor / trials),
        ("proximity_spoof_reject", prox_trials, rejects / prox_trials),
        ("proximity_false_reject", prox_trials, false_rejects / prox_trials),
        ("resumption_replay_reject", 1, float(replay is resumption.Decision.REJECT_REPLAY)),
    ]


def _device(cfg):
    return puf.PufDevice.create(Rng(cfg["device_seed"], 1), response_noise_std=cfg["noise_std"])


def run_enroll(cfg, rng):
    code = codes.make_code(cfg["code"])
    db = puf.enroll(_device(cfg), cfg["n_crps"], code, rng)
    db.save(cfg["db"])
    return ["index", "challenge"], [(i, r.challenge.hex()) for i, r in enumerate(db.records)]


def run_authenticate(cfg, rng):
    code = codes.make_code(cfg["code"])
    db = puf.CrpDatabase.load(cfg["db"])
    rows = []
    try:
        for _ in range(cfg["count"]):
            ok, rec = puf.authenticate(_device(cfg), db, code, rng)
            rows.append((rec.challenge.hex(), ok))
    finally:
        db.save(cfg["db"])
    return ["challenge", "accept"], rows


def run_resume(cfg, rng):
    store = resumption.TicketStore(lifetime=cfg["lifetime"], clock=lambda: 0.0)
    t = resumption.issue_ticket(store, rng.bytes(32), rng.bytes(16), now=0.0)
    history = [t]
    rows = [(0, t.alias_id.hex(), "issued")]
    for step in range(1, cfg["chain"] + 1):
        t, dec = resumption.resume_session(t, rng.bytes(16), store, now=float(step))
        rows.append((step, history[-1].alias_id.hex(), dec.value))
        if t is None:
            break
        history.append(t)
    k = cfg["replay_index"]
    if 0 <= k < len(history) - 1:
        _, dec = resumption.resume_session(history[k], rng.bytes(16), store,
                                           now=float(cfg["chain"] + 1))
        rows.append(("replay", history[k].alias_id.hex(), dec.value))
    return ["step", "alias_id", "decision"], rows


# --------------------------------------------------------------------------

COMMANDS = {
    "region": (run_region, dict(mode="static", snr_bob_db=10.0, snr_eve_db=5.0, sigma2_eve=1.0,
                                grid=21, mc_draws=100000)),
    "fblen": (run_fblen, dict(channel="awgn", snr_db=0.0, snr_eve_db=-3.0, p=0.11,
                              epsilon=1e-3, delta=1e-2, n_min=100, n_max=4000, n_step=100)),
    "skg-fer": (run_skg_fer, dict(code="hamming7", levels=2, guard=0.1, samples=700,
                                  sessions=50, snr_min_db=10.0, snr_max_db=30.0,
                                  snr_step_db=5.0)),
    "schedule": (run_schedule, dict(n=64, snr_db=10.0, kappa=2.0, P=1.0, key_capacity=-1.0,
                                    betas="0.25,0.5,0.75,1.0", sessions=10, tolerance=1e-2)),
    "effcap": (run_effcap, dict(n=8, snr_db=10.0, budget=8.0, frame_duration=1e-3,
                                bandwidth=1e3, thetas="0,0.01,0.1,1,10", mc_draws=20000)),
    "attack": (run_attack, dict(sessions=20000, noise_var=0.01, attack_gain=4.0)),
    "game": (run_game, dict(n=4, p_leg=1.0, p_jam=4.0, gain=1.0, jam_gain=1.0,
                            thresholds="0,0.25,0.5,0.75,1,1.5")),
    "auth": (run_auth, dict(code="hamming7", trials=500, noise_std=0.01, pathloss_exponent=3.0,
                            shadowing_db=2.0, spoof_distance=50.0, probe_radius=20.0, probes=8,
                            confidence=0.95, proximity_trials=200)),
    "enroll": (run_enroll, dict(db="crp.tsv", n_crps=100, device_seed=1, noise_std=0.01,
                                code="hamming7")),
    "authenticate": (run_authenticate, dict(db="crp.tsv", device_seed=1, noise_std=0.01,
                                            code="hamming7", count=1)),
    "resume": (run_resume, dict(chain=10, replay_index=3, lifetime=3600.0)),
}


def _convert(key, raw, default):
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None
    return raw


def read_config(path, defaults) -> dict:
    out = {}
    for no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "seed":
            out["seed"] = _convert(key, val, 0)
            continue
        if key not in defaults:
            raise UsageError(f"{path}:{no}: unknown config key {key!r}")
        out[key] = _convert(key, val, defaults[key])
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plslab", description="Physical-layer security experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, defaults) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default="-", help="CSV path, '-' for stdout")
        sp.add_argument("--config", default=None, help="key=value parameter file")
        for key, val in defaults.items():
            # values are strings here; conversion happens after config merging
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            metavar=type(val).__name__.upper())
    return ap


def resolve(args) -> tuple[dict, int]:
    defaults = COMMANDS[args.command][1]
    cfg = dict(defaults)
    seed = 0
    if args.config:
        from_file = read_config(args.config, defaults)
        seed = from_file.pop("seed", seed)
        cfg.update(from_file)
    for key, default in defaults.items():
        raw = getattr(args, key)
        if raw is not None:
            cfg[key] = _convert(key, raw, default)
    if args.seed is not None:
        seed = args.seed
    if seed < 0:
        raise UsageError("seed must be >= 0")
    return cfg, seed


def render_csv(command, cfg, seed, header, rows) -> str:
    buf = io.StringIO()
    params = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(cfg.items()))
    buf.write(f"# plslab {command} seed={seed} {params}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        cfg, seed = resolve(args)
        func = COMMANDS[args.command][0]
        header, rows = func(cfg, Rng(seed, 0))
    except (UsageError, OSError) as e:
        print(f"plslab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PlsError, ValueError) as e:
        print(f"plslab: {args.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    text = render_csv(args.command, cfg, seed, header, rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
