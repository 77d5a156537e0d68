"""End-to-end checks of the command-line tool: exit codes, output layout, and
the compare summary recomputed from the raw CSVs."""

import csv
import hashlib
import json
import math
import os
import statistics
import subprocess
import sys
import tempfile
from pathlib import Path

CLI = sys.argv[1]
CONFIG = Path(sys.argv[2])
failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def cli(*args, env=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=env)


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def summarize(csv_paths):
    by_policy = {}
    for path in csv_paths:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        active = [r for r in rows if int(r["active_vehicles"]) > 0]
        reg = float(rows[-1]["cum_regret_bits"]) if rows else 0.0
        rate = (sum(float(r["total_rate_bps"]) / int(r["active_vehicles"]) for r in active) / len(active)
                if active else 0.0)
        ho = sum(float(r["handover_rate"]) for r in active) / len(active) if active else 0.0
        by_policy.setdefault(rows[0]["policy"], []).append((reg, rate, ho))
    out = {}
    for policy, runs in by_policy.items():
        def stat(k):
            xs = [r[k] for r in runs]
            return statistics.mean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)
        out[policy] = {"runs": len(runs), "final_regret_bits": stat(0), "per_vehicle_rate_bps": stat(1),
                       "handover_rate": stat(2)}
    return out


def same_summary(got, expected):
    if set(got) != set(expected):
        return False
    for policy, e in expected.items():
        g = got[policy]
        if g["runs"] != e["runs"]:
            return False
        for key in ("final_regret_bits", "per_vehicle_rate_bps", "handover_rate"):
            if not (close(g[key]["mean"], e[key][0]) and close(g[key]["std"], e[key][1])):
                return False
    return True


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    r = cli()
    check(r.returncode == 1, "no subcommand exits 1")
    r = cli("frobnicate")
    check(r.returncode == 1 and "run" in (r.stdout + r.stderr), "unknown subcommand exits 1 with usage")
    r = cli("run", "--config", CONFIG, "--seed", "x", "--out", tmp / "bad")
    check(r.returncode == 1, "non-numeric seed exits 1")

    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"scenario": {"preset": "desk"}, "policy": "sd_cc_ucb", "zeta": 1.2}))
    r = cli("run", "--config", bad, "--seed", 1, "--out", tmp / "bad")
    check(r.returncode == 2 and "zeta" in r.stderr, "zeta = 1.2 exits 2 naming the key")
    r = cli("run", "--config", tmp / "missing.json", "--seed", 1, "--out", tmp / "bad")
    check(r.returncode == 2, "missing config exits 2")
    r = cli("snapshot", "--in", tmp / "nowhere", "--out", tmp / "s.json")
    check(r.returncode == 3, "missing snapshot input exits 3")

    run_dir = tmp / "run"
    r = cli("run", "--config", CONFIG, "--seed", 4, "--out", run_dir, "--horizon", 100)
    check(r.returncode == 0, "run exits 0")
    stem = run_dir / "sd_cc_ucb_seed4"
    csv_path = stem.with_suffix(".csv")
    lines = csv_path.read_text().splitlines() if csv_path.exists() else []
    check(len(lines) == 101, "run CSV has header plus 100 rows")
    check(lines and lines[0].startswith("period,policy,seed,active_vehicles"), "CSV header")
    meta = json.loads((run_dir / "sd_cc_ucb_seed4.meta.json").read_text())
    echo = json.loads((run_dir / "effective_config.json").read_text())
    check(meta["config_hash"] == echo["config_hash"], "meta and effective config agree on the hash")
    check(meta["oracle_csi"] == "bandit", "learner labelled as bandit")

    # the effective config alone reproduces the run
    echo_cfg = tmp / "echo.json"
    del echo["config_hash"]
    echo_cfg.write_text(json.dumps(echo))
    r = cli("run", "--config", echo_cfg, "--seed", 4, "--out", tmp / "rerun")
    digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
    check(r.returncode == 0 and digest(csv_path) == digest(tmp / "rerun" / "sd_cc_ucb_seed4.csv"),
          "effective config + seed reproduce the CSV byte for byte")

    snap_out = tmp / "snap.json"
    r = cli("snapshot", "--in", run_dir, "--out", snap_out)
    check(r.returncode == 0, "snapshot exits 0")
    check(snap_out.exists() and json.loads(snap_out.read_text()) ==
          json.loads((run_dir / "sd_cc_ucb_seed4.snapshot.json").read_text()), "snapshot re-export is identical")

    sweep_dir = tmp / "sweep"
    r = cli("sweep", "--config", CONFIG, "--seeds", "1..2", "--policies", "sd_cc_ucb,wcs", "--out", sweep_dir,
            "--horizon", 100)
    check(r.returncode == 0, "sweep exits 0")
    csvs = sorted(sweep_dir.glob("*.csv"))
    check(len(csvs) == 4, "sweep writes 4 CSVs")
    check((sweep_dir / "summary.json").exists(), "sweep writes summary.json")
    wcs_meta = json.loads((sweep_dir / "wcs_seed1.meta.json").read_text())
    check(wcs_meta["oracle_csi"] == "oracle", "WCS labelled as oracle CSI")
    expected = summarize(csvs)
    check(same_summary(json.loads((sweep_dir / "summary.json").read_text()), expected),
          "sweep summary matches independent recomputation")
    r = cli("compare", "--in", sweep_dir)
    check(r.returncode == 0 and same_summary(json.loads(r.stdout), expected),
          "compare output matches independent recomputation")
    r = cli("sweep", "--config", CONFIG, "--seeds", "3..1", "--policies", "wcs", "--out", tmp / "x")
    check(r.returncode == 1, "empty seed range exits 1")
    r = cli("sweep", "--config", CONFIG, "--seeds", "1..1", "--policies", "wcs,bogus", "--out", tmp / "x")
    check(r.returncode == 1, "unknown policy in list exits 1")

    # sweep results do not depend on the worker count
    one = tmp / "one"

    env = dict(os.environ, SIM_THREADS="1")
    cli("sweep", "--config", CONFIG, "--seeds", "1..2", "--policies", "sd_cc_ucb,wcs", "--out", one,
        "--horizon", 100, env=env)
    check(all(digest(p) == digest(one / p.name) for p in csvs), "single-threaded sweep gives identical CSVs")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
