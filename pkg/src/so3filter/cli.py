"""Command-line front end: ``so3filter run|verify|compare``.

Exit codes: 0 success, 1 configuration error, 2 runtime abort (a trial hit
the filter singularity), 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .errors import ConfigError, NearUnstableSet
from .scenario_io import apply_values, load_scenario, parse_value
from .sim import STEADY_FRACTION, TrajectoryLog, monte_carlo, paper_scenario, run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
OUT_ENV = "SO3FILTER_OUT"

COLUMNS = (
    ["t", "dist_tilde", "dist_weighted", "upsilon"]
    + [f"bhat_{a}" for a in "xyz"]
    + [f"shat_{a}" for a in "xyz"]
    + [f"btilde_{a}" for a in "xyz"]
    + [f"stilde_{a}" for a in "xyz"]
    + [f"euler_true_{a}" for a in "zyx"]
    + [f"euler_hat_{a}" for a in "zyx"]
    + ["v_potential"]
)


def log_table(log: TrajectoryLog) -> np.ndarray:
    return np.column_stack([
        log.t, log.dist_tilde, log.dist_weighted, log.upsilon,
        log.b_hat, log.sigma_hat, log.b_tilde, log.sigma_tilde,
        np.rad2deg(log.euler_true), np.rad2deg(log.euler_hat), log.v_potential,
    ])


def write_csv(path: Path, log: TrajectoryLog) -> None:
    """Shortest round-trip float repr, '.' decimal point, LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in log_table(log):
        w.writerow([repr(float(x)) for x in row])
    path.write_bytes(buf.getvalue().encode("ascii"))


def read_csv(path) -> dict:
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {name: body[:, i] for i, name in enumerate(header)}


def log_stats(log: TrajectoryLog) -> dict:
    mask = log.steady_mask()
    return {
        "initial_dist": float(log.dist_tilde[0]),
        "final_dist": float(log.dist_tilde[-1]),
        "steady_mean_dist": float(log.dist_tilde[mask].mean()),
        "steady_mean_btilde": float(np.linalg.norm(log.b_tilde[mask], axis=1).mean()),
        "steady_mean_stilde": float(np.linalg.norm(log.sigma_tilde[mask], axis=1).mean()),
        "min_dist": float(log.dist_tilde.min()),
    }


def _fmt_stats(stats: dict) -> list[str]:
    return [f"  {k:<20} {v!r}" for k, v in stats.items()]


# ---------------------------------------------------------------- parsing

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="so3filter", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def sim_options(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--builtin", choices=["paper"], default="paper")
        src.add_argument("--scenario", type=Path, help="scenario file (dotted key = value)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--duration", type=float)
        sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./so3filter_out)")
        sp.add_argument("--decimate", type=int, default=10)
        sp.add_argument("--full-rate", action="store_true", help="log every step (same as --decimate 1)")
        sp.add_argument("--workers", type=_positive_int, default=1)
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario key, e.g. --set gains.k_w=10")

    rp = sub.add_parser("run", help="simulate and write trajectory CSVs")
    sim_options(rp)
    rp.add_argument("--filter", choices=["stochastic", "baseline"])

    cp = sub.add_parser("compare", help="stochastic vs baseline filter on identical noise")
    sim_options(cp)

    vp = sub.add_parser("verify", help="run the property suites")
    vp.add_argument("level", nargs="?", choices=list(verify_mod.LEVELS), default="fast")
    vp.add_argument("--seed", type=int, default=12345)
    return p


def resolve(args):
    """Scenario, output directory and decimation from parsed arguments."""
    sc = load_scenario(args.scenario) if args.scenario else paper_scenario()
    values = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = parse_value(v)
    if values:
        sc = apply_values(sc, values)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.duration is not None:
        changes["duration"] = args.duration
    if getattr(args, "filter", None):
        changes["filter_kind"] = args.filter
    if changes:
        sc = sc.with_overrides(**changes)
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if args.decimate < 1:
        raise ConfigError("--decimate must be >= 1")
    decimation = 1 if args.full_rate else args.decimate
    out = args.out or Path(os.environ.get(OUT_ENV, "so3filter_out"))
    return sc, out, decimation


def _batch(sc, args, decimation, kind=None):
    if args.trials == 1:
        try:
            logs, failures = [run(sc, decimation=decimation, filter_kind=kind)], []
        except NearUnstableSet as exc:
            logs, failures = [], [(0, exc.step, str(exc))]
        return logs, failures
    summary = monte_carlo(sc, args.trials, decimation=decimation, workers=args.workers,
                          filter_kind=kind, keep_logs=True)
    return summary.logs, summary.failures


def _write_logs(out: Path, logs) -> list[dict]:
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for log in logs:
        idx = 0 if log.trial is None else log.trial
        write_csv(out / f"trial_{idx:03d}.csv", log)
        rows.append({"trial": idx, **log_stats(log)})
    return rows


def _write_table(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    path.write_text(buf.getvalue(), encoding="ascii")


def _header(sc, args, decimation):
    return [
        f"seed                 {sc.seed}",
        f"config_hash          {sc.config_hash()}",
        f"trials               {args.trials}",
        f"dt                   {sc.dt!r}",
        f"duration             {sc.duration!r}",
        f"decimation           {decimation}",
        f"steady window        last {STEADY_FRACTION:.0%} of the horizon",
    ]


def _aggregate(rows):
    keys = [k for k in rows[0] if k != "trial"]
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


def cmd_run(args) -> int:
    sc, out, decimation = resolve(args)
    logs, failures = _batch(sc, args, decimation)
    rows = _write_logs(out, logs)
    _write_table(out / "summary.csv", rows)
    lines = ["so3filter run", f"filter               {sc.filter_kind}"] + _header(sc, args, decimation)
    if rows:
        lines.append("mean over trials:" if len(rows) > 1 else "trial statistics:")
        lines += _fmt_stats(_aggregate(rows))
    for trial, step, msg in failures:
        lines.append(f"FAILED trial {trial} at step {step}: {msg}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text, encoding="ascii")
    sys.stdout.write(text)
    return EXIT_RUNTIME if failures else EXIT_OK


def cmd_compare(args) -> int:
    sc, out, decimation = resolve(args)
    lines = ["so3filter compare"] + _header(sc, args, decimation)
    paired = {}
    failed = False
    for kind in ("stochastic", "baseline"):
        logs, failures = _batch(sc, args, decimation, kind=kind)
        rows = _write_logs(out / kind, logs)
        _write_table(out / kind / "summary.csv", rows)
        paired[kind] = rows
        failed = failed or bool(failures)
        lines.append(f"{kind}:")
        if rows:
            lines += _fmt_stats(_aggregate(rows))
        for trial, step, msg in failures:
            lines.append(f"  FAILED trial {trial} at step {step}: {msg}")
    both = {r["trial"] for r in paired["stochastic"]} & {r["trial"] for r in paired["baseline"]}
    table = []
    for trial in sorted(both):
        s = next(r for r in paired["stochastic"] if r["trial"] == trial)
        b = next(r for r in paired["baseline"] if r["trial"] == trial)
        table.append({"trial": trial,
                      "stochastic_steady_mean_dist": s["steady_mean_dist"],
                      "baseline_steady_mean_dist": b["steady_mean_dist"],
                      "stochastic_final_dist": s["final_dist"],
                      "baseline_final_dist": b["final_dist"]})
    _write_table(out / "comparison.csv", table)
    text = "\n".join(lines) + "\n"
    (out / "comparison.txt").write_text(text, encoding="ascii")
    sys.stdout.write(text)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_verify(args) -> int:
    checks = verify_mod.run_suite(args.level, seed=args.seed)
    for c in checks:
        print(c.line())
    bad = [c for c in checks if not c.passed]
    if bad:
        print(f"{len(bad)} check(s) failed; first: {bad[0].name}")
        return EXIT_VERIFY
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    handler = {"run": cmd_run, "compare": cmd_compare, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NearUnstableSet as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
