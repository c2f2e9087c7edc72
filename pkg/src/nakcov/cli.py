"""``nakcov`` command line: analytic coverage/rate tables, Monte Carlo sweeps, verification suites.

CSV output starts with comment lines (schema version, optional timestamp,
assumptions, defaults that were filled in) followed by a fixed header row.
Rows come out in (r, T, variant) order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from typing import Optional, Sequence

from . import __version__, checks, scenario_io
from .errors import NakcovError
from .rate import avg_rate
from .simulator import simulate

CSV_SCHEMA = 1
COLUMNS = {
    "coverage": ("r", "T_dB", "variant", "value", "method", "est_error", "assumptions_hash"),
    "rate": ("r", "variant", "nats", "est_error", "method", "assumptions_hash"),
    "sweep": ("r", "T_dB", "variant", "metric", "mean", "stderr", "trials", "seed", "assumptions_hash"),
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _metadata(cfg: scenario_io.ScenarioConfig) -> dict:
    sc = cfg.scenario
    corr = sc.corr
    return {
        "assumptions_hash": scenario_io.assumptions_hash(cfg),
        "beta": sc.geometry.beta,
        "R": sc.geometry.R,
        "d_min": sc.geometry.d_min,
        "user_direction_deg": sc.geometry.user_angle_deg,
        "angles": list(sc.angles) if sc.angles is not None else None,
        "rho": corr.rho if corr is not None and corr.kind == "exponential" else None,
        "correlation_kind": corr.kind if corr is not None else "none",
        "sqrt_convention": corr.sqrt_convention if corr is not None else True,
        "sigma_db": sc.sigma_db,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "defaults_used": list(cfg.defaults_used),
        "notes": [
            "C has sqrt(rho_ij) off the diagonal" if corr is None or corr.sqrt_convention
            else "C has rho_ij off the diagonal",
            "thresholds converted from dB at the command-line boundary",
            "rates in nats per channel use",
        ],
        "scenario": scenario_io.canonical(cfg),
    }


def _emit(table: str, rows: list[dict], meta: dict, fmt: str, timestamp: bool, out) -> None:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if timestamp else None
    if fmt == "json":
        doc = {"schema": CSV_SCHEMA, "table": table, "version": __version__, "metadata": meta, "rows": rows}
        if stamp:
            doc["generated"] = stamp
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    out.write(f"# nakcov-csv schema={CSV_SCHEMA} table={table}\n")
    if stamp:
        out.write(f"# generated {stamp}\n")
    out.write(
        "# assumptions "
        + " ".join(f"{k}={meta[k]}" for k in ("assumptions_hash", "beta", "R", "d_min", "user_direction_deg",
                                             "correlation_kind", "rho", "sqrt_convention", "sigma_db"))
        + "\n"
    )
    out.write("# defaults " + (",".join(meta["defaults_used"]) or "none") + "\n")
    w = csv.writer(out, lineterminator="\n")
    cols = COLUMNS[table]
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])


def _coverage_rows(cfg, h: str) -> list[dict]:
    rows = []
    for r in cfg.r:
        for t_db in cfg.T_db:
            for v in cfg.variants:
                row = {"r": r, "T_dB": t_db, "variant": v, "assumptions_hash": h}
                try:
                    res = cfg.scenario.coverage(checks.db_to_linear(t_db), r, v)
                    row.update(value=res.value, method=res.method, est_error=res.est_abs_error)
                except (NakcovError, ValueError) as exc:
                    row.update(value=None, method=f"error: {exc}", est_error=None)
                rows.append(row)
    return rows


def _rate_rows(cfg, h: str) -> list[dict]:
    rows = []
    for r in cfg.r:
        for v in cfg.variants:
            row = {"r": r, "variant": v, "assumptions_hash": h}
            try:
                res = avg_rate(cfg.scenario.coverage_fn(r, v), r)
                row.update(nats=res.value, est_error=res.est_abs_error, method=res.method)
            except (NakcovError, ValueError) as exc:
                row.update(nats=None, est_error=None, method=f"error: {exc}")
            rows.append(row)
    return rows


def _sweep_rows(cfg, h: str, metric: str, workers: int) -> list[dict]:
    rows = []
    t_list = cfg.T_db if metric == "coverage" else (None,)
    for r in cfg.r:
        for t_db in t_list:
            for v in cfg.variants:
                row = {"r": r, "T_dB": t_db, "variant": v, "metric": metric, "trials": cfg.trials,
                       "seed": cfg.seed, "assumptions_hash": h}
                try:
                    t = checks.db_to_linear(t_db) if t_db is not None else None
                    est = simulate(cfg.scenario, r, metric, v, cfg.trials, cfg.seed, T=t, workers=workers)
                    row.update(mean=est.mean, stderr=est.stderr)
                except (NakcovError, ValueError) as exc:
                    row.update(mean=None, stderr=f"error: {exc}")
                rows.append(row)
    return rows


def _load(args) -> scenario_io.ScenarioConfig:
    cfg = scenario_io.load(args.scenario)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if changes:
        cfg = replace(cfg, **changes)
    return cfg


def _open_out(path: Optional[str]):
    return open(path, "w", newline="") if path else None


def _run_table(args, table: str) -> int:
    cfg = _load(args)
    h = scenario_io.assumptions_hash(cfg)
    if table == "coverage":
        rows = _coverage_rows(cfg, h)
    elif table == "rate":
        rows = _rate_rows(cfg, h)
    else:
        rows = _sweep_rows(cfg, h, args.metric, args.workers)
    buf = io.StringIO()
    _emit(table, rows, _metadata(cfg), args.format, not args.no_timestamp, buf)
    fh = _open_out(args.out)
    if fh:
        with fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    failed = sum(1 for row in rows if str(row.get("method", "")).startswith("error")
                 or str(row.get("stderr", "")).startswith("error"))
    if failed:
        print(f"{failed} row(s) failed; see the method/stderr column", file=sys.stderr)
    return 0


def _run_verify(args) -> int:
    suites = checks.SUITES if args.suite == "all" else (args.suite,)
    results = []
    for name in suites:
        print(f"== suite {name}")
        results.extend(checks.run_suite(name))
    if args.out:
        doc = [{"criterion": r.criterion, "name": r.name, "passed": r.passed, "hard": r.hard,
                "detail": r.detail, "seconds": r.seconds, "metrics": r.metrics} for r in results]
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
    hard_fail = [r for r in results if r.hard and not r.passed]
    print(f"{len(results) - len(hard_fail)}/{len(results)} checks without hard failure")
    return 1 if hard_fail else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nakcov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file (YAML or JSON)")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--no-timestamp", action="store_true", help="omit the generation timestamp")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--trials", type=int, help="override run.trials")

    sub.add_parser("coverage", parents=[common], help="analytic coverage table")
    sub.add_parser("rate", parents=[common], help="analytic average-rate table")
    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo table")
    sw.add_argument("--metric", choices=("coverage", "rate"), default="coverage")
    sw.add_argument("--workers", type=int, default=1, help="threads; results do not depend on this")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=(*checks.SUITES, "all"))
    v.add_argument("--out", help="write a JSON report")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _run_verify(args)
        if args.trials is not None and args.trials < 1:
            raise NakcovError("--trials must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise NakcovError("--seed must be an unsigned 64-bit integer")
        return _run_table(args, args.command)
    except NakcovError as exc:
        print(f"nakcov: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
