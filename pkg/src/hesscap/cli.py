"""Command-line front end: ``hesscap cap | verify <id> | sweep <curve>``.

Parameters come from flags or from a JSON file given with ``--config``;
flags win. Reports land in ``--out``, else ``$HESSCAP_OUT``, else
``./hesscap-out``. Exit codes: 0 pass, 1 fail, 2 usage or parameter error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import capacity as cl
from .errors import HesscapError
from .families import random_family, trace_family
from .radial import (
    LOG_BRANCH_NOTE,
    Condenser,
    MTParams,
    capacity_closed_form,
    capacity_flux,
    condenser_extremal,
    mt_alpha0,
    solve_variational,
)
from .report import SCHEMA_VERSION, atomic_write, fmt

OUT_ENV = "HESSCAP_OUT"

VERIFY_IDS = (
    "sobolev", "morrey", "moser-trudinger", "isocap", "isocap-exp", "cap-defs",
    "wiener", "weak-type", "strong-type", "trace", "trace-exp",
)
SWEEPS = ("capacity-vs-r", "weak-ratio-vs-t", "mt-vs-alpha", "isocap-vs-aspect")

DEFAULTS = {
    "n": 3, "k": 1, "r": 1.0, "R": 2.0, "m": 4096, "q": None, "alpha_factor": None, "beta": None,
    "profiles": 50, "seed": 0, "slack": None, "points": 33, "lo": None, "hi": None,
}


class UsageError(Exception):
    pass


def _add_params(p):
    s = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with parameters (flags override it)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./hesscap-out)")
    p.add_argument("--n", type=int, default=s, help="dimension")
    p.add_argument("--k", type=int, default=s, help="Hessian order")
    p.add_argument("--r", type=float, default=s, help="inner radius")
    p.add_argument("--R", type=float, default=s, help="outer radius")
    p.add_argument("--m", type=int, default=s, help="annulus node count")
    p.add_argument("--q", type=float, default=s, help="Lebesgue exponent")
    p.add_argument("--alpha-factor", dest="alpha_factor", type=float, default=s, help="alpha as a multiple of alpha_0")
    p.add_argument("--beta", type=float, default=s)
    p.add_argument("--profiles", type=int, default=s, help="random family size")
    p.add_argument("--seed", type=int, default=s)
    p.add_argument("--slack", type=float, default=s, help="override the report slack")
    p.add_argument("--points", type=int, default=s, help="sweep points")
    p.add_argument("--lo", type=float, default=s, help="sweep lower end")
    p.add_argument("--hi", type=float, default=s, help="sweep upper end")


def build_parser():
    parser = argparse.ArgumentParser(prog="hesscap", description="k-Hessian capacities and inequality checks")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_params(sub.add_parser("cap", help="condenser capacity by three routes"))
    v = sub.add_parser("verify", help="run one verification and write JSON + CSV")
    v.add_argument("id", choices=VERIFY_IDS)
    _add_params(v)
    w = sub.add_parser("sweep", help="write a plot-ready CSV curve")
    w.add_argument("curve", choices=SWEEPS)
    _add_params(w)
    return parser


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    flags = vars(args)
    if flags.get("config"):
        with open(flags["config"]) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"out"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, val in flags.items():
        if key == "out":
            if val is not None:
                cfg["out"] = val
        elif key in DEFAULTS:
            cfg[key] = val
    cfg["out"] = cfg.get("out") or os.environ.get(OUT_ENV) or "hesscap-out"
    return cfg


def cmd_cap(cfg) -> int:
    c = Condenser(cfg["n"], cfg["k"], cfg["r"], cfg["R"])
    closed = capacity_closed_form(c)
    flux = capacity_flux(c)
    var = solve_variational(c, cfg["m"]).energy
    vals = [closed, flux, var]
    spread = max(vals) / min(vals) - 1.0
    print(f"closed_form  {fmt(closed)}")
    print(f"flux         {fmt(flux)}")
    print(f"variational  {fmt(var)}")
    print(f"spread       {fmt(spread)}")
    if c.log_branch:
        print(f"note: {LOG_BRANCH_NOTE}")
    return 0


def _alpha(cfg, default_factor):
    factor = default_factor if cfg["alpha_factor"] is None else cfg["alpha_factor"]
    return factor, factor * mt_alpha0(cfg["n"])


def _slack(cfg, rep):
    if cfg["slack"] is not None:
        rep.slack = cfg["slack"]
    return rep


def run_verify(ident: str, cfg) -> "cl.VerificationReport":
    n, k = cfg["n"], cfg["k"]
    if ident == "cap-defs":
        return cl.cap_defs_report(Condenser(n, k, cfg["r"], cfg["R"]), cfg["m"])
    if ident == "wiener":
        return cl.wiener_crosscheck(n, cfg["r"], cfg["R"])
    if ident == "isocap":
        return cl.isocap_report(n, k, cfg["q"])
    if ident == "isocap-exp":
        _, alpha = _alpha(cfg, 1.0)
        beta = cfg["beta"] if cfg["beta"] is not None else 1.0 + 2.0 / n
        return cl.isocap_exponential_report(n, MTParams(n, alpha, beta))
    if ident == "sobolev":
        return cl.sobolev_report(n, k, cfg["q"], count=cfg["profiles"], seed=cfg["seed"])
    if ident == "morrey":
        return cl.morrey_report(n, k, count=cfg["profiles"], seed=cfg["seed"])
    if ident == "moser-trudinger":
        factor, _ = _alpha(cfg, 0.9)
        return cl.moser_trudinger_report(n, factor, cfg["beta"])
    if ident in ("weak-type", "strong-type"):
        fam = [condenser_extremal(Condenser(n, k, 0.5, 1.0), 2048)]
        fam += random_family(n, k, cfg["profiles"], 1.0, cfg["seed"])
        build = cl.weak_type_report if ident == "weak-type" else cl.strong_type_report
        reps = [build(p, k) for p in fam]
        params = {"n": n, "k": k, "R": 1.0, "profiles": cfg["profiles"], "seed": cfg["seed"],
                  "note": "profile 0 is the extremal of (B_0.5, B_1)"}
        return cl.family_report(reps, ident, params)
    if ident == "trace":
        q = cfg["q"] if cfg["q"] is not None else k + 1.0
        tp = cl.TraceProblem.lebesgue(n, k, q)
        if q < k + 1:
            return cl.dini_report(tp)
        return cl.trace_constants(tp, trace_family(n, k, 1.0, cfg["profiles"], cfg["seed"]))
    if ident == "trace-exp":
        _, alpha = _alpha(cfg, 0.5)
        beta = cfg["beta"] if cfg["beta"] is not None else 1.0 + 2.0 / n
        tp = cl.TraceProblem.lebesgue(n, n // 2, 2.0, alpha=alpha, beta=beta)
        return cl.exp_trace_constants(tp, trace_family(n, n // 2, 1.0, cfg["profiles"], cfg["seed"]))
    raise UsageError(f"unknown verification id {ident!r}")


def cmd_verify(ident: str, cfg) -> int:
    rep = _slack(cfg, run_verify(ident, cfg))
    paths = rep.write(cfg["out"])
    print(rep.summary())
    for note in rep.notes:
        print(f"note: {note}")
    for path in paths:
        print(f"wrote {path}")
    return 0 if rep.passed else 1


def _range(cfg, lo, hi, points, log=True):
    lo = cfg["lo"] if cfg["lo"] is not None else lo
    hi = cfg["hi"] if cfg["hi"] is not None else hi
    points = cfg["points"] if cfg["points"] is not None else points
    if points < 1 or not lo <= hi or (log and lo <= 0):
        raise UsageError("empty or invalid sweep range")
    return np.geomspace(lo, hi, points) if log else np.linspace(lo, hi, points)


def sweep_rows(curve: str, cfg):
    """(columns, descriptions, rows, passed) for one curve."""
    n, k = cfg["n"], cfg["k"]
    if curve == "capacity-vs-r":
        big = cfg["R"]
        radii = _range(cfg, big * 1e-3, big * 0.99, cfg["points"])
        rows = [(r, capacity_closed_form(Condenser(n, k, float(r), big))) for r in radii]
        ok = all(b[1] > a[1] for a, b in zip(rows, rows[1:]))
        return ["r", "capacity"], ["inner radius", f"cap_k(B_r, B_{big:g})"], rows, ok
    if curve == "weak-ratio-vs-t":
        p = condenser_extremal(Condenser(n, k, cfg["r"], cfg["R"]), cfg["m"])
        rep = cl.weak_type_report(p, k, _range(cfg, 1e-4, 1.0, cfg["points"]))
        rows = [(g["t"], r) for g, r in zip(rep.grid, rep.ratios)]
        return ["t", "ratio"], ["level t", "cap_k(M_t) t^(k+1) / energy"], rows, rep.passed
    if curve == "mt-vs-alpha":
        factors = _range(cfg, 0.5, 1.2, cfg["points"], log=False)
        rows = []
        for f in factors:
            rep = cl.moser_trudinger_report(n, float(f), cfg["beta"])
            rows.append((float(f), rep.constant, rep.worst))
        ok = all(r[2] <= 1.02 for r in rows if r[0] <= 1.0)
        return (["alpha_over_alpha0", "family_sup", "end_growth"],
                ["alpha / alpha_0", "sup of the exponential functional over the truncated-log family",
                 "largest value in the last quarter of the family over the largest before it"], rows, ok)
    if curve == "isocap-vs-aspect":
        q = cl.critical_exponent(n, k) if cfg["q"] is None else cfg["q"]
        aspects = _range(cfg, 1e5, 1e9, cfg["points"])
        rows = [(a, float(cl.isocap_ratio(n, k, q, 1.0, float(a))[0])) for a in aspects]
        vals = [v for _, v in rows]
        ok = max(vals) / min(vals) <= 1.02
        return ["R_over_r", "ratio"], ["outer over inner radius", "|B_r|^((k+1)/q) / cap_k(B_r, B_R), r = 1"], rows, ok
    raise UsageError(f"unknown curve {curve!r}")


def cmd_sweep(curve: str, cfg) -> int:
    if cfg["points"] == DEFAULTS["points"] and curve == "mt-vs-alpha":
        cfg = dict(cfg, points=15)
    cols, desc, rows, ok = sweep_rows(curve, cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    params = {key: cfg[key] for key in ("n", "k", "r", "R", "m", "q", "alpha_factor", "beta") if cfg[key] is not None}
    schema = {
        "schema_version": SCHEMA_VERSION,
        "curve": curve,
        "params": params,
        "columns": [{"name": c, "description": d} for c, d in zip(cols, desc)],
    }
    csv_path = os.path.join(cfg["out"], f"{curve}.csv")
    atomic_write(csv_path, buf.getvalue())
    atomic_write(os.path.join(cfg["out"], f"{curve}.schema.json"), json.dumps(schema, indent=2) + "\n")
    print(f"{'PASS' if ok else 'FAIL'} {curve}: {len(rows)} rows")
    print(f"wrote {csv_path}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "cap":
            return cmd_cap(cfg)
        if args.command == "verify":
            return cmd_verify(args.id, cfg)
        return cmd_sweep(args.curve, cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except (HesscapError, ValueError, OSError) as exc:
        print(f"hesscap: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
