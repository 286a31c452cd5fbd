"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 non-convergence (only with ``--require-convergence``).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .certify import CalibrationError, calibrate_kappa
from .models import ConfigError
from .scenario import bundled_config, certificates_for, load_config, materialize, run_scenario, with_outputs
from .statespace import NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NOCONV = 0, 2, 3, 4


def _print_certificates(certs, out=None):
    out = out or sys.stdout
    for c in certs:
        tag = "PASS" if c.verdict else "FAIL"
        delta = "" if c.delta_star is None else f"  delta*={c.delta_star:.6g}"
        print(f"{c.theorem_id:7s} {tag} ({c.mode}){delta}", file=out)
        for cond in c.conditions:
            print(f"    {cond.name:60s} lhs={cond.lhs:.6g} rhs={cond.rhs:.6g} margin={cond.margin:+.3e}", file=out)


def _report(summary):
    conv = summary.convergence
    print(f"model={summary.config.model.value} kappa={summary.kappa:.10g}")
    if summary.config.warnings:
        for w in summary.config.warnings:
            print(f"warning: {w}")
    if conv is not None:
        print(f"converged={conv.converged} t_converged={conv.t_converged} final_rhs_norm={conv.final_rhs_norm:.3e}")
    for key, fit in summary.rate_fits.items():
        if fit is not None:
            print(f"rate[{key}]={fit.rate:.6g} r2={fit.r_squared:.6f} window={fit.window[0]:.3g}..{fit.window[1]:.3g}")
    if summary.limits is not None:
        for key, val in summary.limits.residuals.items():
            print(f"residual[{key}]={val:.3e}")
    _print_certificates(summary.certificates)


def _simulate(cfg, require_convergence):
    summary = run_scenario(cfg)
    _report(summary)
    if require_convergence and not summary.convergence.converged:
        return EXIT_NOCONV
    return EXIT_OK


def cmd_simulate(args):
    cfg = with_outputs(load_config(args.config), args.csv, args.json)
    return _simulate(cfg, args.require_convergence)


def cmd_certify(args):
    cfg = load_config(args.config)
    if args.theorem:
        cfg.certificates = list(args.theorem)
    setup = materialize(cfg)
    certs = certificates_for(setup, cfg.certificates, cfg.d)
    _print_certificates(certs)
    if args.json:
        Path(args.json).write_text(json.dumps([c.to_dict() for c in certs], indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    return EXIT_OK


def cmd_calibrate(args):
    if args.config:
        cfg = load_config(args.config)
        if cfg.kappa_from_gaps is None:
            raise ConfigError("kappa_from_gaps: not set in the config")
        a = materialize(cfg).a
        gaps = cfg.kappa_from_gaps
    else:
        if args.gaps is None or args.freqs is None:
            raise ConfigError("give a config or both --gaps and --freqs")
        a = np.asarray(args.freqs, dtype=float)
        a = a - a.mean()
        gaps = args.gaps
    print(f"kappa*={calibrate_kappa(gaps, a):.12g}")
    return EXIT_OK


def cmd_fig1(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = with_outputs(bundled_config("fig1"), outdir / "fig1.csv", outdir / "fig1.json")
    summary = run_scenario(cfg)
    _report(summary)
    ref = json.loads(resources.files("hetagg").joinpath("data", "fig1_reference.json").read_text(encoding="utf-8"))
    if summary.limits is not None:
        ours = summary.limits.geodesics
        table = np.asarray(ref["delta_theta"])
        print("delta_theta (computed):")
        print(np.array2string(ours, precision=4, suppress_small=True))
        print(f"max |computed - reference| = {np.abs(ours - table).max():.3e}")
    if args.require_convergence and not summary.convergence.converged:
        return EXIT_NOCONV
    return EXIT_OK


def _sweep_one(job):
    path, outdir = job
    stem = Path(path).stem
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            cfg = with_outputs(load_config(path), Path(outdir) / f"{stem}.csv", Path(outdir) / f"{stem}.json")
            s = run_scenario(cfg)
        except NumericError as exc:
            return stem, "numeric", str(exc)
        except (ConfigError, OSError) as exc:
            return stem, "config", str(exc)
    return stem, "converged" if s.convergence.converged else "not-converged", ""


def cmd_sweep(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [(p, str(outdir)) for p in args.configs]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_one, jobs))
    code = EXIT_OK
    for stem, status, msg in results:
        print(f"{stem}: {status}" + (f" ({msg})" if msg else ""))
        if status == "config":
            code = max(code, EXIT_CONFIG)
        elif status == "numeric":
            code = max(code, EXIT_NUMERIC)
        elif status == "not-converged" and args.require_convergence:
            code = max(code, EXIT_NOCONV)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetagg", description="Heterogeneous aggregation models: runs and certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one JSON config")
    s.add_argument("config")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.add_argument("--require-convergence", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("certify", help="evaluate theorem hypotheses on a config's initial data")
    s.add_argument("config")
    s.add_argument("--theorem", action="append", help="override the config's certificate list")
    s.add_argument("--json")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("calibrate-kappa", help="least-squares coupling from locked phase gaps")
    s.add_argument("config", nargs="?")
    s.add_argument("--gaps", type=float, nargs="+")
    s.add_argument("--freqs", type=float, nargs="+")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("reproduce-fig1", help="run the bundled four-agent complex sphere scenario")
    s.add_argument("--outdir", default=".")
    s.add_argument("--require-convergence", action="store_true")
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("sweep", help="run several configs in parallel")
    s.add_argument("configs", nargs="+")
    s.add_argument("--outdir", default=".")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--require-convergence", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CalibrationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
