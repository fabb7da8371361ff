"""Command-line front end.

    choquard constants --mu 1
    choquard ground-state --config run.json --out report.json --profile u.csv
    choquard bubble --mu 1 --q 4.5 --delta 5 --eps 0.2,0.1,0.05,0.025
    choquard sweep --problem scc2 --config run.json --eps 0.4,0.2,0.1 --out sweep.csv
    choquard verify --config run.json --seed 0

Exit codes: 0 success, 1 a check or solve failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import bubbles, checks, constants, semiclassical
from .config import ConfigError, RunConfig, load_config
from .errors import ChoquardError, DomainError, PreconditionError
from .riesz import build_kernel
from .solver import ground_state

SANDWICH_SLACK = 0.02
DEFAULT_POTENTIALS = {
    "scc1": semiclassical.Potential("gaussian_bump", 1.0, 1.0, 2.0),
    "scc2": semiclassical.Potential("gaussian_well", 1.0, 1.0, 2.0),
}


class UsageError(Exception):
    pass


def _eps_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def _num(x):
    # shortest round-trip repr of doubles; NaN stays readable
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _write_csv(rows, columns, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(row[c]) for c in columns])
    _emit(buf.getvalue(), path)


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(obj, compact=False):
    if compact:
        return json.dumps(obj, sort_keys=True) + "\n"
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _log(msg):
    print(msg, file=sys.stderr)


# -- subcommands -----------------------------------------------------------

def cmd_constants(args):
    sc = constants.sharp_constants(args.mu)
    d = sc.to_dict()
    out = {k: d[k] for k in ("mu", "c_hls", "s_sobolev", "s_hl", "critical_level")}
    _emit(_json(out, compact=args.json), None)
    return 0


def cmd_ground_state(args):
    cfg = load_config(args.config)
    grid = cfg.grid.build()
    kernel = build_kernel(grid, cfg.problem.mu)
    rep = ground_state(cfg.problem, kernel, cfg.solver)
    _emit(_json(rep.to_dict()), args.out)
    if args.profile:
        _emit(rep.field.to_csv(), args.profile)
    if not rep.converged:
        _log(f"not converged after {rep.iterations} iterations (grad_norm={rep.grad_norm:.3e})")
        return 1
    return 0


def cmd_bubble(args):
    fit = bubbles.verify_convolution_estimates(args.delta, args.mu, args.q, args.eps)
    _write_csv(fit.rows(), ["eps", "integral", "remainder", "target_order", "fitted_order"], args.out)
    _log(f"fitted order {fit.exponent_fitted:.4f}, target {fit.exponent_target:.4f} "
         f"+- {fit.tolerance}, R^2 {fit.r_squared:.5f}")
    if not fit.passed:
        _log("bubble: fitted order outside tolerance")
        return 1
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    pot = cfg.potential or DEFAULT_POTENTIALS[args.problem]
    grid = cfg.grid.build()
    kernel = build_kernel(grid, cfg.problem.mu)
    res = semiclassical.concentration_sweep(args.problem, pot, args.eps, cfg.problem, kernel, cfg.solver)
    _write_csv([r.to_dict() for r in res.rows],
               ["eps", "energy", "max_point", "decay_beta", "limit_gap", "converged"], args.out)
    lo, hi = res.reference_level, res.upper_level
    _log(f"{args.problem}: reference level {lo:.10g}, level at infinity {hi:.10g}")
    status = 0
    for r in res.rows:
        if not r.converged:
            _log(f"eps={r.eps}: not converged")
            status = 1
        if r.energy < lo * (1 - SANDWICH_SLACK):
            _log(f"eps={r.eps}: energy {r.energy:.10g} below the reference level")
            status = 1
        if args.problem == "scc2" and r.energy > hi * (1 + SANDWICH_SLACK):
            _log(f"eps={r.eps}: energy {r.energy:.10g} above the level at infinity")
            status = 1
    return status


def cmd_verify(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("seed must be nonnegative")
        cfg = RunConfig(cfg.problem, cfg.grid, cfg.solver, cfg.potential, args.seed)
    results = checks.run_suite(cfg)
    report = checks.format_report(results)
    sys.stdout.write(report)
    if args.out:
        _emit(report, args.out)
    failed = [r for r in results if not r.passed]
    if failed:
        _log(f"verify: first failing invariant: {failed[0].name}")
        return 1
    return 0


# -- parser ------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="choquard", description=__doc__.split("\n")[0])
    ap.add_argument("--print-default-config", action="store_true",
                    help="print the default run config as JSON and exit")
    sub = ap.add_subparsers(dest="command")

    sp = sub.add_parser("constants", help="sharp constants for a given mu")
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--json", action="store_true", help="single-line JSON")
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("ground-state", help="solve for the ground state")
    sp.add_argument("--config")
    sp.add_argument("--out", help="report JSON path (default stdout)")
    sp.add_argument("--profile", help="profile CSV path")
    sp.set_defaults(func=cmd_ground_state)

    sp = sub.add_parser("bubble", help="order of the bubble convolution integrals")
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--delta", type=float, default=5.0)
    sp.add_argument("--eps", type=_eps_list, default=[0.2, 0.1, 0.05, 0.025])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bubble)

    sp = sub.add_parser("sweep", help="semiclassical concentration sweep")
    sp.add_argument("--problem", choices=("scc1", "scc2"), required=True)
    sp.add_argument("--config")
    sp.add_argument("--eps", type=_eps_list, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run the invariant suite")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.print_default_config:
        sys.stdout.write(RunConfig().to_json())
        return 0
    if args.command is None:
        ap.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, UsageError, DomainError, PreconditionError) as exc:
        _log(f"choquard {args.command}: {exc}")
        return 2
    except ChoquardError as exc:
        _log(f"choquard {args.command}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
