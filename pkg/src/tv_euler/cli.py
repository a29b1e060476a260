"""Command-line entry point ``tv-euler``.

Exit codes: 0 on success, 1 for an unreadable or invalid configuration,
2 when an experiment row is invalid or a verification fails.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .convergence import discrete_gronwall, random_gronwall_instance, verify_sum_bound
from .errors import ConfigError, TvEulerError
from .euler import default_jobs
from .exact import ClosedFormDensity, bang_bang_gaussian_start
from .experiment import emit_outputs, load_config, run_experiment, with_overrides
from .grid import trapezoid_mass
from .mild import HEAT_KERNEL_ORDERS, PicardConfig, heat_kernel_l1_norms, mollifier_width, picard_solve

EXIT_OK, EXIT_CONFIG, EXIT_INVALID = 0, 1, 2


def _err(msg):
    print(f"tv-euler: {msg}", file=sys.stderr)


def cmd_run(args):
    try:
        cfg = with_overrides(load_config(args.config), args.seed, args.out)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    report = run_experiment(cfg, jobs=args.jobs, log=None if args.quiet else print)
    paths = emit_outputs(report, cfg)
    if not args.quiet:
        if report.fit is not None:
            print(f"order {report.fit.slope:.3f} (r^2 {report.fit.r_squared:.4f})")
        for p in paths:
            print(f"wrote {p}")
    bad = [r for r in report.rows if not r.valid]
    for r in bad:
        _err(f"row T/{r.denominator} invalid: {r.error}")
    return EXIT_INVALID if bad else EXIT_OK


def cmd_verify(args):
    ok = True

    def line(name, passed, detail):
        nonlocal ok
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    identities = {"dx", "dxx_off"}
    for t in (0.1, 1.0, 10.0):
        for order in HEAT_KERNEL_ORDERS:
            closed, quad = heat_kernel_l1_norms(t, order)
            if order in identities:
                line(f"heat kernel {order} t={t}", abs(closed - quad) <= 1e-6,
                     f"closed {closed:.10g} quadrature {quad:.10g}")
            else:
                line(f"heat kernel {order} t={t}", quad <= closed,
                     f"quadrature {quad:.10g} <= bound {closed:.10g}")
    try:
        slack = verify_sum_bound(args.nmax)
        line(f"sum bound n <= {args.nmax}", True, f"smallest slack {slack:.3e}")
    except TvEulerError as exc:
        line(f"sum bound n <= {args.nmax}", False, str(exc))
    rng = np.random.default_rng(args.seed)
    failures = 0
    for _ in range(args.instances):
        y, f, g = random_gronwall_instance(rng, int(rng.integers(2, 60)))
        try:
            discrete_gronwall(y, f, g)
        except TvEulerError:
            failures += 1
    line(f"discrete Gronwall, {args.instances} random instances", failures == 0,
         f"{failures} failures")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_mild(args):
    try:
        cfg = with_overrides(load_config(args.config), None, args.out)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        pcfg = PicardConfig(**cfg.mild)
        grid = picard_solve(cfg.problem, pcfg)
    except TvEulerError as exc:
        _err(f"mild solver failed: {exc}")
        return EXIT_INVALID
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.name}_mild.csv"
    grid.to_csv(path)
    print(f"wrote {path} ({grid.n_points} points, mass {grid.mass():.10f})")
    ref = cfg.reference()
    if ref is not None:
        s0 = mollifier_width(pcfg, cfg.problem)
        z = grid.points
        if ref.kind == "bang_bang":
            p = ref.params
            exact = bang_bang_gaussian_start(p["theta"], p["t"], p["x"], s0, z)
        else:
            p = ref.params
            exact = ClosedFormDensity.gaussian(p["mean"], p["variance"] + s0 ** 2).pdf(z)
        l1 = trapezoid_mass(np.abs(grid.values - exact), grid.dx)
        print(f"L1 distance to the exact density (same mollified start): {l1:.3e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tv-euler",
        description="Total-variation convergence experiments for the randomised Euler scheme.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence experiment")
    run.add_argument("config", help="TOML experiment file")
    run.add_argument("--jobs", type=int, default=default_jobs(),
                     help="worker threads (default: $TV_EULER_JOBS or 1)")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--quiet", action="store_true", help="only report errors")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify-lemmas", help="check the heat-kernel and summation inequalities")
    ver.add_argument("--nmax", type=int, default=10 ** 4, help="largest n for the sum bound")
    ver.add_argument("--instances", type=int, default=1000,
                     help="random Gronwall instances (default 1000)")
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    mild = sub.add_parser("mild-oracle", help="solve the mild equation for a config's SDE")
    mild.add_argument("config", help="TOML experiment file")
    mild.add_argument("--out", help="override the output directory")
    mild.set_defaults(func=cmd_mild)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
