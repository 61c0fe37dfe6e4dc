"""Command-line front end.

Exit status: 0 when every verdict passes, 1 when a verdict fails or a run
aborts, 2 on usage errors (unknown subcommand or flag, missing config file).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from obstaclelab.config import EXPERIMENTS, KEY_HELP, load_config, parse_value
from obstaclelab.experiments import ExperimentAborted, ratio_instance, run_experiment
from obstaclelab.formats import read_measure
from obstaclelab.grid import (
    CoefficientField,
    assemble,
    build_grid,
    check_green_bounds,
    discrete_green,
    estimate_capacity,
    nodal_csv,
)
from obstaclelab.measure import Measure
from obstaclelab.obstacle import Obstacle, solve_naive, solve_op
from obstaclelab.potentials import ratio_scan

log = logging.getLogger("obstaclelab")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _summary_block(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def cmd_solve(args) -> int:
    grid = build_grid(n=args.n)
    op = assemble(grid, CoefficientField.from_selector(args.coefficients))
    mu = read_measure(args.measure) if args.measure else Measure.zero(2)
    psi = Obstacle.unconstrained(grid) if args.k is None else Obstacle.constant(grid, -args.k)
    start = time.perf_counter()
    if args.mode == "op":
        res = solve_op(op, mu, psi, omega=args.omega)
        u, lam, lcp = res.u, res.lambda0, res.lcp
        sing_mass = res.diagnostics["singular_reaction_mass"]
    else:
        lcp = solve_naive(op, mu, psi, omega=args.omega)
        u, lam, sing_mass = lcp.u, lcp.reaction, 0.0
    elapsed = time.perf_counter() - start
    Path(args.output).write_text(
        nodal_csv(grid, {"u": u.values, "lambda0": lam}, {"mode": args.mode, "obstacle": psi.description})
    )
    summary = {
        "mode": args.mode,
        "n": args.n,
        "h": repr(grid.h),
        "solver": lcp.solver,
        "iterations": lcp.iterations,
        "comp_residual": repr(lcp.comp_residual),
        "u_max_abs": repr(u.max_abs()),
        "u_min": repr(float(u.values.min(initial=0.0))),
        "lambda0_mass": repr(float(lam.sum())),
        "lambda0_min": repr(float(lam.min(initial=0.0))),
        "singular_reaction_mass": repr(sing_mass),
        "equation_residual_free": repr(_free_residual(lam, psi)),
        "seconds": f"{elapsed:.3f}",
    }
    text = _summary_block(summary)
    if args.summary:
        Path(args.summary).write_text(text)
    sys.stdout.write(text)
    return 0


def _free_residual(lam, psi) -> float:
    """Size of the reaction off the constrained nodes (zero for a correct solve)."""
    free = ~psi.constrained
    return float(np.abs(lam[free]).max(initial=0.0))


def cmd_green(args) -> int:
    grid = build_grid(n=args.n)
    op = assemble(grid, CoefficientField.from_selector(args.coefficients))
    g = discrete_green(op, args.y)
    box = args.box
    K = ((box[0], box[1]), (box[2], box[3]))
    bounds = check_green_bounds(op, K)
    header = {
        "source": " ".join(repr(c) for c in args.y),
        "box": " ".join(repr(v) for v in box),
        "c1": repr(bounds.c1),
        "c2": repr(bounds.c2),
        "d1": repr(bounds.d1),
        "d2": repr(bounds.d2),
        "nearest_ratio_min": repr(float(min(bounds.nearest_ratios))),
        "nearest_ratio_max": repr(float(max(bounds.nearest_ratios))),
        "bounds_ok": bounds.ok,
    }
    Path(args.output).write_text(nodal_csv(grid, {"green": g.values}, header))
    print(f"bounds_ok = {bounds.ok}")
    print(f"c1 = {bounds.c1!r}\nc2 = {bounds.c2!r}")
    return 0 if bounds.ok else 1


def cmd_potential_scan(args) -> int:
    mu, nu = ratio_instance()
    center = (0.0, 0.0, 0.0)
    if args.den:
        mu = read_measure(args.den)
    if args.num:
        nu = read_measure(args.num)
    if args.center:
        center = args.center
    scan = ratio_scan(mu, nu, center, args.radii)
    scan.to_csv(args.output)
    print(f"strictly_decreasing = {scan.strictly_decreasing()}")
    print(f"final_over_initial = {scan.ratios[-1] / scan.ratios[0]!r}")
    print(f"decay_exponent = {scan.decay_exponent()!r}")
    return 0


def cmd_capacity(args) -> int:
    lines = [f"# set = {args.set}", f"# center = {args.center[0]!r} {args.center[1]!r}"]
    if args.set == "disk":
        lines.append(f"# radius = {args.radius!r}")
    lines.append("n,h,nodes,capacity")
    for n in args.n:
        grid = build_grid(n=n)
        if args.set == "point":
            nodes = np.array([grid.nearest_node(args.center)])
        else:
            nodes = grid.nodes_in_disk(args.center, args.radius)
        cap = estimate_capacity(grid, nodes)
        lines.append(f"{n},{grid.h!r},{nodes.size},{cap!r}")
        print(f"n = {n} capacity = {cap:.6f}")
    Path(args.output).write_text("\n".join(lines) + "\n")
    return 0


def cmd_experiment(args) -> int:
    overrides = {"experiment": args.name}
    for key in KEY_HELP:
        raw = getattr(args, key, None)
        if key != "experiment" and raw is not None:
            overrides[key] = parse_value(key, raw)
    cfg = load_config(args.config, **overrides)
    try:
        report = run_experiment(cfg)
    except ExperimentAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    path = report.write(cfg.output)
    for v in report.verdicts:
        print(v.line())
    for k, v in report.timings.items():
        log.info("timing %s: %.3f s", k, v)
    print(f"report written to {path}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obstaclelab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("solve", help="obstacle problem for a measure datum on the unit square")
    p.add_argument("--measure", help="measure file (default: zero measure)")
    p.add_argument("--n", type=int, default=32, help="subdivisions per side")
    p.add_argument("--k", type=float, help="constant obstacle psi = -k (omit for no obstacle)")
    p.add_argument("--mode", choices=("op", "naive"), default="op", help="op strips the singular negative part")
    p.add_argument("--coefficients", default="identity", help=KEY_HELP["coefficients"])
    p.add_argument("--omega", type=float, default=1.8, help=KEY_HELP["omega"])
    p.add_argument("--output", default="solution.csv", help="nodal CSV with columns x, y, u, lambda0")
    p.add_argument("--summary", help="also write the key = value summary here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("green", help="discrete Green column and two-sided log bounds")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--y", type=_floats, default=(0.5, 0.5), help="source point x,y")
    p.add_argument("--box", type=_floats, default=(0.4, 0.6, 0.4, 0.6), help="compact set K as x0,x1,y0,y1")
    p.add_argument("--coefficients", default="identity", help=KEY_HELP["coefficients"])
    p.add_argument("--output", default="green.csv")
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("potential-scan", help="ball-average ratio scan (default: segment over atom in 3-D)")
    p.add_argument("--num", help="measure file for the numerator potential")
    p.add_argument("--den", help="measure file for the denominator potential")
    p.add_argument("--center", type=_floats)
    p.add_argument("--radii", type=lambda s: parse_value("radii", s), default=parse_value("radii", "ladder:2:10"))
    p.add_argument("--output", default="ratio.csv")
    p.set_defaults(func=cmd_potential_scan)

    p = sub.add_parser("capacity", help="discrete capacity of a node or a disk of nodes")
    p.add_argument("--n", type=_ints, default=(16, 32, 64, 128, 256), help="comma-separated grid sizes")
    p.add_argument("--set", choices=("point", "disk"), default="point")
    p.add_argument("--center", type=_floats, default=(0.5, 0.5))
    p.add_argument("--radius", type=float, default=0.2)
    p.add_argument("--output", default="capacity.csv")
    p.set_defaults(func=cmd_capacity)

    keys = "\n".join(f"  {k:15s} {v}" for k, v in KEY_HELP.items())
    p = sub.add_parser(
        "experiment",
        help="run a refinement or ratio study",
        description=f"Config file keys (key = value, '#' comments):\n{keys}",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value file; flags below override it")
    for key, text in KEY_HELP.items():
        if key != "experiment":
            p.add_argument("--" + key.replace("_", "-"), dest=key, help=text)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"obstaclelab: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"obstaclelab: error: {exc}", file=sys.stderr)
        return 2


cli_main = main
