"""Command-line surface: solve and analyze instance files.

Subcommands: solve-we, solve-ce, threshold, compare, scan, split, converge,
check.  Every subcommand reads one instance file, prints a human-readable
report to stdout and, with --csv PATH, writes fixed-column machine-readable
output.  Exit codes: 0 success, 1 solver failure (or failed checks), 2 input
error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from . import report as rpt
from .analysis import (
    AdmissibleSequenceSpec,
    asymptotic_experiment,
    compare_ce_we,
    run_structural_checks,
    scan_coalition_size,
    split_experiment,
    threshold_t_tilde,
)
from .equilibrium import ConvergenceError, solve_ce, solve_we
from .instance import Instance, InstanceFormatError, load_instance


def _write_csv(path: Optional[str], content: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)


def _cmd_solve_we(instance: Instance, args: argparse.Namespace) -> int:
    result = solve_we(instance.network, args.demand, instance.settings)
    sys.stdout.write(rpt.emit_wardrop(instance.network, result))
    _write_csv(args.csv, rpt.wardrop_csv(instance.network, result))
    return 0


def _cmd_solve_ce(instance: Instance, args: argparse.Namespace) -> int:
    result = solve_ce(instance.network, instance.profile, instance.settings)
    sys.stdout.write(rpt.emit_report(result))
    _write_csv(args.csv, rpt.equilibrium_csv(result))
    return 0


def _cmd_threshold(instance: Instance, args: argparse.Namespace) -> int:
    threshold = threshold_t_tilde(instance.network, instance.settings)
    sys.stdout.write(f"T_tilde = {rpt.fmt(threshold)}\n")
    _write_csv(args.csv, rpt.threshold_csv(threshold))
    return 0


def _cmd_compare(instance: Instance, args: argparse.Namespace) -> int:
    comparison = compare_ce_we(instance.network, instance.profile, instance.settings)
    sys.stdout.write(rpt.emit_comparison(comparison))
    _write_csv(args.csv, rpt.comparison_csv(comparison))
    return 0


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be START:STOP:POINTS, e.g. 0.2:0.5:7")
    start, stop = float(parts[0]), float(parts[1])
    points = int(parts[2])
    if points < 1:
        raise ValueError("grid needs at least one point")
    if points == 1:
        return [start]
    return [float(t) for t in np.linspace(start, stop, points)]


def _cmd_scan(instance: Instance, args: argparse.Namespace) -> int:
    # The smallest coalition of the instance is the one whose size varies;
    # any other coalitions keep their weights across the whole grid.
    fixed = instance.profile.coalition_weights[:-1]
    budget = 1.0 - sum(fixed)
    if args.coalition_grid is None:
        grid = [float(t) for t in np.linspace(0.0, budget, 21)]
    else:
        grid = _parse_grid(args.coalition_grid)
    result = scan_coalition_size(instance.network, grid, fixed, instance.settings)
    sys.stdout.write(rpt.emit_scan(result))
    _write_csv(args.csv, rpt.scan_csv(result))
    return 1 if result.failures else 0


def _cmd_split(instance: Instance, args: argparse.Namespace) -> int:
    experiment = split_experiment(
        instance.network, instance.profile, args.coalition, args.delta, instance.settings
    )
    out = ["before:"]
    out.append(rpt.emit_report(experiment.before).rstrip("\n"))
    out.append("after:")
    out.append(rpt.emit_report(experiment.after).rstrip("\n"))
    out.append(f"individuals' cost change = {rpt.fmt(experiment.individual_cost_change)}")
    sys.stdout.write("\n".join(out) + "\n")
    _write_csv(args.csv, rpt.split_csv(experiment.before, experiment.after))
    return 0


def _cmd_converge(instance: Instance, args: argparse.Namespace) -> int:
    steps = tuple(int(tok) for tok in args.steps.split(",") if tok.strip())
    spec = AdmissibleSequenceSpec(
        fixed_weights=instance.profile.coalition_weights,
        residual_mode=args.mode,
        steps=steps,
    )
    table = asymptotic_experiment(instance.network, spec, instance.settings)
    sys.stdout.write(rpt.emit_convergence(table))
    _write_csv(args.csv, rpt.convergence_csv(table))
    return 1 if table.failures else 0


def _cmd_check(instance: Instance, args: argparse.Namespace) -> int:
    checks = run_structural_checks(instance.network, instance.profile, instance.settings)
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        sys.stdout.write(f"{status}  {check.name}: {check.detail}\n")
    _write_csv(args.csv, rpt.checks_csv(checks))
    return 0 if all(check.passed for check in checks) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parlink",
        description="Wardrop, composite and atomic-splittable equilibria "
        "on parallel-link networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("instance", help="path to an instance file")
        p.add_argument("--csv", metavar="PATH", help="also write machine-readable CSV")
        p.set_defaults(handler=handler)
        return p

    p = add("solve-we", _cmd_solve_we, "Wardrop equilibrium of the nonatomic game")
    p.add_argument("--demand", type=float, default=1.0, help="total demand (default 1)")
    add("solve-ce", _cmd_solve_ce, "composite equilibrium of the instance's game")
    add("threshold", _cmd_threshold, "largest coalition size that leaves the WE intact")
    add("compare", _cmd_compare, "solve WE and CE and report the cost deltas")
    p = add("scan", _cmd_scan, "cost curves over a grid of single-coalition sizes")
    p.add_argument(
        "--coalition-grid",
        default=None,
        metavar="START:STOP:POINTS",
        help="grid of varied-coalition sizes (default: 21 points over the "
        "full feasible range)",
    )
    p = add("split", _cmd_split, "move weight from one coalition to the individuals")
    p.add_argument("--coalition", type=int, required=True, help="1-based coalition index")
    p.add_argument("--delta", type=float, required=True, help="withdrawn weight")
    p = add("converge", _cmd_converge, "vanishing-coalition convergence experiment")
    p.add_argument(
        "--mode",
        choices=("equal", "geometric", "individuals"),
        default="equal",
        help="how the residual mass is split at each step",
    )
    p.add_argument(
        "--steps",
        default="2,4,8,16,32,64,128",
        help="comma-separated piece counts (default 2,4,...,128)",
    )
    add("check", _cmd_check, "run the structural-invariant suite on the instance")
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        instance = load_instance(args.instance)
    except (InstanceFormatError, OSError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    try:
        return args.handler(instance, args)
    except ConvergenceError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    except RuntimeError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
