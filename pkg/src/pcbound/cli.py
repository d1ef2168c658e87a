"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 internal consistency failure,
3 certification failure.  ``PCBOUND_THREADS`` sets the default worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import imc
from .certified import InconclusiveSolve
from .imc import MAX_ORDER, ConsistencyError
from .mc_edge import estimate_pc_mc, plateau_scan
from .sdtcp import config_leq, coupling_violations, initial_config_canonical, initial_config_from_label
from .solver import BoundTable, BracketError, bracket_root, convergence_table, grid_fraction, mixed_grids

EXIT_OK, EXIT_USAGE, EXIT_CONSISTENCY, EXIT_CERT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PCBOUND_THREADS", "1")))
    except ValueError:
        return 1


def _count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}")
    if v < 1 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return int(v)


def _grid(text: str) -> Fraction:
    try:
        return grid_fraction(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _p_list(text: str) -> list[float]:
    try:
        ps = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad probability list: {text}")
    if not ps or any(not 0.0 < p <= 1.0 for p in ps):
        raise argparse.ArgumentTypeError("probabilities must lie in (0, 1]")
    return ps


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list: {text}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pcbound", description="Certified lower bounds for oriented bond percolation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", help="certified brackets of the window-chain roots")
    g = b.add_mutually_exclusive_group()
    g.add_argument("--max-order", type=int, help="table for orders 0..I")
    g.add_argument("--order", "-i", type=int, help="a single order")
    b.add_argument("--grid", type=_grid, default=None, help="grid step 10^-k (default 1e-6)")
    b.add_argument("--mixed-grids", action="store_true", help="1e-6 up to order 8, 1e-5 beyond")
    b.add_argument("--refine", type=int, default=0, help="extra bisections below the grid")
    b.add_argument("--format", choices=["pretty", "csv", "json"], default="pretty")
    b.add_argument("--out")

    d = sub.add_parser("dump", help="exact transition matrix and drift vector")
    d.add_argument("--order", "-i", type=int, required=True)
    d.add_argument("--format", choices=["pretty", "json"], default="json")
    d.add_argument("--out")

    s = sub.add_parser("simulate", help="Monte Carlo plateau runs")
    s.add_argument("--order", "-i", type=int, required=True)
    s.add_argument("--p", type=_p_list, help="comma-separated probabilities")
    s.add_argument("--steps", type=_count, default=10**6)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--estimate", action="store_true", help="bisect on p using plateau verdicts")
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--budget", type=_count, default=10**9)
    s.add_argument("--format", choices=["pretty", "csv", "json"], default="pretty")
    s.add_argument("--out", help="summary file; trajectories go next to it")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default $PCBOUND_THREADS or 1)")

    c = sub.add_parser("couple-check", help="pointwise coupling inequalities on shared bonds")
    c.add_argument("--seeds", type=_count, default=100)
    c.add_argument("--steps", type=_count, default=200)
    c.add_argument("--seed-base", type=int, default=0)
    c.add_argument("--order", "-i", type=_int_list, default=[1, 3], help="two orders for the order coupling")
    c.add_argument("--p", type=_p_list, default=[0.5, 0.7], help="two probabilities for the p coupling")
    c.add_argument("--labels", type=_int_list, default=[0, 3], help="two window labels for the initial coupling")
    c.add_argument("--at-p", type=float, default=0.6, help="p for the order and initial couplings")
    c.add_argument("--at-order", type=int, default=2, help="order for the p and initial couplings")
    return ap


def cmd_bound(args) -> int:
    if args.grid is not None and args.mixed_grids:
        raise UsageError("--grid and --mixed-grids are exclusive")
    if args.refine < 0:
        raise UsageError("--refine must be nonnegative")
    step = args.grid if args.grid is not None else Fraction(1, 10**6)
    if args.order is not None:
        if not 0 <= args.order <= MAX_ORDER:
            raise UsageError(f"order must lie in 0..{MAX_ORDER}")
        grid = mixed_grids(args.order)[args.order] if args.mixed_grids else step
        table = BoundTable([bracket_root(args.order, grid, args.refine)])
    else:
        top = 9 if args.max_order is None else args.max_order
        if not 0 <= top <= MAX_ORDER:
            raise UsageError(f"max order must lie in 0..{MAX_ORDER}")
        grid = mixed_grids(top) if args.mixed_grids else step
        table = convergence_table(top, grid, args.refine)
    text = {"pretty": table.to_text, "csv": table.to_csv, "json": table.to_json}[args.format]()
    _emit(text, args.out)
    if args.out or args.format != "pretty":
        print(table.final_line())
    return EXIT_OK


def cmd_dump(args) -> int:
    if not 0 <= args.order <= MAX_ORDER:
        raise UsageError(f"order must lie in 0..{MAX_ORDER}")
    text = imc.to_json(args.order) if args.format == "json" else imc.pretty(args.order)
    _emit(text if text.endswith("\n") else text + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.order < 0:
        raise UsageError("order must be nonnegative")
    if not args.estimate and not args.p:
        raise UsageError("give --p or --estimate")
    lines = []
    if args.p:
        workers = args.jobs or _default_workers()
        scan = plateau_scan(args.order, args.p, args.steps, args.seed, keep=bool(args.out), workers=workers)
        if args.out:
            base = Path(args.out)
            for tr in scan.trajectories:
                base.with_name(f"{base.stem}_p{tr.p!r}.csv").write_text(tr.to_csv())
        if args.format == "json":
            summary = scan.to_json() + "\n"
        elif args.format == "csv":
            summary = scan.to_csv()
        else:
            summary = "".join(
                f"p={pt.p!r}  n={pt.n_steps}  edge/n={pt.speed:+.6f}  plateau={pt.plateau:+.6f}  "
                f"stderr={pt.stderr:.2e}  {pt.verdict}\n" for pt in scan.points)
        lines.append(summary)
    if args.estimate:
        est = estimate_pc_mc(args.order, args.tol, args.budget, args.seed)
        tag = "" if est.complete else "  (incomplete)"
        lines.append(f"p_c^({args.order}) in [{est.p_lo:.6f}, {est.p_hi:.6f}]  estimate {est.estimate:.6f}{tag}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_couple_check(args) -> int:
    if len(args.order) != 2 or len(args.p) != 2 or len(args.labels) != 2:
        raise UsageError("--order, --p and --labels each take two values")
    seeds = range(args.seed_base, args.seed_base + args.seeds)
    canon = initial_config_canonical()
    i_small, i_big = sorted(args.order)
    p_small, p_big = sorted(args.p)
    lab_lo, lab_hi = args.labels
    try:
        init_lo = initial_config_from_label(args.at_order, lab_lo)
        init_hi = initial_config_from_label(args.at_order, lab_hi)
    except ValueError as exc:
        raise UsageError(str(exc))
    if not config_leq(init_lo, init_hi):
        raise UsageError("the first label must be dominated by the second")
    suites = [
        (f"order {i_big} <= order {i_small}", (i_big, args.at_p, canon), (i_small, args.at_p, canon)),
        (f"p={p_small} <= p={p_big}", (args.at_order, p_small, canon), (args.at_order, p_big, canon)),
        (f"label {lab_lo} <= label {lab_hi}", (args.at_order, args.at_p, init_lo), (args.at_order, args.at_p, init_hi)),
    ]
    failed = 0
    for name, lower, upper in suites:
        bad = coupling_violations(lower, upper, seeds, args.steps)
        print(f"{name}: {len(bad)} violations over {args.seeds} seeds x {args.steps} steps")
        for v in bad[:5]:
            print(f"  seed={v.seed} step={v.step} site={v.site}")
        failed += bool(bad)
    return EXIT_CONSISTENCY if failed else EXIT_OK


COMMANDS = {"bound": cmd_bound, "dump": cmd_dump, "simulate": cmd_simulate, "couple-check": cmd_couple_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pcbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConsistencyError as exc:
        print(f"pcbound: consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (BracketError, InconclusiveSolve) as exc:
        print(f"pcbound: certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
