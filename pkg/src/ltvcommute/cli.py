# #############################################################################
# WARNING: If you modify features, API, or usage, you MUST update the
# documentation immediately.
# #############################################################################
"""
CLI entry point for ltvcommute.

Exit codes: 0 for success or a positive verdict, 1 for a negative verdict,
2 for usage and input errors.

.. note::
    If you modify features, API, or usage, you MUST update the documentation immediately.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from collections.abc import Callable, Sequence

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from ltvcommute.cascade import cascade_pair, make_grid
from ltvcommute.commute import (
    assess_pair,
    synthesize_first_from_second,
    synthesize_first_order_pair,
    synthesize_second_from_first,
    synthesize_second_order_pair,
)
from ltvcommute.constants import (
    CASCADE_CSV_HEADER,
    CSV_DIGITS,
    DEFAULT_CONSTANCY_TOL,
    DEFAULT_DEFECT_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_SOLVER_TOL,
    DEFAULT_T_SPAN,
    ENV_GRID,
    ENV_SOLVER_TOL,
    ENV_TOL,
    EXIT_NEGATIVE,
    EXIT_OK,
    EXIT_USAGE,
    IMPULSE_CSV_HEADER,
    METHOD_CLOSED_FORM,
    METHOD_ODE,
)
from ltvcommute.demo import run_section6, section6_lines
from ltvcommute.errors import LTVError
from ltvcommute.impulse import closed_form_response, impulse_response
from ltvcommute.render import chain_key_values, chain_renderable, pair_key_values, pair_table, to_text
from ltvcommute.system import (
    LTVSystem,
    describe,
    ensure_valid,
    format_system_file,
    load_system,
    write_system,
    write_text_atomic,
)
from ltvcommute.transitivity import verify_chain

logger = logging.getLogger("ltvcommute")

SYNTH_KINDS = ("first-order", "first-from-second", "second-order", "second-from-first")


def _add_numeric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tol",
        type=float,
        default=os.environ.get(ENV_TOL, str(DEFAULT_DEFECT_TOL)),
        help=f"Commutativity defect tolerance (default: {DEFAULT_DEFECT_TOL} or {ENV_TOL})",
    )
    parser.add_argument(
        "--solver-tol",
        type=float,
        default=os.environ.get(ENV_SOLVER_TOL, str(DEFAULT_SOLVER_TOL)),
        help=f"ODE solver and quadrature tolerance (default: {DEFAULT_SOLVER_TOL} or {ENV_SOLVER_TOL})",
    )
    parser.add_argument(
        "--constancy-tol",
        type=float,
        default=DEFAULT_CONSTANCY_TOL,
        help=f"Relative tolerance for constancy of extracted constants (default: {DEFAULT_CONSTANCY_TOL})",
    )
    _add_grid_flag(parser)


def _add_grid_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--grid",
        type=int,
        default=os.environ.get(ENV_GRID, str(DEFAULT_GRID_POINTS)),
        help=f"Number of uniform evaluation points (default: {DEFAULT_GRID_POINTS} or {ENV_GRID})",
    )


def _add_window_flags(parser: argparse.ArgumentParser, start: str = "--t0") -> None:
    parser.add_argument(start, type=float, default=None, help="Start of the window (default: t0 of the first system)")
    parser.add_argument(
        "--t-end",
        type=float,
        default=None,
        help=f"End of the window (default: start + {DEFAULT_T_SPAN}, clipped to the domains)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="ltvcommute",
        description="Commutativity and transitivity checks for linear time-varying systems",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Increase log verbosity (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="Decide whether two systems commute")
    check.add_argument("a", help="First system file")
    check.add_argument("b", help="Second system file")
    _add_numeric_flags(check)
    _add_window_flags(check)

    impulse = sub.add_parser("impulse", help="Write the impulse response h(t, tau) as CSV")
    impulse.add_argument("a", help="System file")
    _add_window_flags(impulse, start="--tau")
    _add_grid_flag(impulse)
    impulse.add_argument(
        "--solver-tol",
        type=float,
        default=os.environ.get(ENV_SOLVER_TOL, str(DEFAULT_SOLVER_TOL)),
        help=f"ODE solver and quadrature tolerance (default: {DEFAULT_SOLVER_TOL} or {ENV_SOLVER_TOL})",
    )
    impulse.add_argument(
        "--method",
        choices=(METHOD_ODE, METHOD_CLOSED_FORM),
        default=METHOD_ODE,
        help="ODE solution (any order) or closed form (first order only)",
    )
    impulse.add_argument("--out", default=None, help="CSV output path (default: stdout)")

    cascade = sub.add_parser("cascade", help="Write both cascade impulse responses and their defect as CSV")
    cascade.add_argument("a", help="First system file")
    cascade.add_argument("b", help="Second system file")
    _add_window_flags(cascade)
    _add_grid_flag(cascade)
    cascade.add_argument(
        "--solver-tol",
        type=float,
        default=os.environ.get(ENV_SOLVER_TOL, str(DEFAULT_SOLVER_TOL)),
        help=f"ODE solver and quadrature tolerance (default: {DEFAULT_SOLVER_TOL} or {ENV_SOLVER_TOL})",
    )
    cascade.add_argument("--out", default=None, help="CSV output path (default: stdout)")

    synth = sub.add_parser("synth", help="Synthesize a commutative partner system")
    synth.add_argument("kind", choices=SYNTH_KINDS, help="Which partner to build")
    synth.add_argument("src", help="Source system file")
    synth.add_argument("--k2", type=float, default=1.0, help="k2 (second-order only, default: 1)")
    synth.add_argument("--k1", "--l1", dest="k1", type=float, required=True, help="k1 (l1 for second-from-first)")
    synth.add_argument("--k0", "--l0", dest="k0", type=float, default=0.0, help="k0 (l0 for second-from-first, default: 0)")
    synth.add_argument("--free", "--c0", dest="free", type=float, default=0.0, help="Bracket constant C0 (default: 0)")
    synth.add_argument("--name", default="", help="Name of the new system")
    synth.add_argument("--out", default=None, help="System file output path (default: stdout)")

    chain = sub.add_parser("transitivity", help="Verify transitivity on a chain A - B - C")
    chain.add_argument("a", help="First system file")
    chain.add_argument("b", help="Middle system file")
    chain.add_argument("c", help="Last system file")
    _add_numeric_flags(chain)
    _add_window_flags(chain)

    demo = sub.add_parser("demo", help="Reproduce a worked example")
    demo.add_argument("example", choices=("section6",), help="Example to run")
    _add_numeric_flags(demo)
    demo.add_argument("--out", default=None, help="Also write the report to this path")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _window(systems: Sequence[LTVSystem], start: float | None, end: float | None) -> tuple[float, float]:
    t0 = systems[0].t0 if start is None else start
    if end is None:
        end = min(t0 + DEFAULT_T_SPAN, *(s.domain[1] for s in systems))
    if end <= t0:
        raise ValueError(f"Empty window [{t0!r}, {end!r}]")
    return t0, end


def _load(path: str) -> LTVSystem:
    system = load_system(path)
    logger.info("Loaded %s", describe(system))
    return system


def _csv_text(header: Sequence[str], rows: np.ndarray) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{value:.{CSV_DIGITS}g}" for value in row])
    return buffer.getvalue()


def _emit(console: Console, text: str, out: str | None) -> None:
    if out is None:
        console.out(text, end="", highlight=False)
    else:
        write_text_atomic(out, text)
        logger.info("Wrote %s", out)


def _print_lines(console: Console, lines: Sequence[str]) -> None:
    for line in lines:
        console.out(line, highlight=False)


def _cmd_check(args: argparse.Namespace, console: Console) -> int:
    a, b = _load(args.a), _load(args.b)
    t0, t_end = _window((a, b), args.t0, args.t_end)
    report = assess_pair(a, b, make_grid(t0, t_end, args.grid), args.constancy_tol, args.tol, args.solver_tol, t0)
    console.print(pair_table(report, f"({a.label}, {b.label})"))
    _print_lines(console, pair_key_values(report))
    return EXIT_OK if report.commutative else EXIT_NEGATIVE


def _cmd_impulse(args: argparse.Namespace, console: Console) -> int:
    a = _load(args.a)
    tau, t_end = _window((a,), args.tau, args.t_end)
    grid = make_grid(tau, t_end, args.grid)
    if args.method == METHOD_CLOSED_FORM:
        values = closed_form_response(a, tau, grid, args.solver_tol)(grid)
    else:
        values = impulse_response(a, tau, t_end, args.solver_tol)(grid)
    rows = np.column_stack([np.full(len(grid), tau), grid, values])
    _emit(console, _csv_text(IMPULSE_CSV_HEADER, rows), args.out)
    return EXIT_OK


def _cmd_cascade(args: argparse.Namespace, console: Console) -> int:
    a, b = _load(args.a), _load(args.b)
    t0, t_end = _window((a, b), args.t0, args.t_end)
    grid = make_grid(t0, t_end, args.grid)
    ab, ba = cascade_pair(a, b, t0, grid, args.solver_tol)
    rows = np.column_stack([np.full(len(grid), t0), grid, ab.values, ba.values, np.abs(ab.values - ba.values)])
    _emit(console, _csv_text(CASCADE_CSV_HEADER, rows), args.out)
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace, console: Console) -> int:
    src = _load(args.src)
    builders: dict[str, Callable[[], LTVSystem]] = {
        "first-order": lambda: synthesize_first_order_pair(src, args.k1, args.k0, args.name),
        "first-from-second": lambda: synthesize_first_from_second(src, args.k1, args.k0, args.name),
        "second-order": lambda: synthesize_second_order_pair(src, args.k2, args.k1, args.k0, args.name),
        "second-from-first": lambda: synthesize_second_from_first(src, args.k1, args.k0, args.free, args.name),
    }
    partner = ensure_valid(builders[args.kind]())
    if args.out is None:
        _emit(console, format_system_file(partner), None)
    else:
        write_system(partner, args.out)
        logger.info("Wrote %s", args.out)
    return EXIT_OK


def _cmd_transitivity(args: argparse.Namespace, console: Console) -> int:
    a, b, c = _load(args.a), _load(args.b), _load(args.c)
    t0, t_end = _window((a, b, c), args.t0, args.t_end)
    grid = make_grid(t0, t_end, args.grid)
    chain = verify_chain(a, b, c, grid, args.constancy_tol, args.tol, args.solver_tol, t0)
    console.print(chain_renderable(chain, (a.label, b.label, c.label)))
    _print_lines(console, chain_key_values(chain))
    return EXIT_OK if chain.transitive else EXIT_NEGATIVE


def _cmd_demo(args: argparse.Namespace, console: Console) -> int:
    result = run_section6(points=args.grid, tol=args.constancy_tol, defect_tol=args.tol, solver_tol=args.solver_tol)
    tables = chain_renderable(result.chain)
    lines = section6_lines(result)
    console.print(tables)
    _print_lines(console, lines)
    if args.out is not None:
        write_text_atomic(args.out, to_text(tables) + "\n".join(lines) + "\n")
        logger.info("Wrote %s", args.out)
    return EXIT_OK if result.chain.transitive else EXIT_NEGATIVE


_COMMANDS: dict[str, Callable[[argparse.Namespace, Console], int]] = {
    "check": _cmd_check,
    "impulse": _cmd_impulse,
    "cascade": _cmd_cascade,
    "synth": _cmd_synth,
    "transitivity": _cmd_transitivity,
    "demo": _cmd_demo,
}


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the ltvcommute command line.

    Parameters
    ----------
    argv : Sequence[str], optional
        Arguments without the program name, by default ``sys.argv[1:]``.

    Returns
    -------
    int
        The exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args.verbose)
    console = Console()
    try:
        return _COMMANDS[args.command](args, console)
    except (LTVError, RuntimeError, ValueError, OSError) as e:
        Console(stderr=True).print(f"ltvcommute {args.command}: {e}", markup=False, highlight=False)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
