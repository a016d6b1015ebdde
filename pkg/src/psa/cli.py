"""Command-line entry point: ``psa <command> [options]``.

Commands
--------
forward      delta.json  -> xsec.json, xsec_grid.csv (cos_theta,F2), F_grid.csv (|f|)
enumerate    xsec.json   -> solutions.json
phase-solve  F_grid.csv  -> phi.csv, trace.json
contraction  F_grid.csv  -> report.json
regularize   delta.json  -> extended.json
order        coeffs.json -> order.json
scan                     -> ambiguity_atlas.json

Every command writes ``<command>.manifest.json`` into ``--out``.

Exit codes: 0 ok, 2 malformed input or bad parameters, 3 empty solution set,
4 invalid cross section or non-positive F, 5 too many solutions,
6 no principal-branch phase update, 7 phase iteration did not converge.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from rich.console import Console
from rich.table import Table

from . import __version__, config
from .amplitude import (
    angular_modulus,
    cross_section_coefficients,
    reconstruct_cross_section,
    shifts_from_waves,
    total_cross_section,
    waves_from_shifts,
)
from .codec import (
    InputValidationError,
    coefficients_from_dict,
    coefficients_to_dict,
    dump_json,
    load_json,
    magnitudes_from_dict,
    phase_shifts_from_dict,
    read_angular_csv,
    waves_to_dict,
    write_grid_csv,
)
from .enumerator import DescentConfig, InvalidCrossSection, SolutionOverflow, descend
from .legendre import gauss_rule
from .phase_solver import (
    MaxIterExceeded,
    NonpositiveF,
    SinOutOfRange,
    contraction_sup,
    fixed_point_solve,
)
from .regularize import (
    AllZeroWindow,
    build_tail,
    extend_amplitude,
    order_estimate,
    verify_da_split,
)
from .run_log import RunRecorder
from .scan import scan

LOGGER = logging.getLogger(__name__)

console = Console(stderr=True)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EMPTY = 3
EXIT_INVALID = 4
EXIT_OVERFLOW = 5
EXIT_SIN_RANGE = 6
EXIT_MAX_ITER = 7

# Most specific first: the domain errors subclass ValueError.
_EXIT_CODES: list[tuple[type[BaseException], int]] = [
    (InputValidationError, EXIT_USAGE),
    (InvalidCrossSection, EXIT_INVALID),
    (NonpositiveF, EXIT_INVALID),
    (SolutionOverflow, EXIT_OVERFLOW),
    (SinOutOfRange, EXIT_SIN_RANGE),
    (MaxIterExceeded, EXIT_MAX_ITER),
    (ValueError, EXIT_USAGE),
]


def _positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {raw!r}") from exc
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {raw}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psa",
        description="Partial-wave phase-shift analysis at a single energy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default=".", help="Output directory (default: .).")
        return p

    p = add("forward", "Phase shifts -> cross-section coefficients and grids.")
    p.add_argument("input", help='JSON file {"delta": [...]} (radians).')
    p.add_argument(
        "--nodes",
        type=_positive_int,
        default=config.DEFAULT_NODES,
        help=f"Gauss nodes for the CSV grids (default: {config.DEFAULT_NODES}).",
    )

    p = add("enumerate", "Cross-section coefficients -> every unitary amplitude.")
    p.add_argument("input", help='JSON file {"C": [...]}.')
    p.add_argument("--tol", type=_positive_float, default=config.TOL_RESIDUAL)
    p.add_argument("--max-solutions", type=_positive_int, default=config.MAX_SOLUTIONS)
    p.add_argument(
        "--no-sigma-prune",
        action="store_true",
        help="Explore both intersections at every step.",
    )

    p = add("phase-solve", "Solve for the phase of the amplitude from F = |f|.")
    p.add_argument("input", help="CSV cos_theta,value at Gauss nodes.")
    p.add_argument("--max-iter", type=_positive_int, default=500)
    p.add_argument("--tol", type=_positive_float, default=1e-10)

    p = add("contraction", "Evaluate sup F(13)F(23)/F(12).")
    p.add_argument("input", help="CSV cos_theta,value at Gauss nodes.")
    p.add_argument("--grid", type=_positive_int, default=61)

    p = add("regularize", "Append the unitary tail to an amplitude.")
    p.add_argument("input", help='JSON file {"delta": [...]} (radians).')
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--lmax", type=_positive_int, default=None)
    p.add_argument("--window", type=_positive_int, default=20)

    p = add("order", "Estimate the order of an entire function from its coefficients.")
    p.add_argument("input", help='JSON file {"coefficients": [...]}.')
    p.add_argument("--window", type=_positive_int, default=20)

    p = add("scan", "Sample phase shifts and collect ambiguous cross sections.")
    p.add_argument("--L", dest="L", type=int, default=2)
    p.add_argument("--grid", type=_positive_int, default=200, help="Number of samples.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive_float, default=config.TOL_RESIDUAL)
    return parser


# ── Commands ─────────────────────────────────────────────────────────────────


def _cmd_forward(args: argparse.Namespace, rec: RunRecorder) -> int:
    out = Path(args.out)
    rec.add_input("delta", args.input)
    shifts = phase_shifts_from_dict(load_json(args.input))
    with rec.phase_ctx("Forward model", detail=f"L={shifts.L}"):
        waves = waves_from_shifts(shifts)
        coeffs = cross_section_coefficients(waves)
        rule = gauss_rule(args.nodes)
        f2 = reconstruct_cross_section(coeffs, rule.nodes)
        modulus = angular_modulus(waves, rule)
    document = coefficients_to_dict(coeffs)
    document["sigma"] = total_cross_section(waves)
    rec.add_output("xsec", dump_json(document, out / "xsec.json"))
    rec.add_output("xsec_grid", write_grid_csv(out / "xsec_grid.csv", rule.nodes, f2, "F2"))
    rec.add_output("F_grid", write_grid_csv(out / "F_grid.csv", rule.nodes, modulus.values))
    console.print(f"sigma_tot = {document['sigma']:.12g}, {coeffs.C.size} coefficients")
    return EXIT_OK


def _cmd_enumerate(args: argparse.Namespace, rec: RunRecorder) -> int:
    rec.add_input("xsec", args.input)
    coeffs = coefficients_from_dict(load_json(args.input))
    cfg = DescentConfig(
        tol_residual=args.tol,
        max_solutions=args.max_solutions,
        prune_by_sigma=not args.no_sigma_prune,
    )
    with rec.phase_ctx("Descent"):
        result = descend(coeffs, cfg)
    rec.add_output("solutions", dump_json(result.to_dict(), Path(args.out) / "solutions.json"))

    table = Table(title=f"{len(result)} solution(s), sigma = {result.sigma:.10g}")
    table.add_column("Path", style="bold")
    table.add_column("Residual", justify="right")
    table.add_column("delta", style="dim")
    for waves, residual, path in zip(result.solutions, result.residuals, result.branch_paths):
        delta = shifts_from_waves(waves).delta
        table.add_row(path or "-", f"{residual:.2e}", ", ".join(f"{d:.6f}" for d in delta))
    console.print(table)
    if not result.solutions:
        rec.fail(EXIT_EMPTY, "no unitary amplitude reproduces the cross section")
        return EXIT_EMPTY
    return EXIT_OK


def _cmd_phase_solve(args: argparse.Namespace, rec: RunRecorder) -> int:
    out = Path(args.out)
    rec.add_input("F_grid", args.input)
    F = read_angular_csv(args.input)
    with rec.phase_ctx("Fixed point", detail=f"{F.rule.order} nodes"):
        try:
            result = fixed_point_solve(F, max_iter=args.max_iter, tol=args.tol)
        except MaxIterExceeded as exc:
            trace = {"changes": exc.trace, "converged": False, "iters": len(exc.trace)}
            rec.add_output("trace", dump_json(trace, out / "trace.json"))
            raise
    rec.add_output("phi", write_grid_csv(out / "phi.csv", F.rule.nodes, result.phase.phi))
    rec.add_output("trace", dump_json(result.trace_dict(), out / "trace.json"))
    console.print(f"Converged in {result.iterations} iterations")
    return EXIT_OK


def _cmd_contraction(args: argparse.Namespace, rec: RunRecorder) -> int:
    rec.add_input("F_grid", args.input)
    F = read_angular_csv(args.input)
    with rec.phase_ctx("Contraction sup", detail=f"grid={args.grid}"):
        report = contraction_sup(F, n_grid=args.grid)
    rec.add_output("report", dump_json(report.to_dict(), Path(args.out) / "report.json"))
    console.print(
        f"sup ratio = {report.sup_ratio:.6g} "
        f"(< 0.79: {report.condition_079}, < 0.89: {report.condition_089})"
    )
    return EXIT_OK


def _cmd_regularize(args: argparse.Namespace, rec: RunRecorder) -> int:
    rec.add_input("delta", args.input)
    waves = waves_from_shifts(phase_shifts_from_dict(load_json(args.input)))
    with rec.phase_ctx("Tail", detail=f"lambda={args.lam}"):
        tail = build_tail(waves.L, args.lam, args.lmax)
        extended = extend_amplitude(waves, args.lam, args.lmax)
    document = tail.to_dict()
    document["f"] = waves_to_dict(extended)["f"]
    try:
        document["orders"] = verify_da_split(extended, tail.start, args.window).to_dict()
    except AllZeroWindow as exc:
        LOGGER.warning("Order split skipped: %s", exc)
    rec.add_output("extended", dump_json(document, Path(args.out) / "extended.json"))
    console.print(f"Tail l = {tail.start}..{tail.lmax}")
    return EXIT_OK


def _cmd_order(args: argparse.Namespace, rec: RunRecorder) -> int:
    rec.add_input("coefficients", args.input)
    magnitudes = magnitudes_from_dict(load_json(args.input))
    estimate = order_estimate(magnitudes, window=args.window)
    rec.add_output("order", dump_json(estimate.to_dict(), Path(args.out) / "order.json"))
    console.print(f"rho = {estimate.rho:.6g} ({estimate.flag})")
    return EXIT_OK


def _cmd_scan(args: argparse.Namespace, rec: RunRecorder) -> int:
    cfg = DescentConfig(tol_residual=args.tol)
    with rec.phase_ctx("Scan", detail=f"L={args.L}, {args.grid} samples"):
        atlas = scan(args.L, args.grid, seed=args.seed, cfg=cfg)
    path = dump_json(atlas.to_dict(), Path(args.out) / "ambiguity_atlas.json")
    rec.add_output("atlas", path)

    counts: dict[int, int] = {}
    for sample in atlas.samples:
        counts[sample.count] = counts.get(sample.count, 0) + 1
    table = Table(title=f"Scan L={args.L}, seed={args.seed}")
    table.add_column("Solutions", justify="right")
    table.add_column("Samples", justify="right")
    for count in sorted(counts):
        table.add_row(str(count), str(counts[count]))
    console.print(table)
    console.print(
        f"{len(atlas.located)} located ambiguities, "
        f"{atlas.bound_violations} bound violations, "
        f"{atlas.branch_bound_violations} branch-bound violations"
    )
    return EXIT_OK


_COMMANDS = {
    "forward": _cmd_forward,
    "enumerate": _cmd_enumerate,
    "phase-solve": _cmd_phase_solve,
    "contraction": _cmd_contraction,
    "regularize": _cmd_regularize,
    "order": _cmd_order,
    "scan": _cmd_scan,
}


def _exit_code(exc: BaseException) -> int:
    for kind, code in _EXIT_CODES:
        if isinstance(exc, kind):
            return code
    raise exc


def _parameters(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("command", "input", "out")}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)-8s %(message)s",
        datefmt="%H:%M:%S",
    )
    handler = _COMMANDS[args.command]
    with RunRecorder(args.command, argv, args.out, parameters=_parameters(args)) as rec:
        try:
            code = handler(args, rec)
        except tuple(kind for kind, _ in _EXIT_CODES) as exc:
            code = _exit_code(exc)
            console.print(f"[red]error:[/] {exc}")
            LOGGER.error("%s failed (exit %d): %s", args.command, code, exc)
            rec.fail(code, f"{type(exc).__name__}: {exc}")
    return code


if __name__ == "__main__":
    sys.exit(main())
