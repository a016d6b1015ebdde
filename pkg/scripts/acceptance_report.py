#!/usr/bin/env python3
"""Run the acceptance checks end-to-end and print a summary table.

Single command, no interaction:

    1. Uniqueness below sigma = 1.38 (random amplitudes, L <= 6)
    2. Twofold ambiguity with three partial waves (scan --L 2)
    3. Solution-count bound over scans L = 1..6
    4. Conjugate closure f -> -f*
    5. Phase recovery in the contraction regime
    6. Phase equation as an identity for exact amplitudes
    7. Unitary tail construction and its asymptotics
    8. Dispersive / absorptive order split
    9. Continuity of the cross section in lambda
   10. Legendre bounds outside the unit disk
   11. Descent against an independent multistart search (L <= 3)

Usage:
    python scripts/acceptance_report.py               # default sizes
    python scripts/acceptance_report.py --quick       # reduced sample counts
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Callable

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from scipy.optimize import least_squares

from psa.amplitude import (
    angular_modulus,
    coefficients_from_waves,
    conjugate_ambiguity,
    cross_section_coefficients,
    shifts_from_waves,
    waves_from_shifts,
)
from psa.enumerator import descend
from psa.legendre import check_bounds_inequality, gauss_rule
from psa.models import PartialWaves, PhaseShifts
from psa.phase_solver import (
    contraction_sup,
    equation_residual,
    exact_phase,
    fixed_point_solve,
    waves_from_phase,
)
from psa.regularize import (
    build_tail,
    cross_section_sensitivity,
    extend_amplitude,
    tail_re,
    tail_re_asymptotic,
    verify_da_split,
)
from psa.run_log import RunRecorder
from psa.scan import sample_shifts, sample_shifts_with_sigma, scan

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)-8s %(message)s",
    datefmt="%H:%M:%S",
)

console = Console()


def check_uniqueness(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    failures = 0
    for _ in range(n):
        L = int(rng.integers(1, 7))
        delta = sample_shifts_with_sigma(L, float(rng.uniform(0.3, 1.3)), rng)
        waves = waves_from_shifts(PhaseShifts(delta))
        result = descend(cross_section_coefficients(waves))
        if len(result) != 1:
            failures += 1
            continue
        # δ_L = π/2 reports the mirror image -f* instead
        found = result.solutions[0].f
        gap = min(np.max(np.abs(found - waves.f)), np.max(np.abs(found + np.conj(waves.f))))
        failures += int(gap > 1e-8)
    return failures == 0, f"{n - failures}/{n} unique and recovered"


def check_crichton(samples: int) -> tuple[bool, str]:
    atlas = scan(2, samples, seed=7)
    ok = any(
        len(a.solutions) == 2
        and a.separation > 1e-3
        and all(r < 1e-8 for r in a.solutions.residuals)
        for a in atlas.located
    )
    return ok, f"{len(atlas.located)} located from {samples} samples"


def check_count_bound(samples: int) -> tuple[bool, str]:
    total = violations = printed = 0
    for L in range(1, 7):
        atlas = scan(L, samples, seed=100 + L, refine=0)
        total += len(atlas.samples)
        violations += atlas.branch_bound_violations
        printed += atlas.bound_violations
    return violations == 0, f"{total} samples, {violations} over 2^M, {printed} over 2^(M-1)"


def check_conjugates(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(n):
        L = int(rng.integers(1, 5))
        delta = sample_shifts_with_sigma(L, float(rng.uniform(0.3, 3.0)), rng)
        coeffs = cross_section_coefficients(waves_from_shifts(PhaseShifts(delta)))
        for solution in descend(coeffs).solutions:
            mirror = coefficients_from_waves(conjugate_ambiguity(solution).f)
            worst = max(worst, float(np.max(np.abs(mirror - coeffs.C))))
    return worst < 1e-12, f"max |dC| = {worst:.2e}"


def _contraction_amplitudes(n: int, rng: np.random.Generator) -> list[PartialWaves]:
    rule = gauss_rule(64)
    found: list[PartialWaves] = []
    while len(found) < n:
        L = int(rng.integers(1, 7))
        ratio = rng.uniform(0.05, 0.15)
        delta = rng.uniform(0.1, 0.3) * ratio ** np.arange(L + 1)
        waves = waves_from_shifts(PhaseShifts(delta))
        if contraction_sup(angular_modulus(waves, rule), n_grid=41).sup_ratio < 0.79:
            found.append(waves)
    return found


def check_phase_recovery(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    rule = gauss_rule(64)
    worst_shift = worst_residual = worst_factor = 0.0
    for waves in _contraction_amplitudes(n, rng):
        F = angular_modulus(waves, rule)
        result = fixed_point_solve(F)
        recovered = shifts_from_waves(waves_from_phase(F, result.phase, waves.L))
        truth = shifts_from_waves(waves)
        worst_shift = max(worst_shift, float(np.max(np.abs(recovered.delta - truth.delta))))
        worst_residual = max(worst_residual, equation_residual(F, result.phase))
        changes = [c for c in result.changes if c > 1e-12]
        for a, b in zip(changes[3:], changes[4:]):
            worst_factor = max(worst_factor, b / a)
    ok = worst_shift < 1e-6 and worst_residual < 1e-9 and worst_factor <= 0.9
    return ok, (
        f"max |d delta| = {worst_shift:.1e}, residual {worst_residual:.1e}, "
        f"factor {worst_factor:.2f}"
    )


def check_identity(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    rule = gauss_rule(64)
    worst = 0.0
    for waves in _contraction_amplitudes(n, rng):
        F = angular_modulus(waves, rule)
        worst = max(worst, equation_residual(F, exact_phase(waves, rule)))
    return worst < 1e-8, f"max residual {worst:.1e}"


def check_tail() -> tuple[bool, str]:
    tail = build_tail(0, 0.4)
    unitarity = float(np.max(np.abs(tail.im_r - tail.re_r**2 - tail.im_r**2)))
    ratio = tail_re(20, 0.4) / tail_re_asymptotic(20, 0.4)
    return unitarity < 1e-14 and 0.975 <= ratio <= 0.99, (
        f"unitarity {unitarity:.1e}, ratio at l=20 {ratio:.4f}, lmax {tail.lmax}"
    )


def check_order_split() -> tuple[bool, str]:
    extended = extend_amplitude(PartialWaves([1j]), 0.4, lmax=50)
    report = verify_da_split(extended, start=1)
    rho_d, rho_a = report.dispersive.rho, report.absorptive.rho
    ok = 0.85 <= rho_d <= 1.25 and 0.40 <= rho_a <= 0.60
    return ok, f"rho_D = {rho_d:.3f}, rho_A = {rho_a:.3f}"


def check_continuity() -> tuple[bool, str]:
    waves = waves_from_shifts(PhaseShifts([0.5, 0.3, 0.1]))
    report = cross_section_sensitivity(waves)
    return report.stable, "K = " + ", ".join(f"{k:.4f}" for k in report.slopes)


def check_bounds(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    violations = 0
    for _ in range(n):
        modulus = rng.uniform(1.01, 5.0)
        z = modulus * np.exp(1j * rng.uniform(0, 2 * np.pi))
        report = check_bounds_inequality(int(rng.integers(0, 31)), z)
        violations += int(not (report.lower_ok and report.upper_ok))
    return violations == 0, f"{n} samples, {violations} violations"


def _multistart_solutions(C: np.ndarray, L: int, starts: int, seed: int) -> list[np.ndarray]:
    lower = np.full(L + 1, -np.pi / 2)
    upper = np.full(L + 1, np.pi / 2)
    lower[L] = 1e-3

    def mismatch(delta: np.ndarray) -> np.ndarray:
        return coefficients_from_waves(np.sin(delta) * np.exp(1j * delta)) - C

    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    for start in rng.uniform(lower + 1e-6, upper - 1e-6, size=(starts, L + 1)):
        fit = least_squares(
            mismatch, start, bounds=(lower, upper), xtol=1e-14, ftol=1e-14, gtol=1e-14
        )
        if np.max(np.abs(fit.fun)) > 1e-10:
            continue
        waves = np.sin(fit.x) * np.exp(1j * fit.x)
        if all(np.max(np.abs(waves - other)) > 1e-6 for other in found):
            found.append(waves)
    return found


def check_completeness(n: int, rng: np.random.Generator) -> tuple[bool, str]:
    mismatched = multiple = 0
    for i in range(n):
        delta = sample_shifts(1 + i % 3, rng)
        coeffs = cross_section_coefficients(waves_from_shifts(PhaseShifts(delta)))
        found = [s.f for s in descend(coeffs).solutions]
        oracle = _multistart_solutions(coeffs.C, delta.size - 1, starts=200, seed=i)
        same = len(found) == len(oracle) and all(
            min(np.max(np.abs(w - f)) for f in found) < 1e-6 for w in oracle
        )
        mismatched += not same
        multiple += len(found) > 1
    return mismatched == 0, f"{n - mismatched}/{n} sets equal, {multiple} with several solutions"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="psa acceptance report.")
    parser.add_argument("--quick", action="store_true", help="Reduced sample counts.")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default=".", help="Directory for the run manifest.")
    args = parser.parse_args(argv)

    scale = 0.1 if args.quick else 1.0
    rng = np.random.default_rng(args.seed)
    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("Uniqueness < 1.38", lambda: check_uniqueness(max(10, int(100 * scale)), rng)),
        ("Three-wave ambiguity", lambda: check_crichton(max(50, int(400 * scale)))),
        ("Count bound", lambda: check_count_bound(max(50, int(1700 * scale)))),
        ("Conjugate closure", lambda: check_conjugates(max(10, int(50 * scale)), rng)),
        ("Phase recovery", lambda: check_phase_recovery(max(3, int(20 * scale)), rng)),
        ("Phase identity", lambda: check_identity(max(3, int(20 * scale)), rng)),
        ("Unitary tail", check_tail),
        ("Order split", check_order_split),
        ("Lambda continuity", check_continuity),
        ("Legendre bounds", lambda: check_bounds(500, rng)),
        ("Completeness", lambda: check_completeness(10, rng)),
    ]

    console.print(
        Panel(
            "[bold]Phase-shift analysis acceptance run[/]\n"
            f"seed={args.seed}, {'quick' if args.quick else 'full'} sizes",
            border_style="cyan",
        )
    )
    summary = Table(title="Acceptance", show_lines=True, title_style="bold green")
    summary.add_column("Check", style="bold")
    summary.add_column("Result")
    summary.add_column("Detail", style="dim")
    summary.add_column("Time", justify="right")

    failed = 0
    argv_list = list(sys.argv[1:] if argv is None else argv)
    with RunRecorder("acceptance", argv_list, args.out, parameters=vars(args)) as rec:
        for name, check in checks:
            t0 = time.perf_counter()
            with rec.phase_ctx(name):
                ok, detail = check()
            failed += not ok
            verdict = "[green]pass[/]" if ok else "[red]FAIL[/]"
            summary.add_row(name, verdict, detail, f"{time.perf_counter() - t0:.1f}s")
        if failed:
            rec.fail(1, f"{failed} check(s) failed")

    console.print(summary)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
