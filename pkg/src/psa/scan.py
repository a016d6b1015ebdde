"""Ambiguity atlas: run the descent over sampled phase-shift tuples.

Genuine (Crichton-type) ambiguities sit on a lower-dimensional subset of
shift space, so uniform sampling essentially never lands on one. They are
located through the zeros of the amplitude instead: f(x) is a polynomial of
degree L, and conjugating some of its zeros keeps |f(x)| on [-1, 1]. The
flipped amplitude is a second solution exactly when it is unitary, which
gives L equations in the shifts below L. ``locate_ambiguity`` solves them
from a start tuple; ``search_ambiguity`` sweeps a fixed grid of starts.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly
from scipy.optimize import brentq, root

from .amplitude import cross_section_coefficients, waves_from_shifts
from .config import get_threads
from .enumerator import (
    DescentConfig,
    SolutionSet,
    descend,
    enumerate_leaves,
    solutions_from_tree,
)
from .models import CrossSectionCoefficients, PhaseShifts

LOGGER = logging.getLogger(__name__)

# δ_L is drawn from (0.1, π/2) so C_2L stays well above the trimming threshold.
_MIN_LEADING_SHIFT = 0.1
# A flipped amplitude this close to the input is the input itself.
_SAME_AMPLITUDE = 1e-6
# Two solutions closer than this are not counted as a genuine ambiguity.
_MIN_SEPARATION = 1e-3
# Largest unitarity defect accepted from the root solver.
_ROOT_TOL = 1e-12
# Start grid for the lower shifts in ``search_ambiguity``.
_GRID_EDGE = 1.35


@dataclass(frozen=True)
class ScanSample:
    index: int
    delta: tuple[float, ...]
    sigma: float
    m: int
    count: int
    bound: int
    branch_bound: int
    # smallest unitarity defect / separation over the zero flips (inf when none)
    flip_defect: float = math.inf

    def to_dict(self) -> dict:
        return {
            "delta": list(self.delta),
            "sigma": self.sigma,
            "m": self.m,
            "count": self.count,
            "bound": self.bound,
            "branch_bound": self.branch_bound,
        }


@dataclass(eq=False)
class LocatedAmbiguity:
    delta: np.ndarray
    coefficients: CrossSectionCoefficients
    solutions: SolutionSet
    separation: float

    def to_dict(self) -> dict:
        return {
            "delta": [float(d) for d in self.delta],
            "C": [float(c) for c in self.coefficients.C],
            "solutions": self.solutions.to_dict(),
        }


@dataclass(eq=False)
class AmbiguityAtlas:
    L: int
    seed: int
    samples: list[ScanSample] = field(default_factory=list)
    located: list[LocatedAmbiguity] = field(default_factory=list)

    @property
    def bound_violations(self) -> int:
        return sum(1 for s in self.samples if s.count > s.bound)

    @property
    def branch_bound_violations(self) -> int:
        return sum(1 for s in self.samples if s.count > s.branch_bound)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "seed": self.seed,
            "samples": [s.to_dict() for s in self.samples],
            "located": [a.to_dict() for a in self.located],
            "bound_violations": self.bound_violations,
            "branch_bound_violations": self.branch_bound_violations,
        }


def sample_shifts(L: int, rng: np.random.Generator) -> np.ndarray:
    """δ_l uniform in (-π/2, π/2) for l < L, δ_L uniform in (0.1, π/2)."""
    delta = np.empty(L + 1)
    delta[:L] = rng.uniform(-np.pi / 2, np.pi / 2, size=L)
    delta[L] = rng.uniform(_MIN_LEADING_SHIFT, np.pi / 2)
    return delta


def sample_shifts_with_sigma(L: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Random shifts rescaled so that σ_tot = Σ (2l+1) sin²δ_l equals *sigma*.

    Raw magnitudes are uniform in (0.15, 1) with random signs below L and
    δ_L > 0; a common factor found by root bracketing sets σ_tot. When even
    the largest admissible factor falls short, that factor is used.
    """
    raw = rng.uniform(0.15, 1.0, size=L + 1) * rng.choice([-1.0, 1.0], size=L + 1)
    raw[L] = abs(raw[L])
    weights = 2.0 * np.arange(L + 1) + 1.0

    def excess(k: float) -> float:
        return float(np.sum(weights * np.sin(k * raw) ** 2)) - sigma

    # σ_tot grows with k while every |k δ_l| stays below π/2
    k_max = 0.5 * np.pi / float(np.max(np.abs(raw)))
    if excess(k_max) <= 0:
        return k_max * raw
    return brentq(excess, 0.0, k_max, xtol=1e-15) * raw


def scan_sample(index: int, delta: np.ndarray, cfg: DescentConfig) -> ScanSample:
    truth = waves_from_shifts(PhaseShifts(delta))
    result = solutions_from_tree(enumerate_leaves(cross_section_coefficients(truth), cfg), cfg)
    return ScanSample(
        index=index,
        delta=tuple(float(d) for d in delta),
        sigma=result.sigma,
        m=result.bound.m,
        count=len(result),
        bound=result.bound.bound,
        branch_bound=result.bound.branch_bound,
        flip_defect=flip_defect(truth.f),
    )


# ── Zero flips ──────────────────────────────────────────────────────────────


def zero_flips(L: int) -> list[tuple[int, ...]]:
    """Non-empty subsets of the L zeros of a degree-L amplitude."""
    return [c for size in range(1, L + 1) for c in itertools.combinations(range(L), size)]


def flipped_waves(f: np.ndarray, flip: tuple[int, ...]) -> np.ndarray:
    """Waves of the amplitude with the zeros in *flip* complex-conjugated.

    Zeros are ordered by real part. The leading coefficient is kept, so the
    result has the same f_L and the same |f(x)| for real x.
    """
    f = np.asarray(f, dtype=np.complex128)
    weights = 2.0 * np.arange(f.size) + 1.0
    power = npleg.leg2poly(weights * f)
    zeros = np.sort_complex(nppoly.polyroots(power))
    index = list(flip)
    zeros[index] = np.conj(zeros[index])
    return npleg.poly2leg(power[-1] * nppoly.polyfromroots(zeros)) / weights


def _unitarity_defect(waves: np.ndarray) -> np.ndarray:
    return waves.imag - np.abs(waves) ** 2


def flip_defect(f: np.ndarray) -> float:
    """How far *f* is from having a unitary zero flip, per unit separation."""
    f = np.asarray(f, dtype=np.complex128)
    L = f.size - 1
    best = math.inf
    for flip in zero_flips(L):
        alt = flipped_waves(f, flip)
        separation = float(np.max(np.abs(alt - f)))
        if separation < _SAME_AMPLITUDE:
            continue
        defect = float(np.max(np.abs(_unitarity_defect(alt[:L]))))
        best = min(best, defect / separation)
    return best


def _wrap(delta: np.ndarray) -> np.ndarray:
    """Map shifts onto (-π/2, π/2]; f_l depends on δ_l modulo π."""
    return delta - np.pi * np.ceil((delta - np.pi / 2) / np.pi)


def _solve_flip(delta: np.ndarray, flip: tuple[int, ...]) -> np.ndarray | None:
    """Shifts below L that make *flip* unitary at fixed δ_L, or None."""
    L = delta.size - 1
    lead = delta[L]

    def defect(lower: np.ndarray) -> np.ndarray:
        shifts = np.append(lower, lead)
        waves = np.sin(shifts) * np.exp(1j * shifts)
        return _unitarity_defect(flipped_waves(waves, flip)[:L])

    sol = root(defect, delta[:L], method="hybr", options={"xtol": 1e-14, "maxfev": 400})
    if not np.all(np.isfinite(sol.x)):
        return None
    if not np.max(np.abs(defect(sol.x))) <= _ROOT_TOL:
        return None
    return _wrap(np.append(sol.x, lead))


def locate_ambiguity(
    delta: np.ndarray, cfg: DescentConfig | None = None
) -> LocatedAmbiguity | None:
    """Move the shifts below L of *delta* onto an exact ambiguity.

    Each zero flip is tried in turn: ``scipy.optimize.root`` solves its L
    unitarity equations at fixed δ_L, and a solution is kept once a fresh
    descent confirms two distinct solutions. ``None`` when no flip works
    from this start.
    """
    cfg = cfg or DescentConfig()
    delta = np.asarray(delta, dtype=np.float64)
    L = delta.size - 1
    if L < 1:
        raise ValueError(f"an ambiguity needs L >= 1, got L={L}")
    if not 0.0 < delta[L] <= np.pi / 2:
        raise ValueError(f"delta_L must lie in (0, pi/2], got {delta[L]}")
    for flip in zero_flips(L):
        solved = _solve_flip(delta, flip)
        if solved is None:
            continue
        found = confirm_ambiguity(solved, cfg)
        if found is not None:
            LOGGER.debug("Flip %s located an ambiguity at %s", flip, solved)
            return found
    return None


def search_ambiguity(
    L: int, cfg: DescentConfig | None = None, levels: int = 16, points: int = 7
) -> LocatedAmbiguity | None:
    """Deterministic sweep for an ambiguity with top wave L.

    δ_L runs over *levels* values in [0.1, π/2]; for each, ``locate_ambiguity``
    starts from every point of a *points*^L grid of lower shifts. Returns the
    first confirmed ambiguity.
    """
    if L < 1:
        raise ValueError(f"an ambiguity needs L >= 1, got L={L}")
    grid = np.linspace(-_GRID_EDGE, _GRID_EDGE, points)
    for lead in np.linspace(_MIN_LEADING_SHIFT, np.pi / 2, levels):
        for lower in itertools.product(grid, repeat=L):
            found = locate_ambiguity(np.append(lower, lead), cfg)
            if found is not None:
                LOGGER.info("Grid sweep located an ambiguity at delta_L=%.4f", lead)
                return found
    return None


def confirm_ambiguity(
    delta: np.ndarray, cfg: DescentConfig | None = None
) -> LocatedAmbiguity | None:
    """Descend on the cross section of *delta*; keep it if two distinct solutions appear."""
    cfg = cfg or DescentConfig()
    delta = np.asarray(delta, dtype=np.float64)
    coeffs = cross_section_coefficients(waves_from_shifts(PhaseShifts(delta)))
    solutions = descend(coeffs, cfg)
    if len(solutions) < 2:
        return None
    waves = [s.f for s in solutions.solutions]
    separation = max(
        float(np.max(np.abs(a - b))) for i, a in enumerate(waves) for b in waves[i + 1 :]
    )
    if separation <= _MIN_SEPARATION:
        return None
    return LocatedAmbiguity(
        delta=delta, coefficients=coeffs, solutions=solutions, separation=separation
    )


# ── Driver ───────────────────────────────────────────────────────────────────


def scan(
    L: int,
    samples: int,
    seed: int = 0,
    cfg: DescentConfig | None = None,
    refine: int = 8,
    max_workers: int | None = None,
) -> AmbiguityAtlas:
    """Sample *samples* shift tuples, descend on each, then locate ambiguities.

    Samples are drawn up front from one seeded generator and gathered back
    in draw order, so the atlas does not depend on thread scheduling.
    Samples that already show two solutions go straight into ``located``;
    the ``refine`` samples with the smallest flip defect are handed to
    ``locate_ambiguity``. When none of them leads anywhere and 2 <= L <= 3,
    ``search_ambiguity`` sweeps its fixed start grid.
    """
    if L < 0:
        raise ValueError(f"L must be >= 0, got {L}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    cfg = cfg or DescentConfig()
    rng = np.random.default_rng(seed)
    draws = [sample_shifts(L, rng) for _ in range(samples)]
    atlas = AmbiguityAtlas(L=L, seed=seed)

    results: list[ScanSample | None] = [None] * samples
    t_start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max_workers or get_threads()) as pool:
        future_to_index = {
            pool.submit(scan_sample, i, delta, cfg): i for i, delta in enumerate(draws)
        }
        completed = 0
        for future in as_completed(future_to_index):
            results[future_to_index[future]] = future.result()
            completed += 1
            if completed % max(1, samples // 10) == 0 or completed == samples:
                LOGGER.info(
                    "  [%d/%d] %.1fs elapsed", completed, samples, time.perf_counter() - t_start
                )
    atlas.samples = [r for r in results if r is not None]

    for sample in atlas.samples:
        if sample.count >= 2 and len(atlas.located) < refine:
            found = confirm_ambiguity(np.array(sample.delta), cfg)
            if found is not None:
                _add_located(atlas, found)

    near = sorted(
        (s for s in atlas.samples if math.isfinite(s.flip_defect)),
        key=lambda s: (s.flip_defect, s.index),
    )
    for sample in near[:refine]:
        found = locate_ambiguity(np.array(sample.delta), cfg)
        if found is not None:
            _add_located(atlas, found)
    if refine > 0 and not atlas.located and 2 <= L <= 3:
        LOGGER.info("No sample led to an ambiguity; sweeping the start grid")
        found = search_ambiguity(L, cfg, points=7 if L == 2 else 5)
        if found is not None:
            _add_located(atlas, found)

    LOGGER.info(
        "Scan L=%d: %d samples, %d located ambiguities, %d bound violations",
        L,
        len(atlas.samples),
        len(atlas.located),
        atlas.bound_violations,
    )
    if atlas.branch_bound_violations:
        LOGGER.warning(
            "%d samples exceed the branch bound 2^M", atlas.branch_bound_violations
        )
    return atlas


def _add_located(atlas: AmbiguityAtlas, found: LocatedAmbiguity) -> None:
    for other in atlas.located:
        if other.coefficients.C.size == found.coefficients.C.size and (
            np.max(np.abs(other.coefficients.C - found.coefficients.C)) < 1e-6
        ):
            return
    atlas.located.append(found)
