"""Enumerate every unitary amplitude compatible with a differential cross section.

The descent starts from the top coefficient: C_{2L} fixes sin²δ_L, hence f_L
(δ_L chosen in (0, π/2]). Going down, C_{L+M} involves the unknown f_M only
through the (M, L) pair, so

    Re(f_M f_L*) = (C_{L+M} - T_known) / (2 (2M+1)(2L+1) G(M, L, L+M))

with T_known built from the waves already fixed. That is a straight line in
the complex plane; intersected with the unitarity circle |f - i/2| = 1/2 it
gives zero, one or two candidates for f_M. Every complete branch (a leaf) is
checked against all 2L + 1 coefficients; the unused ones C_0 .. C_{L-1} are
the consistency conditions that kill spurious branches.

Branch letters in ``branch_paths`` read from step L-1 down to step 0:
``L`` lower-Im intersection, ``H`` higher-Im intersection, ``T`` tangency.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .amplitude import coefficients_from_waves, unitarity_residual
from .legendre import triple_product, triple_product_tensor
from .models import CrossSectionCoefficients, PartialWaves

LOGGER = logging.getLogger(__name__)

_UNITARITY_TOL = 1e-9
_SIGMA_AGREEMENT_TOL = 1e-8


class InvalidCrossSection(ValueError):
    """The coefficients cannot come from any unitary amplitude of finite L."""


class NoIntersection(ValueError):
    """The descent line misses the unitarity circle on this branch."""


class SolutionOverflow(RuntimeError):
    """More accepted solutions than ``DescentConfig.max_solutions``."""


@dataclass(frozen=True)
class DescentConfig:
    tol_residual: float = config.TOL_RESIDUAL
    tol_discriminant: float = config.TOL_DISCRIMINANT
    tol_dedupe: float = config.TOL_DEDUPE
    max_solutions: int = config.MAX_SOLUTIONS
    prune_by_sigma: bool = True

    def __post_init__(self) -> None:
        for name in ("tol_residual", "tol_discriminant", "tol_dedupe"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value}")
        if self.max_solutions < 1:
            raise ValueError(f"max_solutions must be >= 1, got {self.max_solutions}")


@dataclass(frozen=True)
class CountBound:
    """Solution-count bounds for a total cross section.

    ``m`` is the largest integer with (7/8)(m + 1/2) < σ (0 if none),
    ``bound`` = max(1, 2^(m-1)) and ``branch_bound`` = 2^m, the number of
    leaves left once steps above m keep only their lower-Im intersection.
    """

    m: int
    bound: int
    branch_bound: int


@dataclass(frozen=True, eq=False)
class Leaf:
    waves: np.ndarray
    path: str
    residual: float
    # smallest half-chord on the way down; 0 when a tangency was crossed
    min_half_chord: float


@dataclass(eq=False)
class DescentTree:
    C: np.ndarray
    L: int
    leading: complex
    sigma: float
    bound: CountBound
    leaves: list[Leaf] = field(default_factory=list)
    dead_branches: int = 0


@dataclass(eq=False)
class SolutionSet:
    solutions: list[PartialWaves]
    residuals: list[float]
    branch_paths: list[str]
    sigma: float
    bound: CountBound
    exceeds_bound: bool = False

    def __len__(self) -> int:
        return len(self.solutions)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "solutions": [
                {"f": [[float(z.real), float(z.imag)] for z in s.f]} for s in self.solutions
            ],
            "residuals": [float(r) for r in self.residuals],
            "branch_paths": list(self.branch_paths),
        }


# ── Leading step ─────────────────────────────────────────────────────────────


def trim_coefficients(C: CrossSectionCoefficients | np.ndarray, tol: float) -> np.ndarray:
    """Drop trailing |C_n| < tol; the remaining top index must be even."""
    arr = C.C if isinstance(C, CrossSectionCoefficients) else np.asarray(C, dtype=np.float64)
    keep = np.flatnonzero(np.abs(arr) >= tol)
    if keep.size == 0:
        raise InvalidCrossSection("All cross-section coefficients vanish")
    top = int(keep[-1])
    if top % 2 == 1:
        raise InvalidCrossSection(
            f"Top non-zero coefficient C_{top} has odd index; no degree-L amplitude gives it"
        )
    return np.array(arr[: top + 1], dtype=np.float64)


def _leading_from_trimmed(C: np.ndarray, tol: float) -> complex:
    L = (C.size - 1) // 2
    ceiling = (2 * L + 1) ** 2 * triple_product(L, L, 2 * L)
    sin2 = C[2 * L] / ceiling
    if not sin2 > 0:
        raise InvalidCrossSection(f"C_{2 * L} = {C[2 * L]:.6g} must be positive")
    if sin2 > 1.0 + tol:
        raise InvalidCrossSection(
            f"C_{2 * L} = {C[2 * L]:.6g} exceeds the unitarity ceiling {ceiling:.6g}"
        )
    sin2 = min(sin2, 1.0)
    # sin δ cos δ with cos δ >= 0 on (0, π/2]
    return complex(math.sqrt(sin2 * (1.0 - sin2)), sin2)


def leading_wave(C: CrossSectionCoefficients, tol: float = config.TOL_RESIDUAL) -> complex:
    """f_L = sin δ_L e^{iδ_L} with sin²δ_L = C_2L / ((2L+1)² G(L, L, 2L)).

    C = [0.25] gives δ_0 = π/6, f_0 ≈ 0.433013 + 0.25i.
    """
    return _leading_from_trimmed(trim_coefficients(C, tol), tol)


# ── Geometry ─────────────────────────────────────────────────────────────────


def chord(anchor: complex, c: float) -> tuple[complex, complex, float]:
    """Foot of the perpendicular from i/2, unit direction of the anchor, discriminant."""
    modulus = abs(anchor)
    if modulus == 0:
        raise ValueError("anchor must be non-zero")
    unit = anchor / modulus
    distance = (c - 0.5 * anchor.imag) / modulus
    return 0.5j + distance * unit, unit, 0.25 - distance * distance


def line_circle_intersections(
    anchor: complex, c: float, tol_disc: float = config.TOL_DISCRIMINANT
) -> list[complex]:
    """Points f on |f - i/2| = 1/2 with Re(f · conj(anchor)) = c.

    Returned lower imaginary part first. A discriminant within ``tol_disc`` of
    zero is a tangency and yields the single foot point.
    """
    foot, unit, disc = chord(complex(anchor), float(c))
    if disc < -tol_disc:
        raise NoIntersection(f"line misses the unitarity circle (discriminant {disc:.3e})")
    if disc <= tol_disc:
        return [foot]
    half = math.sqrt(disc)
    points = [foot + half * 1j * unit, foot - half * 1j * unit]
    return sorted(points, key=lambda z: (z.imag, z.real))


def sigma_prune(
    step: int, m: int, candidates: list[complex], enabled: bool = True
) -> list[complex]:
    """Above step m only the lower-Im intersection can lead to a solution."""
    if not enabled or step <= m or len(candidates) < 2:
        return list(candidates)
    return [min(candidates, key=lambda z: (z.imag, z.real))]


# ── Bounds ───────────────────────────────────────────────────────────────────


def count_bound(sigma: float) -> CountBound:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    m = 0
    while 0.875 * (m + 1.5) < sigma:
        m += 1
    bound = 1 if m == 0 else 2 ** (m - 1)
    return CountBound(m=m, bound=bound, branch_bound=2**m)


def min_sigma_for_branching(m: int, L: int) -> float:
    """min over s in [0, 1] of (2m+1)(1-s)/2 + (2L+1)s².

    A genuine second branch at step m needs σ above this value; for L > m it
    is never below (7/8)(m + 1/2).
    """
    if not 0 <= m < L:
        raise ValueError(f"Need 0 <= m < L, got m={m}, L={L}")
    a, b = 2 * m + 1, 2 * L + 1
    s = min(1.0, a / (4.0 * b))
    return a * (1.0 - s) / 2.0 + b * s * s


# ── Descent ──────────────────────────────────────────────────────────────────


def line_offset(
    f: np.ndarray, step: int, C: np.ndarray, tensor: np.ndarray, weights: np.ndarray
) -> float:
    L = f.size - 1
    n = L + step
    known = weights[step + 1 :] * f[step + 1 :]
    gram = np.real(np.outer(known, np.conj(known)))
    t_known = float(np.sum(gram * tensor[step + 1 :, step + 1 :, n]))
    denom = 2.0 * weights[step] * weights[L] * tensor[step, L, n]
    return (C[n] - t_known) / denom


def enumerate_leaves(
    C: CrossSectionCoefficients | np.ndarray, cfg: DescentConfig | None = None
) -> DescentTree:
    """Walk the whole descent tree, depth first, lower-Im branch first."""
    cfg = cfg or DescentConfig()
    coeffs = trim_coefficients(C, cfg.tol_residual)
    L = (coeffs.size - 1) // 2
    leading = _leading_from_trimmed(coeffs, cfg.tol_residual)
    sigma = float(coeffs[0])
    if not sigma > 0:
        raise InvalidCrossSection(f"Total cross section C_0 = {sigma:.6g} must be positive")
    tree = DescentTree(C=coeffs, L=L, leading=leading, sigma=sigma, bound=count_bound(sigma))

    tensor = triple_product_tensor(L)
    weights = 2.0 * np.arange(L + 1) + 1.0
    f = np.zeros(L + 1, dtype=np.complex128)
    f[L] = leading

    def visit(step: int, path: str, min_half: float) -> None:
        if step < 0:
            residual = float(np.max(np.abs(coefficients_from_waves(f, tensor) - coeffs)))
            tree.leaves.append(Leaf(f.copy(), path, residual, min_half))
            return
        offset = line_offset(f, step, coeffs, tensor, weights)
        try:
            points = line_circle_intersections(leading, offset, cfg.tol_discriminant)
        except NoIntersection:
            tree.dead_branches += 1
            LOGGER.debug("Branch %r dies at step %d", path, step)
            return
        if len(points) == 1:
            LOGGER.debug("Tangency at step %d on branch %r", step, path)
            f[step] = points[0]
            visit(step - 1, path + "T", 0.0)
            return
        half = abs(points[1] - points[0]) / 2.0
        kept = sigma_prune(step, tree.bound.m, points, cfg.prune_by_sigma)
        for point, letter in zip(kept, "LH"):
            f[step] = point
            visit(step - 1, path + letter, min(min_half, half))

    visit(L - 1, "", math.inf)
    LOGGER.debug(
        "Descent L=%d: %d leaves, %d dead branches", L, len(tree.leaves), tree.dead_branches
    )
    return tree


def canonical_key(f: np.ndarray) -> tuple[float, ...]:
    """Sort key (Im f_0, Re f_0, Im f_1, Re f_1, ...)."""
    return tuple(float(v) for z in f for v in (z.imag, z.real))


def _canonical(f: np.ndarray, leading_on_axis: bool) -> np.ndarray:
    if not leading_on_axis:
        return f
    mirror = -np.conj(f)
    return min(f, mirror, key=canonical_key)


def solutions_from_tree(tree: DescentTree, cfg: DescentConfig | None = None) -> SolutionSet:
    """Accepted, deduplicated and canonically ordered leaves of *tree*."""
    cfg = cfg or DescentConfig()
    # δ_L = π/2: f and -f* share f_L, so both sit in the tree
    leading_on_axis = abs(tree.leading.real) <= cfg.tol_dedupe
    accepted: list[tuple[np.ndarray, float, str]] = []
    for leaf in tree.leaves:
        if leaf.residual > cfg.tol_residual:
            continue
        waves = _canonical(leaf.waves, leading_on_axis)
        if any(np.max(np.abs(waves - other)) <= cfg.tol_dedupe for other, _, _ in accepted):
            continue
        accepted.append((waves, leaf.residual, leaf.path))

    if len(accepted) > cfg.max_solutions:
        raise SolutionOverflow(
            f"{len(accepted)} solutions exceed max_solutions={cfg.max_solutions}"
        )
    accepted.sort(key=lambda item: canonical_key(item[0]))

    solutions = [PartialWaves(w) for w, _, _ in accepted]
    for waves in solutions:
        if unitarity_residual(waves) > _UNITARITY_TOL:
            raise AssertionError("descent produced a non-unitary partial wave")
        sigma = float(np.sum((2.0 * np.arange(waves.L + 1) + 1.0) * waves.f.imag))
        if abs(sigma - tree.sigma) > _SIGMA_AGREEMENT_TOL:
            raise AssertionError(
                f"solution total cross section {sigma:.12g} differs from C_0 {tree.sigma:.12g}"
            )

    exceeds = len(solutions) > tree.bound.bound
    if exceeds:
        LOGGER.warning(
            "%d solutions at sigma=%.6g exceed the printed bound %d (branch bound %d)",
            len(solutions),
            tree.sigma,
            tree.bound.bound,
            tree.bound.branch_bound,
        )
    return SolutionSet(
        solutions=solutions,
        residuals=[r for _, r, _ in accepted],
        branch_paths=[p for _, _, p in accepted],
        sigma=tree.sigma,
        bound=tree.bound,
        exceeds_bound=exceeds,
    )


def descend(
    C: CrossSectionCoefficients | np.ndarray, cfg: DescentConfig | None = None
) -> SolutionSet:
    """Every unitary amplitude reproducing *C*, one per conjugate family.

    An empty set means the cross section is inconsistent with elastic
    unitarity; it is a valid result, not an error.
    """
    cfg = cfg or DescentConfig()
    result = solutions_from_tree(enumerate_leaves(C, cfg), cfg)
    LOGGER.info(
        "Descent found %d solution(s), sigma=%.6g, bound=%d",
        len(result),
        result.sigma,
        result.bound.bound,
    )
    return result
