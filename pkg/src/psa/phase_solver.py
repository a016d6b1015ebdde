"""Recover the phase of the amplitude from its modulus.

Given F = |f| on Gauss nodes, the phase φ satisfies

    F(12) sin φ(12) = (1/4π) ∫ dΩ_3 F(13) F(23) cos[φ(13) - φ(23)]

(direction 1 at the pole, 2 at angle θ_12, 3 integrated over the sphere).
``fixed_point_solve`` iterates φ ← arcsin(rhs / F) from φ ≡ 0; when
sup F(13)F(23)/F(12) < 0.79 the map is a contraction and the limit is unique.

Off-node values come from the Legendre series of the complex amplitude
g = F e^{iφ}, with as many terms as nodes, so F(13)F(23)cos(φ13 - φ23) =
Re g(13) conj g(23).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .amplitude import evaluate
from .legendre import (
    QuadratureRule,
    gauss_rule,
    legendre_coefficients,
    legendre_series,
    legendre_table,
)
from .models import AngularFunction, PartialWaves

LOGGER = logging.getLogger(__name__)

CONTRACTION_BOUND = 0.79
REFINED_CONTRACTION_BOUND = 0.89
EXISTENCE_BOUND = 1.0

# |rhs / F| up to 1 + this is rounding, not a genuine failure
_SIN_SLACK = 1e-12


class NonpositiveF(ValueError):
    """F must be strictly positive for the ratio and the iteration to exist."""


class SinOutOfRange(RuntimeError):
    def __init__(self, node: int, x: float, ratio: float) -> None:
        self.node = node
        self.x = x
        self.ratio = ratio
        super().__init__(
            f"rhs/F = {ratio:.6g} has no arcsin in (-π/2, π/2] "
            f"at node {node} (cos theta = {x:.12g})"
        )


class MaxIterExceeded(RuntimeError):
    def __init__(self, trace: list[float]) -> None:
        self.trace = trace
        last = trace[-1] if trace else float("nan")
        super().__init__(f"No convergence after {len(trace)} iterations (last change {last:.3e})")


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """Phase φ (radians) at the nodes of ``rule``, principal branch."""

    rule: QuadratureRule
    phi: np.ndarray

    def __post_init__(self) -> None:
        phi = np.array(self.phi, dtype=np.float64).reshape(-1)
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        if phi.size != self.rule.order:
            raise ValueError(f"PhaseFunction has {phi.size} values for order {self.rule.order}")
        if not np.all((phi > -np.pi / 2) & (phi <= np.pi / 2)):
            raise ValueError("PhaseFunction values must lie in (-π/2, π/2]")


@dataclass(frozen=True)
class ContractionReport:
    sup_ratio: float
    # (θ13, θ23, ψ) in radians
    attained_at: tuple[float, float, float]
    condition_079: bool
    condition_089: bool
    condition_existence: bool
    # max F(x)² / F(1), the collinear case
    diagonal_ratio: float

    def to_dict(self) -> dict:
        return {
            "sup_ratio": self.sup_ratio,
            "attained_at": list(self.attained_at),
            "condition_079": self.condition_079,
            "condition_089": self.condition_089,
            "condition_existence": self.condition_existence,
            "diagonal_ratio": self.diagonal_ratio,
        }


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    phase: PhaseFunction
    changes: list[float] = field(default_factory=list)
    converged: bool = True

    @property
    def iterations(self) -> int:
        return len(self.changes)

    def trace_dict(self) -> dict:
        return {
            "changes": list(self.changes),
            "converged": self.converged,
            "iters": self.iterations,
        }


def _require_positive(F: AngularFunction) -> None:
    low = float(np.min(F.values))
    if low <= 0:
        node = int(np.argmin(F.values))
        raise NonpositiveF(f"F must be > 0 at every node; F = {low:.6g} at node {node}")


# ── Contraction condition ───────────────────────────────────────────────────


def contraction_sup(F: AngularFunction, n_grid: int = 61) -> ContractionReport:
    """sup F(13) F(23) / F(12) over a θ13 × θ23 × ψ grid on [0, π]³.

    cos θ12 = cos θ13 cos θ23 + sin θ13 sin θ23 cos ψ. The grid contains the
    collinear points (θ13 = θ23, ψ = 0), so the result is never below the
    diagonal ratio F(x)² / F(1).
    """
    _require_positive(F)
    if n_grid < 2:
        raise ValueError(f"n_grid must be >= 2, got {n_grid}")
    coeffs = legendre_coefficients(F.values, F.rule)
    theta = np.linspace(0.0, np.pi, n_grid)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cos_psi = np.cos(theta)  # ψ uses the same [0, π] grid
    f_edge = legendre_series(coeffs, cos_t)
    f_forward = float(legendre_series(coeffs, 1.0))
    if np.min(f_edge) <= 0 or f_forward <= 0:
        raise NonpositiveF("Interpolated F is not positive on the angular grid")

    best, where = -math.inf, (0.0, 0.0, 0.0)
    for i in range(n_grid):
        x12 = cos_t[i] * cos_t[:, None] + sin_t[i] * sin_t[:, None] * cos_psi[None, :]
        f12 = legendre_series(coeffs, np.clip(x12, -1.0, 1.0))
        if np.min(f12) <= 0:
            raise NonpositiveF("Interpolated F is not positive on the angular grid")
        ratio = f_edge[i] * f_edge[:, None] / f12
        j, k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        if ratio[j, k] > best:
            best, where = float(ratio[j, k]), (float(theta[i]), float(theta[j]), float(theta[k]))

    diagonal = float(np.max(f_edge**2) / f_forward)
    LOGGER.debug("Contraction sup %.6g at %s (diagonal %.6g)", best, where, diagonal)
    return ContractionReport(
        sup_ratio=best,
        attained_at=where,
        condition_079=best < CONTRACTION_BOUND,
        condition_089=best < REFINED_CONTRACTION_BOUND,
        condition_existence=best < EXISTENCE_BOUND,
        diagonal_ratio=diagonal,
    )


# ── Right-hand side ─────────────────────────────────────────────────────────


def _cos_theta23(x12: float, x3: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    s12 = math.sqrt(max(0.0, 1.0 - x12 * x12))
    s3 = np.sqrt(np.clip(1.0 - x3 * x3, 0.0, None))
    x23 = x12 * x3[:, None] + s12 * s3[:, None] * np.cos(azimuth)[None, :]
    return np.clip(x23, -1.0, 1.0)


def _azimuths(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def wu_ohmura_rhs(
    F: AngularFunction,
    phi: PhaseFunction,
    x12: float,
    n_theta: int | None = None,
    n_azimuth: int | None = None,
) -> float:
    """(1/4π) ∫ dΩ_3 F(13) F(23) cos[φ(13) - φ(23)] at one cos θ12.

    Gauss-Legendre in cos θ_3 (``n_theta``, default the rule order) times a
    trapezoid rule in azimuth (``n_azimuth``, default twice the order).
    """
    _require_positive(F)
    if not -1.0 <= x12 <= 1.0:
        raise ValueError(f"cos(theta12) must lie in [-1, 1], got {x12}")
    order = F.rule.order
    coeffs = legendre_coefficients(F.values * np.exp(1j * phi.phi), F.rule)
    inner = gauss_rule(n_theta or order)
    azimuth = _azimuths(n_azimuth or 2 * order)

    g3 = legendre_series(coeffs, inner.nodes)
    g23 = legendre_series(coeffs, _cos_theta23(float(x12), inner.nodes, azimuth))
    averaged = np.mean(np.real(g3[:, None] * np.conj(g23)), axis=1)
    return 0.5 * float(inner.weights @ averaged)


@lru_cache(maxsize=8)
def azimuthal_kernel(order: int) -> np.ndarray:
    """K[i, k, l] = azimuthal mean of P_l(cos θ23) for x12 = x_i, cos θ3 = x_k.

    Built for all node pairs of the ``order``-point rule with 2·order azimuths,
    one x12 at a time. Read-only and cached per order.
    """
    rule = gauss_rule(order)
    azimuth = _azimuths(2 * order)
    kernel = np.empty((order, order, order))
    for i, x12 in enumerate(rule.nodes):
        table = legendre_table(order - 1, _cos_theta23(float(x12), rule.nodes, azimuth))
        kernel[i] = np.mean(table, axis=2).T
    kernel.flags.writeable = False
    LOGGER.debug("Built azimuthal kernel for %d nodes", order)
    return kernel


def _rhs_on_nodes(F: AngularFunction, phi: np.ndarray) -> np.ndarray:
    rule = F.rule
    g = F.values * np.exp(1j * phi)
    coeffs = legendre_coefficients(g, rule)
    g23 = np.einsum("ikl,l->ik", azimuthal_kernel(rule.order), coeffs)
    return 0.5 * np.real(g[None, :] * np.conj(g23)) @ rule.weights


def equation_residual(F: AngularFunction, phi: PhaseFunction) -> float:
    """max over nodes of |F sin φ - rhs|."""
    _require_positive(F)
    return float(np.max(np.abs(F.values * np.sin(phi.phi) - _rhs_on_nodes(F, phi.phi))))


# ── Iteration ───────────────────────────────────────────────────────────────


def fixed_point_solve(
    F: AngularFunction, max_iter: int = 500, tol: float = 1e-10
) -> FixedPointResult:
    """Iterate φ_{k+1} = arcsin(rhs(φ_k) / F) from φ_0 ≡ 0.

    Stops when the largest node change drops below ``tol``. Raises
    SinOutOfRange when an iterate has no principal-branch update and
    MaxIterExceeded (carrying the change trace) when the budget runs out.
    """
    _require_positive(F)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    phi = np.zeros(F.rule.order)
    changes: list[float] = []
    for iteration in range(1, max_iter + 1):
        ratio = _rhs_on_nodes(F, phi) / F.values
        # arcsin(-1) = -π/2 is outside the branch
        outside = np.flatnonzero((ratio > 1.0 + _SIN_SLACK) | (ratio <= -1.0))
        if outside.size:
            worst = int(outside[np.argmax(np.abs(ratio[outside]))])
            raise SinOutOfRange(worst, float(F.rule.nodes[worst]), float(ratio[worst]))
        updated = np.arcsin(np.clip(ratio, -1.0, 1.0))
        change = float(np.max(np.abs(updated - phi)))
        changes.append(change)
        phi = updated
        LOGGER.debug("Iteration %d: max change %.3e", iteration, change)
        if change < tol:
            LOGGER.info("Phase iteration converged in %d steps", iteration)
            return FixedPointResult(PhaseFunction(F.rule, phi), changes, converged=True)
    raise MaxIterExceeded(changes)


# ── Amplitude reconstruction ────────────────────────────────────────────────


def waves_from_phase(
    F: AngularFunction, phi: PhaseFunction, L: int | None = None, cutoff: float = 1e-8
) -> PartialWaves:
    """f_l = 1/2 ∫ F e^{iφ} P_l dx by the rule of F.

    Without ``L`` the trailing waves below ``cutoff`` (relative to the
    largest) are dropped.
    """
    g = F.values * np.exp(1j * phi.phi)
    coeffs = legendre_coefficients(g, F.rule)
    f = coeffs / (2.0 * np.arange(coeffs.size) + 1.0)
    if L is None:
        keep = np.flatnonzero(np.abs(f) > cutoff * np.max(np.abs(f)))
        L = int(keep[-1]) if keep.size else 0
    return PartialWaves(f[: L + 1])


def exact_phase(waves: PartialWaves, rule: QuadratureRule) -> PhaseFunction:
    """Phase of f(x) at the nodes of *rule*; ValueError off the principal branch."""
    return PhaseFunction(rule, np.angle(evaluate(waves, rule.nodes)))
