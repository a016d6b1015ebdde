"""Forward model: phase shifts → partial waves → amplitude → cross section.

Conventions (kinematic factors dropped throughout):

- f_l = sin δ_l exp(i δ_l), so Im f_l = |f_l|² (elastic unitarity);
- f(x) = Σ (2l + 1) f_l P_l(x), x = cos θ;
- F² = |f|² = Σ (2n + 1) C_n P_n(x), hence C_n = 1/2 ∫ F² P_n dx and
  C_0 = σ_tot = Σ (2l + 1) Im f_l.

``cross_section_coefficients`` computes C_n twice (quadrature of |f|² P_n and
the triple-product algebra) and treats disagreement as an internal fault.
"""

from __future__ import annotations

import logging

import numpy as np

from .legendre import (
    QuadratureRule,
    gauss_rule,
    legendre_series,
    legendre_table,
    triple_product_tensor,
)
from .models import AngularFunction, CrossSectionCoefficients, PartialWaves, PhaseShifts

LOGGER = logging.getLogger(__name__)

# Agreement required between the two C_n paths, relative to max(1, max |C|).
_DUAL_PATH_TOL = 1e-11
# Optical vs elastic total cross section.
_SIGMA_TOL = 1e-9


class DomainError(ValueError):
    """Raised when cos θ lies outside [-1, 1]."""


class SelfCheckError(RuntimeError):
    """Raised when two independent evaluations of the same quantity disagree."""


def _weights(L: int) -> np.ndarray:
    return 2.0 * np.arange(L + 1) + 1.0


# ── Parameterizations ────────────────────────────────────────────────────────


def waves_from_shifts(shifts: PhaseShifts) -> PartialWaves:
    """f_l = sin δ_l · exp(i δ_l)."""
    d = shifts.delta
    return PartialWaves(np.sin(d) * np.exp(1j * d))


def shifts_from_waves(waves: PartialWaves) -> PhaseShifts:
    """Recover δ_l from f_l on the branch (-π/2, π/2]; f_l = 0 maps to δ = 0."""
    arg = np.arctan2(waves.f.imag, waves.f.real)
    delta = np.where(arg > np.pi / 2, arg - np.pi, arg)
    delta = np.where(delta <= -np.pi / 2, delta + np.pi, delta)
    delta = np.where(waves.f == 0, 0.0, delta)
    return PhaseShifts(delta)


def unitarity_residual(waves: PartialWaves) -> float:
    """max_l |Im f_l - |f_l|²|."""
    f = waves.f
    return float(np.max(np.abs(f.imag - np.abs(f) ** 2)))


def conjugate_ambiguity(waves: PartialWaves) -> PartialWaves:
    """The trivial ambiguity f → -f* (all phase shifts change sign)."""
    return PartialWaves(-np.conj(waves.f))


def dispersive_absorptive(waves: PartialWaves) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient sequences (Re f_l, Im f_l) of D and A."""
    return waves.f.real.copy(), waves.f.imag.copy()


# ── Amplitude and cross sections ─────────────────────────────────────────────


def evaluate(waves: PartialWaves, x: float | np.ndarray) -> complex | np.ndarray:
    """f(x) = Σ (2l + 1) f_l P_l(x) for x in [-1, 1]."""
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x_arr) > 1.0):
        raise DomainError(f"cos(theta) must lie in [-1, 1], got {x}")
    value = legendre_series(_weights(waves.L) * waves.f, x_arr)
    return complex(value) if np.ndim(value) == 0 else value


def amplitude_on_rule(waves: PartialWaves, rule: QuadratureRule) -> np.ndarray:
    return legendre_series(_weights(waves.L) * waves.f, rule.nodes)


def angular_modulus(waves: PartialWaves, rule: QuadratureRule) -> AngularFunction:
    """F = |f| at the nodes of *rule*."""
    return AngularFunction(rule=rule, values=np.abs(amplitude_on_rule(waves, rule)))


def elastic_cross_section(waves: PartialWaves) -> float:
    """Σ (2l + 1) |f_l|²."""
    return float(np.sum(_weights(waves.L) * np.abs(waves.f) ** 2))


def total_cross_section(waves: PartialWaves) -> float:
    """σ_tot = Σ (2l + 1) Im f_l = Im f(1) (optical theorem).

    The elastic form is evaluated alongside; a disagreement beyond 1e-9 means
    the waves are not unitary and is logged.
    """
    sigma = float(np.sum(_weights(waves.L) * waves.f.imag))
    elastic = elastic_cross_section(waves)
    if abs(sigma - elastic) > _SIGMA_TOL:
        LOGGER.warning(
            "Optical (%.12g) and elastic (%.12g) total cross sections disagree",
            sigma,
            elastic,
        )
    return sigma


def coefficients_from_waves(f: np.ndarray, tensor: np.ndarray | None = None) -> np.ndarray:
    """C_n = Σ_{a,b} (2a+1)(2b+1) Re(f_a f_b*) G(a, b, n) for a raw wave array."""
    L = f.size - 1
    tensor = triple_product_tensor(L) if tensor is None else tensor
    w = _weights(L) * f
    gram = np.real(np.outer(w, np.conj(w)))
    return np.einsum("ab,abn->n", gram, tensor)


def _coefficients_by_quadrature(waves: PartialWaves) -> np.ndarray:
    L = waves.L
    rule = gauss_rule(2 * L + 1)
    f2 = np.abs(amplitude_on_rule(waves, rule)) ** 2
    table = legendre_table(2 * L, rule.nodes)
    return 0.5 * (table @ (rule.weights * f2))


def cross_section_coefficients(waves: PartialWaves) -> CrossSectionCoefficients:
    """C_n, n = 0..2L, by quadrature with the triple-product algebra as a check."""
    by_quadrature = _coefficients_by_quadrature(waves)
    by_algebra = coefficients_from_waves(waves.f)
    scale = max(1.0, float(np.max(np.abs(by_quadrature))))
    gap = float(np.max(np.abs(by_quadrature - by_algebra)))
    if gap > _DUAL_PATH_TOL * scale:
        raise SelfCheckError(
            f"C_n quadrature and triple-product paths differ by {gap:.3e} (L={waves.L})"
        )
    return CrossSectionCoefficients(by_quadrature)


def reconstruct_cross_section(
    coeffs: CrossSectionCoefficients, x: float | np.ndarray
) -> np.ndarray:
    """F²(x) = Σ (2n + 1) C_n P_n(x)."""
    n = np.arange(coeffs.C.size)
    return legendre_series((2 * n + 1) * coeffs.C, x)
