"""Legendre polynomials, Gauss–Legendre quadrature and triple-product integrals.

Everything else in the package builds on three pieces:

- ``eval_legendre`` / ``legendre_table``: P_l by the three-term recurrence
  (l+1) P_{l+1} = (2l+1) z P_l - l P_{l-1}, for real or complex argument;
- ``gauss_rule``: n-point Gauss–Legendre rules on [-1, 1] by Newton iteration
  on the roots of P_n (cached, read-only arrays);
- ``triple_product``: G(a, b, n) = 1/2 ∫ P_a P_b P_n dx, evaluated by a rule
  that is exact for the polynomial integrand.

``check_bounds_inequality`` verifies |z|^l < |P_l(z)| < (1 + √2)^l |z|^l
outside the unit disk.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

LOGGER = logging.getLogger(__name__)

# Newton budget for the roots of P_n; n <= 512 converges in well under 10 steps.
_NEWTON_MAX_ITER = 100
_NEWTON_TOL = 1e-14

_SILVER = 1.0 + math.sqrt(2.0)


class QuadratureConvergenceError(RuntimeError):
    """Raised when Newton iteration for Gauss nodes exhausts its budget."""


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss–Legendre nodes (strictly increasing) and positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return int(self.nodes.shape[0])

    def integrate(self, values: np.ndarray) -> float | complex:
        """∫_{-1}^{1} g(x) dx for *values* = g at the nodes."""
        return self.weights @ np.asarray(values)


@dataclass(frozen=True)
class BoundsReport:
    ell: int
    z: complex
    lower: float  # |z|^l
    value: float  # |P_l(z)|
    upper: float  # (1 + √2)^l |z|^l
    lower_ok: bool
    upper_ok: bool


# ── Evaluation ───────────────────────────────────────────────────────────────


def eval_legendre(ell: int, z: complex) -> complex:
    """P_ell(z) by upward recurrence.

    Examples::

        >>> eval_legendre(2, 3)
        (13+0j)
        >>> eval_legendre(3, 2)
        (17+0j)
    """
    if ell < 0:
        raise ValueError(f"Legendre degree must be >= 0, got {ell}")
    z = complex(z)
    if ell == 0:
        return 1.0 + 0.0j
    p_prev, p = 1.0 + 0.0j, z
    for k in range(1, ell):
        p_prev, p = p, ((2 * k + 1) * z * p - k * p_prev) / (k + 1)
    return p


def legendre_table(lmax: int, x: np.ndarray | float | complex) -> np.ndarray:
    """Stack of P_0(x) .. P_lmax(x), shape ``(lmax + 1,) + x.shape``."""
    if lmax < 0:
        raise ValueError(f"lmax must be >= 0, got {lmax}")
    x = np.asarray(x)
    dtype = np.result_type(x.dtype, np.float64)
    table = np.empty((lmax + 1,) + x.shape, dtype=dtype)
    table[0] = 1.0
    if lmax >= 1:
        table[1] = x
    for k in range(1, lmax):
        table[k + 1] = ((2 * k + 1) * x * table[k] - k * table[k - 1]) / (k + 1)
    return table


def legendre_series(coeffs: np.ndarray, x: np.ndarray | float) -> np.ndarray:
    """Σ_l coeffs[l] P_l(x) (Clenshaw summation; complex coefficients allowed)."""
    return npleg.legval(x, np.asarray(coeffs))


def legendre_coefficients(
    values: np.ndarray, rule: QuadratureRule, n_terms: int | None = None
) -> np.ndarray:
    """Project nodal *values* onto P_0 .. P_{n_terms-1}.

    a_l = (2l + 1)/2 Σ_k w_k g(x_k) P_l(x_k). With ``n_terms`` equal to the rule
    order (the default) the series interpolates the values at the nodes.
    """
    n_terms = rule.order if n_terms is None else n_terms
    table = legendre_table(n_terms - 1, rule.nodes)
    scale = (2 * np.arange(n_terms) + 1) / 2.0
    return scale * (table @ (rule.weights * np.asarray(values)))


# ── Quadrature ───────────────────────────────────────────────────────────────


def _legendre_with_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=256)
def gauss_rule(n: int) -> QuadratureRule:
    """n-point Gauss–Legendre rule on [-1, 1].

    Exact for polynomials of degree <= 2n - 1. Rules are cached; the returned
    arrays are read-only so the cached value can be shared freely.
    """
    if n < 1:
        raise ValueError(f"Quadrature order must be >= 1, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(_NEWTON_MAX_ITER):
        p, dp = _legendre_with_derivative(n, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < _NEWTON_TOL:
            break
    else:
        raise QuadratureConvergenceError(
            f"Gauss-Legendre roots for n={n} did not converge in {_NEWTON_MAX_ITER} steps"
        )
    _, dp = _legendre_with_derivative(n, x)
    weights = 2.0 / ((1.0 - x * x) * dp * dp)

    order = np.argsort(x)
    x, weights = x[order], weights[order]
    # exact mirror symmetry of the rule
    x = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])
    x.flags.writeable = False
    weights.flags.writeable = False
    LOGGER.debug("Built %d-point Gauss-Legendre rule", n)
    return QuadratureRule(nodes=x, weights=weights)


# ── Triple products ──────────────────────────────────────────────────────────


def _triple_vanishes(a: int, b: int, n: int) -> bool:
    return (a + b + n) % 2 == 1 or n > a + b or n < abs(a - b)


@lru_cache(maxsize=65536)
def triple_product(a: int, b: int, n: int) -> float:
    """G(a, b, n) = 1/2 ∫_{-1}^{1} P_a P_b P_n dx.

    Zero by parity or the triangle condition is returned without quadrature.
    Otherwise a rule of order (a + b + n)/2 + 1 integrates the degree
    a + b + n integrand exactly.
    """
    if min(a, b, n) < 0:
        raise ValueError(f"Degrees must be >= 0, got ({a}, {b}, {n})")
    if _triple_vanishes(a, b, n):
        return 0.0
    rule = gauss_rule((a + b + n) // 2 + 1)
    table = legendre_table(max(a, b, n), rule.nodes)
    return 0.5 * float(np.sum(rule.weights * table[a] * table[b] * table[n]))


@lru_cache(maxsize=64)
def triple_product_tensor(L: int) -> np.ndarray:
    """G[a, b, n] for a, b <= L and n <= 2L (read-only).

    One rule of order 2L + 1 covers every entry (integrand degree <= 4L).
    Entries that vanish by parity or the triangle condition are exact zeros.
    """
    rule = gauss_rule(2 * L + 1)
    table = legendre_table(2 * L, rule.nodes)
    low = table[: L + 1]
    tensor = 0.5 * np.einsum("k,ak,bk,nk->abn", rule.weights, low, low, table)
    a, b, n = np.ogrid[: L + 1, : L + 1, : 2 * L + 1]
    vanish = ((a + b + n) % 2 == 1) | (n > a + b) | (n < np.abs(a - b))
    tensor[vanish] = 0.0
    tensor.flags.writeable = False
    return tensor


# ── Inequalities outside the unit disk ──────────────────────────────────────


def check_bounds_inequality(ell: int, z: complex) -> BoundsReport:
    """Check |z|^l < |P_l(z)| < (1 + √2)^l |z|^l for |z| > 1.

    At l = 0 every side equals 1 and at l = 1 the lower side is |z| itself,
    so the comparisons are non-strict there.
    """
    z = complex(z)
    if abs(z) <= 1.0:
        raise ValueError(f"check_bounds_inequality requires |z| > 1, got |z| = {abs(z)}")
    modulus = abs(z)
    lower = modulus**ell
    upper = _SILVER**ell * lower
    value = abs(eval_legendre(ell, z))
    if ell <= 1:
        lower_ok, upper_ok = value >= lower, value <= upper
    else:
        lower_ok, upper_ok = value > lower, value < upper
    return BoundsReport(
        ell=ell,
        z=z,
        lower=lower,
        value=value,
        upper=upper,
        lower_ok=bool(lower_ok),
        upper_ok=bool(upper_ok),
    )
