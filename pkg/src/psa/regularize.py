"""Unitary tails, the ℓ ln ℓ mollifier and entire-function order estimates.

A polynomial amplitude (waves 0..L) is completed by a tail starting at L + 1:

    Re r_l = (λ/2) ∫ P_l(x) e^x dx,      Im r_l = (1 - √(1 - 4 Re r_l²)) / 2,

which is unitary wave by wave for |λ| < 1/2. Rodrigues' formula and l-fold
integration by parts give

    ∫ P_l(x) e^x dx = 1/(2^l l!) ∫ (1 - x²)^l e^x dx = 1/(2^l l!) ∫ (1 - x²)^l cosh x dx

for every l: (1 - x²)^l is even, so only the even part of e^x survives.
``tail_re`` evaluates the last form (positive integrand, no cancellation);
``tail_re_direct`` and ``tail_re_series`` are independent checks.

Decay of the dispersive coefficients Re r_l ~ 1/(2^l l!) gives an entire
function of order 1, the absorptive ones Im r_l ~ Re r_l² order 1/2;
``order_estimate`` reads these orders off the coefficients via
ρ = limsup l ln l / (-ln |a_l|).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln, xlogy

from .amplitude import evaluate
from .legendre import gauss_rule, legendre_table
from .models import PartialWaves, PhaseShifts

LOGGER = logging.getLogger(__name__)

LAMBDA_LIMIT = 0.5
# |Re r_l| below this is treated as the end of the tail
UNDERFLOW_FLOOR = 1e-300
# 2^l l! overflows double precision past this
MAX_TAIL_ELL = 170
# ratios growing faster than this per unit ln l signal geometric decay
DIVERGENCE_SLOPE = 0.5

_UNITARITY_TOL = 1e-14


class AllZeroWindow(ValueError):
    """No usable coefficient in the trailing window; the order is undefined."""


def _check_lambda(lam: float) -> None:
    if not abs(lam) < LAMBDA_LIMIT:
        raise ValueError(f"|lambda| must be < {LAMBDA_LIMIT}, got {lam}")


def _check_ell(ell: int) -> None:
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")


def _log_rodrigues(ell: int) -> float:
    """ln 1/(2^l l!)."""
    return -ell * math.log(2.0) - float(gammaln(ell + 1))


# ── Tail coefficients ───────────────────────────────────────────────────────


def tail_re(ell: int, lam: float) -> float:
    """Re r_l = (λ/2)/(2^l l!) ∫ cosh x (1 - x²)^l dx.

    Gauss-Legendre of order l + 30; the 1/(2^l l!) factor is applied from
    log space.
    """
    _check_lambda(lam)
    _check_ell(ell)
    if lam == 0:
        return 0.0
    rule = gauss_rule(ell + 30)
    x = rule.nodes
    integral = float(rule.weights @ (np.cosh(x) * (1.0 - x * x) ** ell))
    return 0.5 * lam * integral * math.exp(_log_rodrigues(ell))


def tail_re_direct(ell: int, lam: float, order: int | None = None) -> float:
    """(λ/2) ∫ P_l(x) e^x dx by plain quadrature.

    The integrand oscillates and the result is tiny for large l, so this
    agrees with ``tail_re`` in absolute terms only.
    """
    _check_lambda(lam)
    _check_ell(ell)
    rule = gauss_rule(order or ell + 30)
    p = legendre_table(ell, rule.nodes)[ell]
    return 0.5 * lam * float(rule.weights @ (p * np.exp(rule.nodes)))


def tail_re_series(ell: int, lam: float, terms: int = 30) -> float:
    """(λ/2)/(2^l l!) Σ_k B(k + 1/2, l + 1)/(2k)!, the cosh series term by term."""
    _check_lambda(lam)
    _check_ell(ell)
    k = np.arange(terms)
    logs = betaln(k + 0.5, ell + 1.0) - gammaln(2 * k + 1.0) + _log_rodrigues(ell)
    return 0.5 * lam * float(np.sum(np.exp(logs)))


def tail_re_asymptotic(ell: int, lam: float) -> float:
    """(λ/2)/(2^l l!) √(π/(l - 1/2)), the large-l form of ``tail_re``."""
    if ell < 1:
        raise ValueError(f"The asymptotic form needs ell >= 1, got {ell}")
    return 0.5 * lam * math.exp(_log_rodrigues(ell)) * math.sqrt(math.pi / (ell - 0.5))


def unitarize_tail(re_r: float) -> float:
    """Smaller root of Im = Re² + Im², i.e. (1 - √(1 - 4 Re²))/2.

    Evaluated as 2 Re² / (1 + √(1 - 4 Re²)), which keeps full relative
    precision for tiny Re.
    """
    if abs(re_r) > 0.5:
        raise ValueError(f"|re_r| must be <= 1/2 for a unitary partial wave, got {re_r}")
    root = math.sqrt(max(0.0, 1.0 - 4.0 * re_r * re_r))
    return 2.0 * re_r * re_r / (1.0 + root)


@dataclass(frozen=True, eq=False)
class TailCoefficients:
    lam: float
    start: int
    re_r: np.ndarray
    im_r: np.ndarray
    lmax: int
    # lmax chosen by the caller rather than by the underflow rule
    explicit_lmax: bool = False

    def __post_init__(self) -> None:
        _check_lambda(self.lam)
        re = np.asarray(self.re_r, dtype=np.float64)
        im = np.asarray(self.im_r, dtype=np.float64)
        if re.shape != im.shape or re.size != self.lmax - self.start + 1:
            raise ValueError("Tail arrays do not span start..lmax")
        closed_form = (1.0 - np.sqrt(1.0 - 4.0 * re * re)) / 2.0
        if np.any(np.abs(im - closed_form) > _UNITARITY_TOL):
            raise ValueError("Tail imaginary parts are not the unitary root")
        small = np.abs(re) < 0.4
        within = im[small] <= 1.25 * re[small] ** 2
        strict = im[small] < 1.25 * re[small] ** 2
        if not np.all(within) or not np.all(strict | (re[small] ** 2 <= 1e-300)):
            raise ValueError("Tail violates Im r < (5/4) Re r² where |Re r| < 2/5")
        if not self.explicit_lmax and not (
            abs(re[-1]) < UNDERFLOW_FLOOR or self.lmax >= MAX_TAIL_ELL
        ):
            raise ValueError("Tail truncated above the underflow floor")
        re.flags.writeable = False
        im.flags.writeable = False
        object.__setattr__(self, "re_r", re)
        object.__setattr__(self, "im_r", im)

    @property
    def waves(self) -> np.ndarray:
        return self.re_r + 1j * self.im_r

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "start": self.start,
            "re_r": [float(v) for v in self.re_r],
            "im_r": [float(v) for v in self.im_r],
        }


def build_tail(L: int, lam: float, lmax: int | None = None) -> TailCoefficients:
    """Tail waves L + 1 .. lmax.

    Without ``lmax`` the tail runs to the first l with |Re r_l| < 1e-300, or
    to l = 170, whichever comes first.
    """
    _check_lambda(lam)
    start = L + 1
    if lmax is not None and lmax < start:
        raise ValueError(f"lmax={lmax} must be >= L + 1 = {start}")
    re: list[float] = []
    ell = start
    while True:
        value = tail_re(ell, lam)
        re.append(value)
        if lmax is not None:
            if ell >= lmax:
                break
        elif abs(value) < UNDERFLOW_FLOOR or ell >= MAX_TAIL_ELL:
            break
        ell += 1
    im = [unitarize_tail(v) for v in re]
    LOGGER.debug("Tail for L=%d, lambda=%g runs to l=%d", L, lam, ell)
    return TailCoefficients(
        lam=lam,
        start=start,
        re_r=np.array(re),
        im_r=np.array(im),
        lmax=ell,
        explicit_lmax=lmax is not None,
    )


def extend_amplitude(waves: PartialWaves, lam: float, lmax: int | None = None) -> PartialWaves:
    """Append the unitary tail to *waves*."""
    tail = build_tail(waves.L, lam, lmax)
    extended = PartialWaves(np.concatenate([waves.f, tail.waves]))
    appended = extended.f[tail.start :]
    if np.any(np.abs(appended.imag - np.abs(appended) ** 2) > _UNITARITY_TOL):
        raise ValueError("Appended tail is not unitary")
    return extended


def mollify(shifts: PhaseShifts, lam: float) -> PhaseShifts:
    """δ_l → δ_l exp(-λ l ln l), with l ln l = 0 at l = 0 and 1."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    ell = np.arange(shifts.delta.size, dtype=np.float64)
    return PhaseShifts(shifts.delta * np.exp(-lam * xlogy(ell, ell)))


# ── Order estimation ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class OrderEstimate:
    rho: float
    ells: tuple[int, ...]
    ratios: tuple[float, ...]
    window: int
    flag: str
    slope: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "ratios": list(self.ratios),
            "ells": list(self.ells),
            "window": self.window,
            "flag": self.flag,
            "slope": self.slope,
        }


def order_estimate(
    coeffs: np.ndarray, window: int = 20, strict: bool = False, start: int = 0
) -> OrderEstimate:
    """ρ ≈ max over the trailing window of l ln l / (-ln |a_l|).

    Only l >= max(2, start) with 0 < |a_l| < 1 contribute. ``flag`` is
    ``allzero`` when the window has no usable entry, ``diverging`` when the
    ratios climb faster than 0.5 per unit ln l (geometric decay, no finite
    order), and ``converging`` otherwise.
    """
    if window < 5:
        raise ValueError(f"window must be >= 5, got {window}")
    magnitude = np.abs(np.asarray(coeffs)).astype(np.float64).reshape(-1)
    if start < 0:
        raise ValueError(f"start must be >= 0, got {start}")
    first = max(start, magnitude.size - window)
    ells, ratios = [], []
    for ell in range(max(2, first), magnitude.size):
        a = magnitude[ell]
        if 0.0 < a < 1.0:
            ells.append(ell)
            ratios.append(ell * math.log(ell) / -math.log(a))

    if not ratios:
        if strict:
            raise AllZeroWindow(f"No usable coefficient among the last {window}")
        return OrderEstimate(rho=0.0, ells=(), ratios=(), window=window, flag="allzero")

    slope = 0.0
    if len(ratios) >= 3:
        slope = float(np.polyfit(np.log(ells), ratios, 1)[0])
    flag = "diverging" if slope > DIVERGENCE_SLOPE else "converging"
    return OrderEstimate(
        rho=max(ratios),
        ells=tuple(ells),
        ratios=tuple(ratios),
        window=window,
        flag=flag,
        slope=slope,
    )


@dataclass(frozen=True)
class SplitReport:
    dispersive: OrderEstimate
    absorptive: OrderEstimate
    dispersive_ok: bool
    absorptive_ok: bool

    def to_dict(self) -> dict:
        return {
            "dispersive": self.dispersive.to_dict(),
            "absorptive": self.absorptive.to_dict(),
            "dispersive_ok": self.dispersive_ok,
            "absorptive_ok": self.absorptive_ok,
        }


def verify_da_split(extended: PartialWaves, start: int, window: int = 20) -> SplitReport:
    """Orders of Re f_l (expected 1) and Im f_l (expected 1/2) over the tail.

    Only l >= *start* enter the window, so a zero tail raises AllZeroWindow
    even when the head waves are nonzero.
    """
    if extended.L < 50:
        LOGGER.warning("Order estimates at lmax=%d are far from their limit", extended.L)
    rho_d = order_estimate(extended.f.real, window, strict=True, start=start)
    rho_a = order_estimate(extended.f.imag, window, strict=True, start=start)
    return SplitReport(
        dispersive=rho_d,
        absorptive=rho_a,
        dispersive_ok=abs(rho_d.rho - 1.0) < 0.15,
        absorptive_ok=abs(rho_a.rho - 0.5) < 0.1,
    )


@dataclass(frozen=True)
class SensitivityReport:
    lambdas: tuple[float, ...]
    sup_diff: tuple[float, ...]
    slopes: tuple[float, ...]

    @property
    def stable(self) -> bool:
        """Fitted slopes agree within a factor 2."""
        positive = [k for k in self.slopes if k > 0]
        return bool(positive) and max(positive) <= 2.0 * min(positive)


def cross_section_sensitivity(
    waves: PartialWaves, lambdas: tuple[float, ...] = (1e-2, 1e-3, 1e-4), n_grid: int = 200
) -> SensitivityReport:
    """sup over an x grid of |F²_λ - F²_0| and its ratio to λ."""
    x = np.linspace(-1.0, 1.0, n_grid)
    base = np.abs(evaluate(waves, x)) ** 2
    diffs, slopes = [], []
    for lam in lambdas:
        if lam == 0:
            raise ValueError("lambda = 0 has no slope")
        shifted = np.abs(evaluate(extend_amplitude(waves, lam), x)) ** 2
        diff = float(np.max(np.abs(shifted - base)))
        diffs.append(diff)
        slopes.append(diff / abs(lam))
    return SensitivityReport(tuple(lambdas), tuple(diffs), tuple(slopes))
