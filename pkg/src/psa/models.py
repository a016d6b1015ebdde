from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .legendre import QuadratureRule


def _frozen(values: object, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PhaseShifts:
    """Real phase shifts δ_l in radians, l = 0..L."""

    delta: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", _frozen(self.delta, np.float64))
        if self.delta.size == 0:
            raise ValueError("PhaseShifts needs at least one entry")
        if not np.all(np.isfinite(self.delta)):
            raise ValueError("PhaseShifts entries must be finite")

    @property
    def L(self) -> int:
        return self.delta.size - 1


@dataclass(frozen=True, eq=False)
class PartialWaves:
    """Complex partial-wave amplitudes f_l, l = 0..L."""

    f: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", _frozen(self.f, np.complex128))
        if self.f.size == 0:
            raise ValueError("PartialWaves needs at least one entry")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("PartialWaves entries must be finite")

    @property
    def L(self) -> int:
        return self.f.size - 1


@dataclass(frozen=True, eq=False)
class CrossSectionCoefficients:
    """Legendre coefficients C_n of F² = Σ (2n + 1) C_n P_n, n = 0..2L."""

    C: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "C", _frozen(self.C, np.float64))
        if self.C.size == 0:
            raise ValueError("CrossSectionCoefficients needs at least one entry")
        if not np.all(np.isfinite(self.C)):
            raise ValueError("CrossSectionCoefficients entries must be finite")


@dataclass(frozen=True, eq=False)
class AngularFunction:
    """A real function of cos θ sampled at the nodes of ``rule`` (F, F² or φ)."""

    rule: QuadratureRule
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.values.size != self.rule.order:
            raise ValueError(
                f"AngularFunction has {self.values.size} values for a rule of order "
                f"{self.rule.order}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("AngularFunction values must be finite")
