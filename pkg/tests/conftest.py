from __future__ import annotations

import numpy as np
import pytest

from psa.amplitude import angular_modulus, waves_from_shifts
from psa.legendre import QuadratureRule, gauss_rule
from psa.models import AngularFunction, PartialWaves, PhaseShifts


@pytest.fixture(autouse=True)
def no_run_log(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep test runs out of the working-directory run log."""
    monkeypatch.setenv("PSA_RUN_LOG", "")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


# ── Amplitudes ────────────────────────────────────────────────────────────────


@pytest.fixture
def s_wave() -> PartialWaves:
    """δ_0 = π/6: f_0 = (√3/4) + i/4, σ = 1/4."""
    return waves_from_shifts(PhaseShifts([np.pi / 6]))


@pytest.fixture
def three_waves() -> PartialWaves:
    return waves_from_shifts(PhaseShifts([0.5, 0.3, 0.1]))


@pytest.fixture
def contracting_waves() -> PartialWaves:
    """Small shifts whose modulus satisfies the 0.79 contraction condition."""
    return waves_from_shifts(PhaseShifts([0.2, 0.03]))


@pytest.fixture
def crichton_shifts() -> tuple[np.ndarray, np.ndarray]:
    """Two three-wave tuples with one cross section (twofold ambiguity at δ_2 = 0.3).

    Conjugating one zero of the first amplitude gives the second.
    """
    return (
        np.array([-0.24902307761419229, -0.79921221759224037, 0.3]),
        np.array([1.440109290087888, -0.47158410920265581, 0.3]),
    )


# ── Grids ─────────────────────────────────────────────────────────────────────


@pytest.fixture
def rule32() -> QuadratureRule:
    return gauss_rule(32)


@pytest.fixture
def contracting_F(contracting_waves: PartialWaves, rule32: QuadratureRule) -> AngularFunction:
    return angular_modulus(contracting_waves, rule32)

