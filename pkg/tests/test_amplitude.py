from __future__ import annotations

import logging

import mpmath
import numpy as np
import pytest

from psa.amplitude import (
    DomainError,
    angular_modulus,
    conjugate_ambiguity,
    cross_section_coefficients,
    dispersive_absorptive,
    elastic_cross_section,
    evaluate,
    reconstruct_cross_section,
    shifts_from_waves,
    total_cross_section,
    unitarity_residual,
    waves_from_shifts,
)
from psa.legendre import gauss_rule
from psa.models import CrossSectionCoefficients, PartialWaves, PhaseShifts


class TestParameterization:
    def test_s_wave_values(self, s_wave: PartialWaves) -> None:
        assert s_wave.L == 0
        assert s_wave.f[0] == pytest.approx(complex(np.sqrt(3) / 4, 0.25), abs=1e-15)

    def test_shift_round_trip(self, rng: np.random.Generator) -> None:
        delta = rng.uniform(-np.pi / 2 + 1e-6, np.pi / 2, size=9)
        recovered = shifts_from_waves(waves_from_shifts(PhaseShifts(delta)))
        np.testing.assert_allclose(recovered.delta, delta, atol=1e-12)

    def test_zero_wave_maps_to_zero_shift(self) -> None:
        assert shifts_from_waves(PartialWaves([0.0, 0.5j])).delta[0] == 0.0

    def test_waves_lie_on_unitarity_circle(self, rng: np.random.Generator) -> None:
        waves = waves_from_shifts(PhaseShifts(rng.uniform(-1.5, 1.5, size=12)))
        assert unitarity_residual(waves) < 1e-15

    def test_conjugate_ambiguity_flips_shifts(self, three_waves: PartialWaves) -> None:
        mirror = shifts_from_waves(conjugate_ambiguity(three_waves))
        np.testing.assert_allclose(mirror.delta, [-0.5, -0.3, -0.1], atol=1e-14)

    def test_dispersive_absorptive_split(self, three_waves: PartialWaves) -> None:
        re, im = dispersive_absorptive(three_waves)
        np.testing.assert_array_equal(re + 1j * im, three_waves.f)
        assert re.flags.writeable

    def test_models_reject_bad_input(self) -> None:
        with pytest.raises(ValueError):
            PhaseShifts([])
        with pytest.raises(ValueError):
            PartialWaves([complex("nan")])
        with pytest.raises(ValueError):
            PartialWaves([0.1]).f[0] = 0.0


class TestAmplitude:
    def test_evaluate_sums_partial_waves(self, three_waves: PartialWaves) -> None:
        x = 0.37
        p = [1.0, x, (3 * x * x - 1) / 2]
        expected = sum((2 * ell + 1) * three_waves.f[ell] * p[ell] for ell in range(3))
        assert evaluate(three_waves, x) == pytest.approx(expected, abs=1e-15)

    def test_domain_error_outside_interval(self, three_waves: PartialWaves) -> None:
        with pytest.raises(DomainError):
            evaluate(three_waves, 1.5)
        with pytest.raises(DomainError):
            evaluate(three_waves, np.array([0.0, -1.0001]))

    def test_optical_theorem(self, three_waves: PartialWaves) -> None:
        sigma = total_cross_section(three_waves)
        assert evaluate(three_waves, 1.0).imag == pytest.approx(sigma, rel=1e-14)
        assert elastic_cross_section(three_waves) == pytest.approx(sigma, rel=1e-14)

    def test_non_unitary_waves_logged(self, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level(logging.WARNING, logger="psa.amplitude"):
            total_cross_section(PartialWaves([0.5 + 0.1j]))
        assert "disagree" in caplog.text

    def test_angular_modulus_on_rule(self, three_waves: PartialWaves) -> None:
        rule = gauss_rule(10)
        F = angular_modulus(three_waves, rule)
        np.testing.assert_allclose(F.values, np.abs(evaluate(three_waves, rule.nodes)))
        assert F.rule is rule


class TestCrossSectionCoefficients:
    def test_s_wave(self, s_wave: PartialWaves) -> None:
        coeffs = cross_section_coefficients(s_wave)
        np.testing.assert_allclose(coeffs.C, [0.25], atol=1e-15)

    def test_c0_is_total_cross_section(self, three_waves: PartialWaves) -> None:
        coeffs = cross_section_coefficients(three_waves)
        assert coeffs.C.size == 5
        assert coeffs.C[0] == pytest.approx(total_cross_section(three_waves), rel=1e-13)

    def test_against_arbitrary_precision_oracle(self, three_waves: PartialWaves) -> None:
        coeffs = cross_section_coefficients(three_waves)
        f = [mpmath.mpc(z.real, z.imag) for z in three_waves.f]

        def f2(x: mpmath.mpf) -> mpmath.mpf:
            amp = sum((2 * ell + 1) * f[ell] * mpmath.legendre(ell, x) for ell in range(3))
            return abs(amp) ** 2

        for n in range(5):
            oracle = mpmath.quad(lambda x, n=n: f2(x) * mpmath.legendre(n, x), [-1, 1]) / 2
            assert coeffs.C[n] == pytest.approx(float(oracle), abs=1e-13)

    def test_reconstruction_matches_modulus(
        self, three_waves: PartialWaves, rng: np.random.Generator
    ) -> None:
        coeffs = cross_section_coefficients(three_waves)
        x = rng.uniform(-1, 1, size=25)
        np.testing.assert_allclose(
            reconstruct_cross_section(coeffs, x), np.abs(evaluate(three_waves, x)) ** 2, atol=1e-13
        )

    def test_conjugate_pair_shares_coefficients(self, rng: np.random.Generator) -> None:
        waves = waves_from_shifts(PhaseShifts(rng.uniform(-1.5, 1.5, size=6)))
        a = cross_section_coefficients(waves).C
        b = cross_section_coefficients(conjugate_ambiguity(waves)).C
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_coefficients_are_read_only(self) -> None:
        coeffs = CrossSectionCoefficients([1.0, 0.2])
        with pytest.raises(ValueError):
            coeffs.C[0] = 2.0
