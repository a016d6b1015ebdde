from __future__ import annotations

import numpy as np
import pytest

from psa.amplitude import angular_modulus, shifts_from_waves, waves_from_shifts
from psa.legendre import QuadratureRule, gauss_rule, legendre_table
from psa.models import AngularFunction, PartialWaves, PhaseShifts
from psa.phase_solver import (
    MaxIterExceeded,
    NonpositiveF,
    PhaseFunction,
    SinOutOfRange,
    azimuthal_kernel,
    contraction_sup,
    equation_residual,
    exact_phase,
    fixed_point_solve,
    waves_from_phase,
    wu_ohmura_rhs,
)


def _constant_F(value: float, order: int = 16) -> AngularFunction:
    rule = gauss_rule(order)
    return AngularFunction(rule=rule, values=np.full(order, value))


class TestConstantModulus:
    def test_contraction_sup_equals_constant(self) -> None:
        report = contraction_sup(_constant_F(0.5), n_grid=21)
        assert report.sup_ratio == pytest.approx(0.5, abs=1e-12)
        assert report.condition_079 and report.condition_089 and report.condition_existence

    def test_rhs_is_square(self) -> None:
        F = _constant_F(0.5)
        phi = PhaseFunction(F.rule, np.full(16, 0.3))
        assert wu_ohmura_rhs(F, phi, 0.2) == pytest.approx(0.25, abs=1e-14)

    def test_converges_to_arcsin(self) -> None:
        result = fixed_point_solve(_constant_F(0.5))
        np.testing.assert_allclose(result.phase.phi, np.pi / 6, atol=1e-12)
        assert result.iterations == 2
        assert result.trace_dict()["converged"]


class TestKernel:
    def test_addition_theorem(self) -> None:
        order = 12
        rule = gauss_rule(order)
        kernel = azimuthal_kernel(order)
        table = legendre_table(order - 1, rule.nodes)
        expected = np.einsum("li,lk->ikl", table, table)
        np.testing.assert_allclose(kernel, expected, atol=1e-12)
        assert not kernel.flags.writeable

    def test_direct_rhs_matches_node_rhs(
        self, contracting_waves: PartialWaves, contracting_F: AngularFunction
    ) -> None:
        phi = exact_phase(contracting_waves, contracting_F.rule)
        for i in (0, 7, 31):
            x12 = float(contracting_F.rule.nodes[i])
            rhs = wu_ohmura_rhs(contracting_F, phi, x12)
            lhs = contracting_F.values[i] * np.sin(phi.phi[i])
            assert rhs == pytest.approx(lhs, abs=1e-12)

    def test_doubling_resolution(
        self, contracting_waves: PartialWaves, contracting_F: AngularFunction
    ) -> None:
        phi = exact_phase(contracting_waves, contracting_F.rule)
        for x12 in (-0.9, 0.1, 0.75):
            coarse = wu_ohmura_rhs(contracting_F, phi, x12, n_theta=32, n_azimuth=64)
            fine = wu_ohmura_rhs(contracting_F, phi, x12, n_theta=64, n_azimuth=128)
            assert abs(fine - coarse) < 1e-9


class TestContraction:
    def test_small_shifts_contract(self, contracting_F: AngularFunction) -> None:
        report = contraction_sup(contracting_F, n_grid=41)
        assert report.condition_079
        assert report.diagonal_ratio <= report.sup_ratio + 1e-12
        assert set(report.to_dict()) >= {"sup_ratio", "attained_at", "condition_079"}

    def test_larger_shifts_do_not(self) -> None:
        waves = waves_from_shifts(PhaseShifts([0.4, 0.1]))
        report = contraction_sup(angular_modulus(waves, gauss_rule(32)), n_grid=41)
        assert not report.condition_079

    def test_nonpositive_F(self) -> None:
        values = np.ones(8)
        values[3] = 0.0
        with pytest.raises(NonpositiveF):
            contraction_sup(AngularFunction(gauss_rule(8), values))


class TestPhaseEquation:
    def test_identity_for_exact_amplitude(self, contracting_waves: PartialWaves) -> None:
        rule = gauss_rule(32)
        F = angular_modulus(contracting_waves, rule)
        assert equation_residual(F, exact_phase(contracting_waves, rule)) < 1e-12

    @pytest.mark.parametrize("delta0,ratio,L", [(0.15, 0.1, 2), (0.25, 0.05, 3), (0.1, 0.15, 5)])
    def test_identity_for_geometric_family(self, delta0: float, ratio: float, L: int) -> None:
        waves = waves_from_shifts(PhaseShifts(delta0 * ratio ** np.arange(L + 1)))
        rule = gauss_rule(32)
        F = angular_modulus(waves, rule)
        assert equation_residual(F, exact_phase(waves, rule)) < 1e-8

    def test_off_branch_phase_rejected(self, three_waves: PartialWaves) -> None:
        # Re f changes sign on [-1, 1] for these shifts
        with pytest.raises(ValueError):
            exact_phase(three_waves, gauss_rule(32))


class TestFixedPoint:
    def test_recovers_phase_and_shifts(
        self, contracting_waves: PartialWaves, contracting_F: AngularFunction
    ) -> None:
        result = fixed_point_solve(contracting_F)
        truth = exact_phase(contracting_waves, contracting_F.rule)
        np.testing.assert_allclose(result.phase.phi, truth.phi, atol=1e-7)
        recovered = shifts_from_waves(waves_from_phase(contracting_F, result.phase, L=1))
        np.testing.assert_allclose(recovered.delta, [0.2, 0.03], atol=1e-6)
        assert equation_residual(contracting_F, result.phase) < 1e-9

    def test_geometric_convergence(self, contracting_F: AngularFunction) -> None:
        changes = [c for c in fixed_point_solve(contracting_F).changes if c > 1e-12]
        assert len(changes) >= 4
        for before, after in zip(changes[2:], changes[3:]):
            assert after <= 0.9 * before

    def test_refinement_stable(self, contracting_waves: PartialWaves) -> None:
        recovered = []
        for order in (32, 64):
            F = angular_modulus(contracting_waves, gauss_rule(order))
            result = fixed_point_solve(F, tol=1e-13)
            recovered.append(waves_from_phase(F, result.phase, L=1).f)
        np.testing.assert_allclose(recovered[0], recovered[1], atol=1e-9)

    def test_cutoff_picks_wave_count(
        self, contracting_F: AngularFunction, contracting_waves: PartialWaves
    ) -> None:
        phi = exact_phase(contracting_waves, contracting_F.rule)
        assert waves_from_phase(contracting_F, phi).L == 1

    def test_budget_exhausted(self, contracting_F: AngularFunction) -> None:
        with pytest.raises(MaxIterExceeded) as excinfo:
            fixed_point_solve(contracting_F, max_iter=1)
        assert len(excinfo.value.trace) == 1

    def test_sin_out_of_range(self) -> None:
        values = np.ones(16)
        values[0] = 1e-3
        with pytest.raises(SinOutOfRange):
            fixed_point_solve(AngularFunction(gauss_rule(16), values))

    def test_nonpositive_F(self, rule32: QuadratureRule) -> None:
        with pytest.raises(NonpositiveF):
            fixed_point_solve(AngularFunction(rule32, -np.ones(32)))

    def test_phase_function_validation(self, rule32: QuadratureRule) -> None:
        with pytest.raises(ValueError):
            PhaseFunction(rule32, np.zeros(31))
        with pytest.raises(ValueError):
            PhaseFunction(rule32, np.full(32, 2.0))

    def test_branch_is_half_open(self, rule32: QuadratureRule) -> None:
        upper = PhaseFunction(rule32, np.full(32, np.pi / 2))
        assert upper.phi[0] == np.pi / 2
        with pytest.raises(ValueError):
            PhaseFunction(rule32, np.full(32, -np.pi / 2))
