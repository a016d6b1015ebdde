from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from psa.amplitude import angular_modulus, waves_from_shifts
from psa.cli import (
    EXIT_EMPTY,
    EXIT_INVALID,
    EXIT_MAX_ITER,
    EXIT_OK,
    EXIT_SIN_RANGE,
    EXIT_USAGE,
    main,
)
from psa.codec import dump_json, load_json, write_angular_csv, write_grid_csv
from psa.legendre import gauss_rule
from psa.models import AngularFunction, PhaseShifts


def _read_column(path: Path) -> np.ndarray:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return np.array([float(r[1]) for r in rows[1:]])


@pytest.fixture
def out(tmp_path: Path) -> Path:
    return tmp_path / "out"


class TestForward:
    def test_s_wave(self, tmp_path: Path, out: Path) -> None:
        delta = dump_json({"delta": [math.pi / 6]}, tmp_path / "delta.json")
        assert main(["forward", str(delta), "--out", str(out)]) == EXIT_OK
        xsec = load_json(out / "xsec.json")
        assert xsec["C"] == pytest.approx([0.25], abs=1e-15)
        assert xsec["sigma"] == pytest.approx(0.25, abs=1e-15)
        grid = _read_column(out / "xsec_grid.csv")
        assert grid.size == 64
        np.testing.assert_allclose(grid, 0.25, atol=1e-15)
        assert (out / "F_grid.csv").read_text().startswith("cos_theta,value\n")
        assert load_json(out / "forward.manifest.json")["status"] == "ok"

    def test_missing_delta(self, tmp_path: Path, out: Path) -> None:
        bad = dump_json({"shifts": [0.1]}, tmp_path / "bad.json")
        assert main(["forward", str(bad), "--out", str(out)]) == EXIT_USAGE
        manifest = load_json(out / "forward.manifest.json")
        assert manifest["exit_code"] == EXIT_USAGE
        assert "delta" in manifest["error"]

    def test_unknown_command(self) -> None:
        assert main(["transmogrify"]) == EXIT_USAGE

    def test_bad_option_value(self, tmp_path: Path) -> None:
        delta = dump_json({"delta": [0.1]}, tmp_path / "delta.json")
        assert main(["forward", str(delta), "--nodes", "0"]) == EXIT_USAGE


class TestEnumerate:
    def test_round_trip(self, tmp_path: Path, out: Path) -> None:
        delta = dump_json({"delta": [0.5, 0.3, 0.1]}, tmp_path / "delta.json")
        assert main(["forward", str(delta), "--out", str(out)]) == EXIT_OK
        assert main(["enumerate", str(out / "xsec.json"), "--out", str(out)]) == EXIT_OK
        document = load_json(out / "solutions.json")
        assert len(document["solutions"]) == 1
        f = np.array([complex(re, im) for re, im in document["solutions"][0]["f"]])
        expected = waves_from_shifts(PhaseShifts([0.5, 0.3, 0.1])).f
        np.testing.assert_allclose(f, expected, atol=1e-10)

    def test_unitarity_violation(self, tmp_path: Path, out: Path) -> None:
        xsec = dump_json({"C": [1.0, 0.0, 2.0]}, tmp_path / "xsec.json")
        assert main(["enumerate", str(xsec), "--out", str(out)]) == EXIT_INVALID

    def test_empty_solution_set(self, tmp_path: Path, out: Path) -> None:
        xsec = dump_json({"C": [1.0, 0.0, 0.6]}, tmp_path / "xsec.json")
        assert main(["enumerate", str(xsec), "--out", str(out)]) == EXIT_EMPTY
        assert load_json(out / "solutions.json")["solutions"] == []

    def test_no_sigma_prune_flag(self, tmp_path: Path, out: Path) -> None:
        xsec = dump_json({"C": [0.25]}, tmp_path / "xsec.json")
        args = ["enumerate", str(xsec), "--no-sigma-prune", "--out", str(out)]
        assert main(args) == EXIT_OK
        manifest = load_json(out / "enumerate.manifest.json")
        assert manifest["parameters"]["no_sigma_prune"] is True


class TestPhaseSolve:
    def test_constant_modulus(self, tmp_path: Path, out: Path) -> None:
        rule = gauss_rule(16)
        grid = write_grid_csv(tmp_path / "F.csv", rule.nodes, np.full(16, 0.5))
        assert main(["phase-solve", str(grid), "--out", str(out)]) == EXIT_OK
        np.testing.assert_allclose(_read_column(out / "phi.csv"), np.pi / 6, atol=1e-12)
        trace = load_json(out / "trace.json")
        assert trace["converged"] is True
        assert trace["iters"] == 2

    def test_iteration_budget(self, tmp_path: Path, out: Path) -> None:
        waves = waves_from_shifts(PhaseShifts([0.2, 0.03]))
        grid = write_angular_csv(tmp_path / "F.csv", angular_modulus(waves, gauss_rule(32)))
        args = ["phase-solve", str(grid), "--max-iter", "1", "--out", str(out)]
        assert main(args) == EXIT_MAX_ITER
        trace = load_json(out / "trace.json")
        assert trace["converged"] is False
        assert trace["iters"] == 1

    def test_sin_out_of_range(self, tmp_path: Path, out: Path) -> None:
        rule = gauss_rule(16)
        values = np.ones(16)
        values[0] = 1e-3
        grid = write_angular_csv(tmp_path / "F.csv", AngularFunction(rule, values))
        assert main(["phase-solve", str(grid), "--out", str(out)]) == EXIT_SIN_RANGE

    def test_nonpositive_F(self, tmp_path: Path, out: Path) -> None:
        rule = gauss_rule(8)
        grid = write_grid_csv(tmp_path / "F.csv", rule.nodes, np.zeros(8))
        assert main(["phase-solve", str(grid), "--out", str(out)]) == EXIT_INVALID


class TestContraction:
    def test_report(self, tmp_path: Path, out: Path) -> None:
        rule = gauss_rule(16)
        grid = write_grid_csv(tmp_path / "F.csv", rule.nodes, np.full(16, 0.5))
        args = ["contraction", str(grid), "--grid", "11", "--out", str(out)]
        assert main(args) == EXIT_OK
        report = load_json(out / "report.json")
        assert report["sup_ratio"] == pytest.approx(0.5, abs=1e-12)
        assert report["condition_079"] is True


class TestRegularize:
    def test_zero_lambda(self, tmp_path: Path, out: Path) -> None:
        delta = dump_json({"delta": [0.5, 0.3]}, tmp_path / "delta.json")
        assert main(["regularize", str(delta), "--lambda", "0", "--out", str(out)]) == EXIT_OK
        document = load_json(out / "extended.json")
        assert document["start"] == 2
        assert all(v == 0.0 for v in document["re_r"])
        assert "orders" not in document

    def test_orders_reported(self, tmp_path: Path, out: Path) -> None:
        delta = dump_json({"delta": [math.pi / 2]}, tmp_path / "delta.json")
        args = ["regularize", str(delta), "--lambda", "0.4", "--lmax", "50", "--out", str(out)]
        assert main(args) == EXIT_OK
        document = load_json(out / "extended.json")
        assert len(document["f"]) == 51
        assert document["orders"]["dispersive_ok"] is True
        assert document["orders"]["absorptive_ok"] is True

    def test_lambda_out_of_range(self, tmp_path: Path, out: Path) -> None:
        delta = dump_json({"delta": [0.5]}, tmp_path / "delta.json")
        assert main(["regularize", str(delta), "--lambda", "0.7", "--out", str(out)]) == EXIT_USAGE

    def test_lambda_required(self, tmp_path: Path) -> None:
        delta = dump_json({"delta": [0.5]}, tmp_path / "delta.json")
        assert main(["regularize", str(delta)]) == EXIT_USAGE


class TestOrder:
    def test_inverse_factorial(self, tmp_path: Path, out: Path) -> None:
        coeffs = [math.exp(-math.lgamma(k + 1)) for k in range(51)]
        path = dump_json({"coefficients": coeffs}, tmp_path / "coeffs.json")
        assert main(["order", str(path), "--out", str(out)]) == EXIT_OK
        document = load_json(out / "order.json")
        assert 1.3 <= document["rho"] <= 1.4
        assert document["flag"] == "converging"


class TestScan:
    def test_writes_atlas(self, out: Path) -> None:
        args = ["scan", "--L", "1", "--grid", "20", "--seed", "4", "--out", str(out)]
        assert main(args) == EXIT_OK
        atlas = load_json(out / "ambiguity_atlas.json")
        assert atlas["L"] == 1
        assert len(atlas["samples"]) == 20
        assert atlas["branch_bound_violations"] == 0

    def test_negative_L(self, out: Path) -> None:
        assert main(["scan", "--L", "-1", "--out", str(out)]) == EXIT_USAGE
