from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from psa.codec import (
    InputValidationError,
    atomic_write_text,
    coefficients_from_dict,
    dump_json,
    dumps,
    load_json,
    magnitudes_from_dict,
    phase_shifts_from_dict,
    read_angular_csv,
    waves_from_dict,
    waves_to_dict,
    write_angular_csv,
    write_grid_csv,
)
from psa.legendre import gauss_rule
from psa.models import AngularFunction, PartialWaves


class TestValidation:
    def test_missing_field_named(self) -> None:
        with pytest.raises(InputValidationError) as excinfo:
            phase_shifts_from_dict({"shifts": [0.1]})
        assert excinfo.value.field == "delta"
        assert str(excinfo.value).startswith("delta:")

    def test_non_numeric_entry(self) -> None:
        with pytest.raises(InputValidationError):
            phase_shifts_from_dict({"delta": [0.1, "x"]})
        with pytest.raises(InputValidationError):
            coefficients_from_dict({"C": [True]})

    def test_non_finite_entry(self) -> None:
        with pytest.raises(InputValidationError):
            coefficients_from_dict({"C": [1.0, float("inf")]})

    def test_empty_list(self) -> None:
        with pytest.raises(InputValidationError):
            phase_shifts_from_dict({"delta": []})

    def test_wave_pairs(self) -> None:
        waves = waves_from_dict({"f": [[0.1, 0.2], 0.5]})
        np.testing.assert_array_equal(waves.f, [0.1 + 0.2j, 0.5 + 0.0j])
        with pytest.raises(InputValidationError):
            waves_from_dict({"f": [[1.0, 2.0, 3.0]]})

    def test_magnitudes(self) -> None:
        mags = magnitudes_from_dict({"coefficients": [[3.0, 4.0], -2.0]})
        np.testing.assert_allclose(mags, [5.0, 2.0])

    def test_load_json_errors(self, tmp_path: Path) -> None:
        with pytest.raises(InputValidationError):
            load_json(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(InputValidationError):
            load_json(bad)
        listed = tmp_path / "list.json"
        listed.write_text("[1, 2]")
        with pytest.raises(InputValidationError):
            load_json(listed)


class TestWriting:
    def test_refuses_nan(self) -> None:
        with pytest.raises(ValueError):
            dumps({"C": [float("nan")]})

    def test_floats_survive_exactly(self, tmp_path: Path) -> None:
        waves = PartialWaves([np.sin(0.1) * np.exp(0.1j), 1 / 3 + 2 / 7 * 1j])
        path = dump_json(waves_to_dict(waves), tmp_path / "waves.json")
        np.testing.assert_array_equal(waves_from_dict(load_json(path)).f, waves.f)

    def test_atomic_write_leaves_no_temp_files(self, tmp_path: Path) -> None:
        target = tmp_path / "sub" / "out.txt"
        atomic_write_text(target, "first")
        atomic_write_text(target, "second")
        assert target.read_text() == "second"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_json_is_indented(self, tmp_path: Path) -> None:
        path = dump_json({"C": [0.25]}, tmp_path / "x.json")
        text = path.read_text()
        assert text.endswith("\n")
        assert json.loads(text) == {"C": [0.25]}
        assert "\n  " in text


class TestAngularCsv:
    def test_round_trip(self, tmp_path: Path) -> None:
        rule = gauss_rule(12)
        F = AngularFunction(rule, 1.0 + 0.5 * rule.nodes**2)
        path = write_angular_csv(tmp_path / "F.csv", F)
        back = read_angular_csv(path)
        assert back.rule is rule
        np.testing.assert_array_equal(back.values, F.values)

    def test_nodes_must_be_gauss(self, tmp_path: Path) -> None:
        x = np.linspace(-1, 1, 12)
        path = write_grid_csv(tmp_path / "F.csv", x, np.ones(12))
        with pytest.raises(InputValidationError) as excinfo:
            read_angular_csv(path)
        assert excinfo.value.field == "cos_theta"

    def test_header_checked(self, tmp_path: Path) -> None:
        rule = gauss_rule(4)
        path = write_grid_csv(tmp_path / "F.csv", rule.nodes, np.ones(4), value_column="F2")
        with pytest.raises(InputValidationError) as excinfo:
            read_angular_csv(path)
        assert excinfo.value.field == "header"

    def test_bad_row(self, tmp_path: Path) -> None:
        path = tmp_path / "F.csv"
        path.write_text("cos_theta,value\n0.0,abc\n")
        with pytest.raises(InputValidationError):
            read_angular_csv(path)
