import json
from pathlib import Path

import numpy as np
import pytest

from flatsteer.borel_interp import FlatOutput
from flatsteer.export import (
    SCHEMA_VERSION,
    read_field_binary,
    write_control_csv,
    write_csv,
    write_derivative_csv,
    write_field_binary,
    write_field_csv,
    write_json,
    write_series_csv,
    write_table_csv,
)
from flatsteer.flatness import neumann_control
from flatsteer.heatsim import Boundary, solve_heat


@pytest.fixture
def field():
    return solve_heat(Boundary.dirichlet(np.sin), Boundary.neumann(), np.zeros_like, T=0.5, nx=16, nt=16)


class TestCsv:
    """CSV artifacts.

    This test class covers:
    - Shortest round-trip float formatting
    - Table, control, field, series and derivative layouts
    """

    def test_cells(self, tmp_path):
        path = write_csv(tmp_path / "nested" / "cells.csv", ("a", "b"), [[0.1, True], [np.float64(1 / 3), np.int64(2)]])
        assert path.read_text() == "a,b\n0.1,1\n0.3333333333333333,2\n"

    def test_floats_read_back_exactly(self, tmp_path):
        values = np.random.default_rng(7).standard_normal(50)
        path = write_csv(tmp_path / "values.csv", ("v",), ([v] for v in values))
        np.testing.assert_array_equal(np.loadtxt(path, skiprows=1), values)

    def test_table(self, tmp_path):
        path = write_table_csv(tmp_path / "table.csv", [{"n": 1, "x": 0.5}, {"n": 2, "x": 0.25}])
        assert path.read_text() == "n,x\n1,0.5\n2,0.25\n"

    def test_empty_table(self, tmp_path):
        path = write_table_csv(tmp_path / "empty.csv", [])
        assert path.read_text() == ""

    def test_control(self, tmp_path):
        control = neumann_control(FlatOutput.zero(T=1.0, N_max=4))
        lines = write_control_csv(tmp_path / "control.csv", control).read_text().splitlines()
        assert lines[0] == "t,value_real,value_imag"
        assert lines[1] == "0.0,0.0,0.0"
        assert len(lines) == control.samples + 1

    def test_control_on_given_times(self, tmp_path):
        control = neumann_control(FlatOutput.zero(T=1.0, N_max=4))
        lines = write_control_csv(tmp_path / "control.csv", control, times=[0.0, 0.5]).read_text().splitlines()
        assert lines[1:] == ["0.0,0.0,0.0", "0.5,0.0,0.0"]

    def test_field_keeps_terminal_row(self, tmp_path, field):
        lines = write_field_csv(tmp_path / "field.csv", field, stride=5).read_text().splitlines()
        # rows 0, 5, 10, 15 and the terminal row 16
        assert len(lines) == 1 + 5 * 17
        last = lines[-1].split(",")
        assert float(last[1]) == 0.5
        assert float(last[2]) == field.terminal[-1]

    def test_series(self, tmp_path):
        path = write_series_csv(tmp_path / "series.csv", lambda x, t: np.outer(t, x), [0.0, 1.0], [0.5, 2.0])
        assert path.read_text() == "x,t,value\n0.0,0.5,0.0\n1.0,0.5,0.5\n0.0,2.0,0.0\n1.0,2.0,2.0\n"

    def test_derivatives(self, tmp_path):
        path = write_derivative_csv(tmp_path / "derivs.csv", FlatOutput.zero(T=1.0, N_max=3), [0.0, 1.0])
        lines = path.read_text().splitlines()
        assert lines[0] == "n,t,value,scaled"
        assert len(lines) == 1 + 4 * 2
        assert lines[-1] == "3,1.0,0.0,0.0"


class TestJson:
    def test_schema_and_types(self, tmp_path):
        payload = {
            "ratio": float("inf"),
            "missing": float("nan"),
            "values": np.array([1.0, 2.0]),
            "count": np.int64(3),
            "z": 1 + 2j,
            "out": Path("runs"),
        }
        data = json.loads(write_json(tmp_path / "report.json", payload).read_text())
        assert data == {
            "schema_version": SCHEMA_VERSION,
            "ratio": "inf",
            "missing": "nan",
            "values": [1.0, 2.0],
            "count": 3,
            "z": {"real": 1.0, "imag": 2.0},
            "out": "runs",
        }

    def test_sorted_and_stable(self, tmp_path):
        first = write_json(tmp_path / "a.json", {"b": 1, "a": [0.1]}).read_text()
        second = write_json(tmp_path / "b.json", {"a": [0.1], "b": 1}).read_text()
        assert first == second
        assert first.index('"a"') < first.index('"b"')

    def test_unserializable(self, tmp_path):
        with pytest.raises(TypeError):
            write_json(tmp_path / "bad.json", {"obj": object()})


class TestBinary:
    def test_round_trip(self, tmp_path, field):
        path = write_field_binary(tmp_path / "field.bin", field)
        bounds, values = read_field_binary(path)
        np.testing.assert_array_equal(bounds, [0.0, 1.0])
        np.testing.assert_array_equal(values, field.values)
        assert path.stat().st_size == 16 + 8 * field.values.size

    def test_truncated_file(self, tmp_path, field):
        path = write_field_binary(tmp_path / "field.bin", field)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_field_binary(path)
