import json
from pathlib import Path
from unittest import mock

import pytest

from flatsteer.cli import build_parser, load_config, main, parse_config
from flatsteer.errors import ConfigError, DivergentSeriesError

ZERO_EXPERIMENT = {
    "schema_version": 1,
    "problem": {"setting": "neumann", "T": 0.5},
    "target": {"kind": "zero"},
    "synthesis": {"method": "laplace", "N_max": 6},
    "simulation": {"nx": 32, "nt": 32},
    "outputs": {"formats": ["csv", "json", "binary"]},
}


PETZSCHE_TARGET = {"kind": "inverse-quadratic", "a": 1.5}


def write_config(tmp_path: Path, data: dict, name: str = "experiment.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def with_changes(**sections) -> dict:
    data = json.loads(json.dumps(ZERO_EXPERIMENT))
    for name, values in sections.items():
        data[name] = {**data.get(name, {}), **values}
    return data


class TestParseConfig:
    """Schema and cross-field validation of experiment files.

    This test class covers:
    - Defaults filled in for optional sections
    - Every rejected combination raising ConfigError
    """

    def test_defaults(self):
        cfg = parse_config(ZERO_EXPERIMENT)
        assert cfg.setting == "neumann"
        assert cfg.method == "laplace"
        assert cfg.store_every == 1
        assert cfg.verify_tol == 1e-3
        assert cfg.domain == (0.0, 1.0)
        assert cfg.out == Path("flatsteer-out")
        assert cfg.formats == ("csv", "json", "binary")

    def test_two_sided_domain(self):
        cfg = parse_config(with_changes(problem={"setting": "two-sided", "bc0": [1, 0], "bc1": [1, 1]}))
        assert cfg.domain == (-1.0, 1.0)
        assert (cfg.bc0, cfg.bc1) == ((1.0, 0.0), (1.0, 1.0))

    def test_study_section(self):
        cfg = parse_config({**ZERO_EXPERIMENT, "study": {"orders": [3, 9], "zeta": 0.7}})
        assert cfg.study.orders == (3, 9)
        assert cfg.study.zeta == 0.7

    @pytest.mark.parametrize(
        "data",
        [
            [],
            {**ZERO_EXPERIMENT, "schema_version": 2},
            {**ZERO_EXPERIMENT, "problem": "neumann"},
            with_changes(problem={"T": 0}),
            with_changes(problem={"setting": "periodic"}),
            with_changes(problem={"bc1": [0, 0]}),
            with_changes(target={"kind": "ellipse"}),
            with_changes(target={"kind": "zeta", "zeta": -1}),
            with_changes(problem={"setting": "dirichlet"}, target={"kind": "zeta", "zeta": 0.8}),
            with_changes(target=PETZSCHE_TARGET),
            with_changes(synthesis={"method": "petzsche", "R_prime": 1.1}, target=PETZSCHE_TARGET),
            with_changes(synthesis={"method": "petzsche", "R_prime": 1.6}, target=PETZSCHE_TARGET),
            with_changes(synthesis={"method": "petzsche", "R_prime": 1.7}, target={"kind": "zeta", "zeta": 0.8}),
            with_changes(
                synthesis={"method": "petzsche", "R_prime": 1.6},
                target={"kind": "coefficients", "values": [1.0], "R": 1.5},
            ),
            with_changes(
                synthesis={"method": "petzsche", "R_prime": 1.3},
                target={"kind": "coefficients", "values": [1.0], "R": 0.0},
            ),
            with_changes(synthesis={"method": "borel"}),
            with_changes(synthesis={"sigma": 2.0}),
            with_changes(synthesis={"N_max": 2.5}),
            with_changes(synthesis={"tol": "small"}),
            with_changes(synthesis={"precision": 32}),
            with_changes(simulation={"nx": 8}),
            with_changes(outputs={"formats": "csv"}),
            with_changes(outputs={"formats": ["pdf"]}),
            {**ZERO_EXPERIMENT, "study": {"resolution": 3}},
        ],
    )
    def test_rejected(self, data):
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_petzsche_accepts_admissible_radius(self):
        cfg = parse_config(
            with_changes(synthesis={"method": "petzsche", "R_prime": 1.3}, target=PETZSCHE_TARGET)
        )
        assert cfg.R_prime == 1.3

    @pytest.mark.parametrize(
        "target",
        [{"kind": "zeta", "zeta": 0.8}, {"kind": "coefficients", "values": [1.0], "R": 10.0}],
    )
    def test_petzsche_radius_follows_target(self, target):
        cfg = parse_config(with_changes(synthesis={"method": "petzsche", "R_prime": 1.5}, target=target))
        assert cfg.R_prime == 1.5

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(broken)


class TestMain:
    """Subcommands, exit codes and written artifacts."""

    def test_parser_requires_config(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["synth"])

    def test_invalid_config_writes_nothing(self, tmp_path, caplog):
        out = tmp_path / "out"
        config = write_config(tmp_path, {**ZERO_EXPERIMENT, "schema_version": 0})
        assert main(["synth", "--config", str(config), "--out", str(out)]) == 2
        assert not out.exists()
        assert "invalid configuration" in caplog.text

    @pytest.mark.parametrize("flags", [["--jobs", "0"], ["--tol", "-1"], ["--precision", "32"]])
    def test_invalid_flags(self, tmp_path, flags):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        assert main(["verify", "--config", str(config), "--out", str(out), *flags]) == 2
        assert not out.exists()

    def test_synth_zero_target(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "control_right.csv").exists()
        assert (out / "derivatives_even.csv").exists()
        report = json.loads((out / "synth.json").read_text())
        assert report["schema_version"] == 1
        assert report["command"] == "synth"
        assert report["synthesis"]["controls"]["right"]["kind"] == "neumann"
        assert report["config"] == ZERO_EXPERIMENT

    def test_verify_zero_target(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        assert main(["verify", "--config", str(config), "--out", str(out)]) == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["passed"] is True
        assert report["terminal_error"]["linf"] == 0.0
        assert (out / "field.csv").exists()
        assert (out / "field.bin").exists()

    def test_simulate_from_control_file(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        assert main(["synth", "--config", str(config), "--out", str(out)]) == 0
        replay = tmp_path / "replay"
        control = out / "control_right.csv"
        assert main(["simulate", "--config", str(config), "--out", str(replay), "--right", str(control)]) == 0
        report = json.loads((replay / "simulate.json").read_text())
        assert "synthesis" not in report
        assert report["terminal_error"]["linf"] == 0.0

    def test_missing_control_file(self, tmp_path):
        config = write_config(tmp_path, with_changes(problem={"setting": "two-sided"}))
        args = ["simulate", "--config", str(config), "--out", str(tmp_path / "out"), "--right", "missing.csv"]
        assert main(args) == 2

    def test_classify(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, with_changes(target={"kind": "zeta", "zeta": 0.8}))
        assert main(["classify", "--config", str(config), "--out", str(out)]) == 0
        report = json.loads((out / "classify.json").read_text())
        assert report["reachability"]["verdict"] == "reachable"
        assert report["reachability"]["radius"] == pytest.approx(1.6)

    def test_study_with_empty_coefficients(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, {**ZERO_EXPERIMENT, "study": {"coefficients": []}})
        assert main(["study", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "study_bounded.csv").read_text() == ""
        assert json.loads((out / "study.json").read_text())["summary"] == {"empty": True}

    def test_numerical_failure_writes_diagnostic(self, tmp_path, caplog):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        with mock.patch("flatsteer.cli.synthesize", side_effect=DivergentSeriesError("ratio above 1")):
            assert main(["synth", "--config", str(config), "--out", str(out)]) == 3
        diagnostic = json.loads((out / "diagnostic.json").read_text())
        assert diagnostic["error"] == "divergent-series"
        assert diagnostic["message"] == "ratio above 1"
        assert "synth failed" in caplog.text

    def test_floating_point_failure(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        with mock.patch("flatsteer.cli.solve_heat", side_effect=FloatingPointError("overflow")):
            assert main(["simulate", "--config", str(config), "--out", str(out)]) == 3
        assert json.loads((out / "diagnostic.json").read_text())["error"] == "floating-point"

    def test_verify_failure_exit_code(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, ZERO_EXPERIMENT)
        with mock.patch("flatsteer.cli.terminal_error") as patched:
            patched.return_value = mock.Mock(linf=1.0, l2=1.0, rel_linf=1.0)
            assert main(["verify", "--config", str(config), "--out", str(out)]) == 1
        assert json.loads((out / "verify.json").read_text())["passed"] is False


@pytest.mark.slow
class TestReplay:
    """Synthesized controls replayed by the Crank-Nicolson solver, for the zeta family and Petzsche outputs."""

    @pytest.mark.parametrize(
        "setting, kind", [("neumann", "zeta"), ("dirichlet", "odd-zeta")]
    )
    def test_terminal_state_reached(self, tmp_path, setting, kind):
        data = {
            "schema_version": 1,
            "problem": {"setting": setting, "T": 1.0},
            "target": {"kind": kind, "zeta": 0.8},
            "synthesis": {"method": "laplace", "sigma": 1.5, "N_max": 20},
            "simulation": {"nx": 400, "nt": 4000},
            "verify": {"tol": 1e-3},
            "outputs": {"formats": ["json"]},
        }
        out = tmp_path / "out"
        assert main(["verify", "--config", str(write_config(tmp_path, data)), "--out", str(out)]) == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["terminal_error"]["rel_linf"] <= 1e-3

    @pytest.mark.parametrize(
        "setting, values, M",
        [("neumann", [1.0], 1.0), ("dirichlet", [0.0, 1.0], 10.0)],
    )
    def test_petzsche_terminal_state_reached(self, tmp_path, setting, values, M):
        data = {
            "schema_version": 1,
            "problem": {"setting": setting, "T": 0.5},
            "target": {"kind": "coefficients", "values": values, "M": M, "R": 10.0},
            "synthesis": {"method": "petzsche", "R_prime": 5.0, "sigma": 1.5, "N_max": 20},
            "simulation": {"nx": 2000, "nt": 20000},
            "verify": {"tol": 1e-3},
            "outputs": {"formats": ["json"]},
        }
        out = tmp_path / "out"
        assert main(["verify", "--config", str(write_config(tmp_path, data)), "--out", str(out)]) == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["terminal_error"]["rel_linf"] <= 1e-3
