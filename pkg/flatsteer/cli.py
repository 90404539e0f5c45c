"""Command line front end: synthesize controls, replay them and check the terminal state.

Every subcommand reads a JSON experiment file with an explicit ``schema_version``:

    {
      "schema_version": 1,
      "problem": {"setting": "neumann", "T": 0.5},
      "target": {"kind": "zeta", "zeta": 0.8},
      "synthesis": {"method": "laplace", "sigma": 1.5, "N_max": 20, "tol": 1e-8},
      "simulation": {"nx": 400, "nt": 4000},
      "verify": {"tol": 1e-3},
      "outputs": {"formats": ["csv", "json"]}
    }

Exit status is 0 on success, 1 when ``verify`` finds the terminal error above tolerance, 2 for an invalid
configuration (nothing is written) and 3 for a numerical failure, reported in ``diagnostic.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import logging.config
import math
import os
import sys
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from flatsteer import config as settings
from flatsteer.analysis import LossStudyConfig, run_loss_study
from flatsteer.borel_interp import R0, CoeffSequence, FlatOutput, steer_output_even, steer_output_odd
from flatsteer.errors import ConfigError, FlatsteerError
from flatsteer.export import (
    SCHEMA_VERSION,
    write_control_csv,
    write_derivative_csv,
    write_field_binary,
    write_field_csv,
    write_json,
    write_table_csv,
)
from flatsteer.flatness import ControlSignal, dirichlet_control, neumann_control, robin_two_sided
from flatsteer.heatsim import Boundary, HeatField, solve_heat, terminal_error
from flatsteer.laplace import steer_laplace_even, steer_laplace_odd, zeta_kernel
from flatsteer.precision import ExtendedPrecision, set_default_bits
from flatsteer.target import (
    AnalyticTarget,
    Geometry,
    classify_reachability,
    inverse_quadratic,
    odd_inverse_quadratic,
    odd_zeta_target,
    parity_split,
    taylor_coeffs,
    zeta_target,
)

__all__ = ["ExperimentConfig", "build_parser", "load_config", "main"]

logger = logging.getLogger(__name__)

SETTINGS = ("neumann", "dirichlet", "two-sided")
METHODS = ("petzsche", "laplace")
FORMATS = ("csv", "json", "binary")
TARGET_KINDS = ("zero", "inverse-quadratic", "odd-inverse-quadratic", "zeta", "odd-zeta", "coefficients")
_PARITY = {"inverse-quadratic": "even", "zeta": "even", "odd-inverse-quadratic": "odd", "odd-zeta": "odd"}
_REACH_SETTING = {"neumann": "one-sided-neumann", "dirichlet": "one-sided-dirichlet", "two-sided": "two-sided"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment; ``raw`` is echoed into every report."""

    setting: str
    T: float
    target: dict[str, Any]
    method: str = "laplace"
    R_prime: float | None = None
    sigma: float = 1.5
    N_max: int = 20
    N: int | None = None
    tol: float = 1e-8
    precision: int | None = None
    contour_radius: float | None = None
    bc0: tuple[float, float] = (0.0, 1.0)
    bc1: tuple[float, float] = (0.0, 1.0)
    nx: int = 400
    nt: int = 4000
    store_every: int = 40
    verify_tol: float = 1e-3
    formats: tuple[str, ...] = ("csv", "json")
    field_stride: int = 1
    out: Path = Path("flatsteer-out")
    study: LossStudyConfig = field(default_factory=LossStudyConfig)
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def domain(self) -> tuple[float, float]:
        return (-1.0, 1.0) if self.setting == "two-sided" else (0.0, 1.0)


def _section(data: dict[str, Any], name: str) -> dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return value


def _number(section: dict[str, Any], key: str, default: Any, kind: Callable[[Any], Any] = float) -> Any:
    value = section.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}")
    return kind(value)


def _pair(section: dict[str, Any], key: str, default: tuple[float, float]) -> tuple[float, float]:
    value = section.get(key, default)
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{key!r} must be a pair of numbers")
    alpha, beta = (_number({"v": v}, "v", 0.0) for v in value)
    if alpha == 0 and beta == 0:
        raise ConfigError(f"{key!r} must not be (0, 0)")
    return alpha, beta


def _check_target(target: dict[str, Any], setting: str, method: str) -> None:
    kind = target.get("kind")
    if kind not in TARGET_KINDS:
        raise ConfigError(f"target kind must be one of {', '.join(TARGET_KINDS)}, got {kind!r}")
    for key in {"inverse-quadratic": ("a",), "odd-inverse-quadratic": ("a",), "zeta": ("zeta",)}.get(kind, ()):
        if _number(target, key, None) is None or target[key] <= 0:
            raise ConfigError(f"target {kind!r} needs a positive {key!r}")
    if kind == "odd-zeta" and not _number(target, "zeta", 0.0) > 0:
        raise ConfigError("target 'odd-zeta' needs a positive 'zeta'")
    if kind == "coefficients" and not isinstance(target.get("values"), list):
        raise ConfigError("coefficient targets need a 'values' list")
    parity = _PARITY.get(kind)
    if kind == "inverse-quadratic" and target.get("center", 0.0) != 0:
        parity = None
    if setting == "neumann" and parity == "odd" or setting == "dirichlet" and parity == "even":
        raise ConfigError(f"target {kind!r} does not have the parity the {setting} setting needs")
    if method == "laplace" and kind not in ("zero", "zeta", "odd-zeta"):
        raise ConfigError("the laplace method steers to the zeta family only")


def _target_radius(target: dict[str, Any]) -> float:
    """Radius the built target will claim, for an entry already accepted by :func:`_check_target`."""
    kind = target["kind"]
    if kind in ("inverse-quadratic", "odd-inverse-quadratic"):
        return abs(target["a"])
    if kind in ("zeta", "odd-zeta"):
        return 2.0 * target["zeta"]
    radius = _number(target, "R", 2.0)
    if not radius > 0:
        raise ConfigError("coefficient targets need a positive 'R'")
    return radius


def parse_config(data: Any, out: Path | None = None) -> ExperimentConfig:
    """Validate a decoded experiment file.

    Raises:
        ConfigError: On any schema violation or failed cross-field check.
    """
    if not isinstance(data, dict):
        raise ConfigError("experiment file must hold a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    problem = _section(data, "problem")
    target = _section(data, "target")
    synthesis = _section(data, "synthesis")
    simulation = _section(data, "simulation")
    outputs = _section(data, "outputs")

    setting = problem.get("setting", "neumann")
    if setting not in SETTINGS:
        raise ConfigError(f"setting must be one of {', '.join(SETTINGS)}, got {setting!r}")
    T = _number(problem, "T", None)
    if T is None or not T > 0:
        raise ConfigError("problem.T must be a positive number")
    method = synthesis.get("method", "laplace")
    if method not in METHODS:
        raise ConfigError(f"synthesis.method must be one of {', '.join(METHODS)}, got {method!r}")
    _check_target(target, setting, method)

    R_prime = _number(synthesis, "R_prime", None)
    if method == "petzsche" and target["kind"] != "zero":
        if R_prime is None or not R_prime > R0:
            raise ConfigError(f"synthesis.R_prime must exceed R0 = {R0:.6f} for the petzsche method")
        radius = _target_radius(target)
        if not R_prime < radius:
            raise ConfigError(f"synthesis.R_prime = {R_prime:g} must lie below the target radius {radius:g}")
    sigma = _number(synthesis, "sigma", 1.5)
    if not 1 < sigma < 2:
        raise ConfigError("synthesis.sigma must lie in (1, 2)")
    N_max = _number(synthesis, "N_max", 20, int)
    N = _number(synthesis, "N", None, int)
    tol = _number(synthesis, "tol", 1e-8)
    precision = _number(synthesis, "precision", None, int)
    if N_max < 1 or (N is not None and N < 0) or not tol > 0 or (precision is not None and precision < 53):
        raise ConfigError("synthesis needs N_max >= 1, N >= 0, tol > 0 and precision >= 53")

    nx = _number(simulation, "nx", 400, int)
    nt = _number(simulation, "nt", 4000, int)
    if nx < 16 or nt < 16:
        raise ConfigError("simulation grids need at least 16 cells and steps")
    store_every = _number(simulation, "store_every", max(1, nt // 100), int)
    formats = outputs.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not set(formats) <= set(FORMATS):
        raise ConfigError(f"outputs.formats must be drawn from {', '.join(FORMATS)}")
    try:
        entries = _section(data, "study").items()
        study = LossStudyConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in entries})
    except TypeError as exc:
        raise ConfigError(f"study section: {exc}") from exc

    return ExperimentConfig(
        setting=setting,
        T=T,
        target=target,
        method=method,
        R_prime=R_prime,
        sigma=sigma,
        N_max=N_max,
        N=N,
        tol=tol,
        precision=precision,
        contour_radius=_number(synthesis, "contour_radius", None),
        bc0=_pair(problem, "bc0", (0.0, 1.0)),
        bc1=_pair(problem, "bc1", (0.0, 1.0)),
        nx=nx,
        nt=nt,
        store_every=max(store_every or 1, 1),
        verify_tol=_number(_section(data, "verify"), "tol", 1e-3),
        formats=tuple(formats),
        field_stride=max(_number(outputs, "field_stride", 1, int), 1),
        out=out or Path(outputs.get("directory", "flatsteer-out")),
        study=study,
        raw=data,
    )


def load_config(path: str | Path, out: Path | None = None) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data, out)


def build_target(cfg: ExperimentConfig) -> AnalyticTarget:
    entry = cfg.target
    kind = entry["kind"]
    if kind == "zero":
        return AnalyticTarget(name="zero", func=lambda x: np.zeros(np.shape(x)), radius=math.inf)
    if kind == "inverse-quadratic":
        return inverse_quadratic(entry["a"], entry.get("center", 0.0))
    if kind == "odd-inverse-quadratic":
        return odd_inverse_quadratic(entry["a"])
    if kind == "coefficients":
        try:
            c = CoeffSequence(entry["values"], M=entry.get("M", 1.0), R=entry.get("R", 2.0), convention="taylor")
        except FlatsteerError as exc:
            raise ConfigError(f"coefficient target: {exc}") from exc
        return AnalyticTarget.from_coeffs(c)
    even, odd = zeta_target(entry["zeta"]), odd_zeta_target(entry["zeta"])
    if cfg.setting == "two-sided":
        return AnalyticTarget(
            name=f"zeta-pair({entry['zeta']:g})", func=lambda x: even(x) + odd(x), radius=even.radius, poles=even.poles
        )
    return even if kind == "zeta" else odd


@dataclass(frozen=True, eq=False)
class Synthesis:
    """Flat outputs, boundary controls and the synthesis report of one experiment."""

    target: AnalyticTarget
    outputs: dict[str, FlatOutput]
    controls: dict[str, ControlSignal]
    report: dict[str, Any]


def _flat_outputs(cfg: ExperimentConfig, target: AnalyticTarget) -> dict[str, FlatOutput]:
    parities = {"neumann": ("even",), "dirichlet": ("odd",), "two-sided": ("even", "odd")}[cfg.setting]
    if cfg.target["kind"] == "zero":
        return {p: FlatOutput.zero(cfg.T, cfg.N_max, parity=p, method=cfg.method) for p in parities}
    if cfg.method == "laplace":
        kernel = zeta_kernel(cfg.target["zeta"])
        steer = {"even": steer_laplace_even, "odd": steer_laplace_odd}
        return {p: steer[p](kernel, cfg.T, cfg.sigma, cfg.N_max) for p in parities}
    radius = target.radius if target.radius is not None else target.coeffs.R
    r = cfg.contour_radius or 0.5 * (cfg.R_prime + radius)
    c = taylor_coeffs(target, 0.0, N=2 * cfg.N_max + 1, r=r)
    even, odd = parity_split(c)
    built = {}
    if "even" in parities:
        built["even"] = steer_output_even(even, cfg.T, cfg.R_prime, cfg.sigma, cfg.N_max)
    if "odd" in parities:
        built["odd"] = steer_output_odd(odd, cfg.T, cfg.R_prime, cfg.sigma, cfg.N_max)
    return built


def _output_report(y: FlatOutput) -> dict[str, Any]:
    start, end = y.endpoint_errors()
    return {
        "method": y.method,
        "parity": y.parity,
        "M_prime": y.M_prime,
        "R": y.R,
        "R_prime": y.R_prime,
        "N_max": y.N_max,
        "endpoint_error_start": start,
        "endpoint_error_end": end,
    }


def synthesize(cfg: ExperimentConfig) -> Synthesis:
    target = build_target(cfg)
    outputs = _flat_outputs(cfg, target)
    if cfg.setting == "neumann":
        controls = {"right": neumann_control(outputs["even"], cfg.N, cfg.tol)}
    elif cfg.setting == "dirichlet":
        controls = {"right": dirichlet_control(outputs["odd"], cfg.N, cfg.tol)}
    else:
        h0, h1 = robin_two_sided(outputs["even"], outputs["odd"], cfg.bc0, cfg.bc1, cfg.N, cfg.tol)
        controls = {"left": h0, "right": h1}
    verdict = classify_reachability(target, _REACH_SETTING[cfg.setting], Geometry(*cfg.domain))
    report = {
        "R0": R0,
        "target": target.name,
        "outputs": {p: _output_report(y) for p, y in outputs.items()},
        "controls": {
            end: {"kind": u.kind, "x": u.x, "alpha": u.alpha, "beta": u.beta, "N": u.N, "imag_max": u.imag_max}
            for end, u in controls.items()
        },
        "verdict": {"verdict": verdict.verdict.value, "radius": verdict.radius, "witness": verdict.witness},
    }
    logger.info("synthesized %s controls for %s", cfg.setting, target.name)
    return Synthesis(target=target, outputs=outputs, controls=controls, report=report)


def _boundaries(cfg: ExperimentConfig, controls: dict[str, Any]) -> tuple[Boundary, Boundary]:
    """Controlled ends carry their signal; the uncontrolled end of a one-sided rod is the symmetry axis."""
    if cfg.setting == "two-sided":
        return Boundary.from_control(controls["left"]), Boundary.from_control(controls["right"])
    right = Boundary.from_control(controls["right"])
    left = Boundary.neumann() if cfg.setting == "neumann" else Boundary.dirichlet()
    return left, right


@dataclass(frozen=True, eq=False)
class _SampledControl:
    """Control read back from a CSV file, interpolated linearly in time."""

    alpha: float
    beta: float
    t: np.ndarray
    values: np.ndarray

    def __call__(self, t: Any) -> Any:
        return np.interp(t, self.t, self.values)


def read_control_csv(path: str | Path, alpha: float, beta: float) -> _SampledControl:
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read control file {path}: {exc}") from exc
    if table.shape[1] < 2:
        raise ConfigError(f"control file {path} needs columns t, value_real")
    return _SampledControl(alpha=alpha, beta=beta, t=table[:, 0], values=table[:, 1])


def simulate(cfg: ExperimentConfig, controls: dict[str, Any]) -> HeatField:
    left, right = _boundaries(cfg, controls)
    return solve_heat(
        left, right, np.zeros_like, cfg.T, cfg.nx, cfg.nt, domain=cfg.domain, store_every=cfg.store_every
    )


def _write_synthesis(cfg: ExperimentConfig, synth: Synthesis) -> None:
    if "csv" in cfg.formats:
        for end, u in synth.controls.items():
            write_control_csv(cfg.out / f"control_{end}.csv", u)
        times = np.linspace(0.0, cfg.T, 5)
        for parity, y in synth.outputs.items():
            write_derivative_csv(cfg.out / f"derivatives_{parity}.csv", y, times)


def _write_field(cfg: ExperimentConfig, hf: HeatField) -> None:
    if "csv" in cfg.formats:
        write_field_csv(cfg.out / "field.csv", hf, stride=cfg.field_stride)
    if "binary" in cfg.formats:
        write_field_binary(cfg.out / "field.bin", hf)


def _report(cfg: ExperimentConfig, name: str, payload: dict[str, Any]) -> None:
    if "json" in cfg.formats:
        write_json(cfg.out / f"{name}.json", {"command": name, "config": cfg.raw, **payload})


def cmd_synth(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    synth = synthesize(cfg)
    _write_synthesis(cfg, synth)
    _report(cfg, "synth", {"synthesis": synth.report})
    return 0


def _replay(cfg: ExperimentConfig, args: argparse.Namespace) -> tuple[Synthesis | None, HeatField, AnalyticTarget]:
    left_file, right_file = getattr(args, "left", None), getattr(args, "right", None)
    if left_file or right_file:
        # the synthesized kinds decide alpha and beta of the file data
        alpha_beta = {
            "neumann": {"right": (0.0, 1.0)},
            "dirichlet": {"right": (1.0, 0.0)},
            "two-sided": {"left": cfg.bc0, "right": cfg.bc1},
        }[cfg.setting]
        files = {"left": left_file, "right": right_file}
        missing = [end for end in alpha_beta if not files[end]]
        if missing:
            raise ConfigError(f"control file missing for the {', '.join(missing)} end")
        controls = {end: read_control_csv(files[end], *alpha_beta[end]) for end in alpha_beta}
        return None, simulate(cfg, controls), build_target(cfg)
    synth = synthesize(cfg)
    return synth, simulate(cfg, synth.controls), synth.target


def _error_report(hf: HeatField, target: AnalyticTarget) -> dict[str, Any]:
    err = terminal_error(hf, target)
    return {"linf": err.linf, "l2": err.l2, "rel_linf": err.rel_linf, "nx": hf.nx, "steps": hf.t.size - 1}


def cmd_simulate(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    synth, hf, target = _replay(cfg, args)
    if synth is not None:
        _write_synthesis(cfg, synth)
    _write_field(cfg, hf)
    payload = {"terminal_error": _error_report(hf, target)}
    if synth is not None:
        payload["synthesis"] = synth.report
    _report(cfg, "simulate", payload)
    return 0


def cmd_verify(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    synth, hf, target = _replay(cfg, args)
    if synth is not None:
        _write_synthesis(cfg, synth)
    _write_field(cfg, hf)
    errors = _error_report(hf, target)
    passed = errors["rel_linf"] <= cfg.verify_tol
    payload = {"terminal_error": errors, "tolerance": cfg.verify_tol, "passed": passed}
    if synth is not None:
        payload["synthesis"] = synth.report
    _report(cfg, "verify", payload)
    logger.info("verify: relative terminal error %g against %g", errors["rel_linf"], cfg.verify_tol)
    return 0 if passed else 1


def cmd_study(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    report = run_loss_study(cfg.study, jobs=args.jobs)
    if "csv" in cfg.formats:
        for name, rows in report.tables().items():
            write_table_csv(cfg.out / f"study_{name}.csv", rows)
    _report(cfg, "study", report.as_dict())
    return 0


def cmd_classify(cfg: ExperimentConfig, args: argparse.Namespace) -> int:
    target = build_target(cfg)
    verdict = classify_reachability(target, _REACH_SETTING[cfg.setting], Geometry(*cfg.domain))
    payload = asdict(verdict)
    payload["verdict"] = verdict.verdict.value
    _report(cfg, "classify", {"target": target.name, "reachability": payload})
    return 0


COMMANDS: dict[str, Callable[[ExperimentConfig, argparse.Namespace], int]] = {
    "synth": cmd_synth,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "study": cmd_study,
    "classify": cmd_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flatsteer", description="Flatness-based steering of the heat equation.")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"Run the {name} step")
        cmd.add_argument("--config", type=Path, required=True, help="Experiment JSON file")
        cmd.add_argument("--out", type=Path, default=None, help="Output directory (default: outputs.directory)")
        cmd.add_argument("--jobs", type=int, default=1, help="Worker processes for independent sweep entries")
        cmd.add_argument("--precision", type=int, default=None, help="Mantissa bits for extended precision")
        cmd.add_argument("--tol", type=float, default=None, help="Terminal error tolerance for verify")
        if name in ("simulate", "verify"):
            cmd.add_argument("--left", type=Path, default=None, help="Control CSV for the left end")
            cmd.add_argument("--right", type=Path, default=None, help="Control CSV for the right end")
    return parser


def _precision(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    """Flag first, then the environment, then the experiment file."""
    if args.precision is not None:
        return args.precision
    if "FLATSTEER_PRECISION" in os.environ:
        return settings.PRECISION_BITS
    return cfg.precision or settings.PRECISION_BITS


def _diagnostic(out: Path, exc: BaseException, command: str) -> None:
    code = getattr(exc, "code", "floating-point")
    write_json(out / "diagnostic.json", {"command": command, "error": code, "message": str(exc)})


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.config.dictConfig(settings.LOGGING)
    if args.verbose:
        logging.getLogger("flatsteer").setLevel(logging.DEBUG)

    try:
        cfg = load_config(args.config, args.out)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be positive")
            cfg = replace(cfg, verify_tol=args.tol)
        bits = _precision(args, cfg)
        if bits < 53:
            raise ConfigError("--precision must be at least 53 bits")
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return 2

    set_default_bits(bits)
    try:
        with ExtendedPrecision(bits):
            return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return 2
    except (FlatsteerError, FloatingPointError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        _diagnostic(cfg.out, exc, args.command)
        return 3


if __name__ == "__main__":
    sys.exit(main())
