"""Run configuration: strict JSON parsing, defaults, validation.

One documented format (JSON with ``sensor``/``plan``/``filter``/
``experiment``/``output`` sections).  Unknown keys are rejected by name so
misspelled options cannot silently fall back to defaults, and every block
is validated against its module invariants before any computation starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ramsey import GAMMA_E, AcquisitionPlan, SensorParams, calib_frequency, sensing_frequency
from .tmt import FrequencyGrid
from .wavelets import available_bases


class ConfigError(ValueError):
    """Raised for malformed or invalid run configurations."""


MODES = ("simulate", "denoise", "sweep-beta", "benchmark", "gain-profile", "fit-scaling")

_SENSOR_KEYS = {"contrast", "n_ave", "n0", "n1", "t2_star", "decay_power", "b_calib", "gamma_e"}
_PLAN_KEYS = {"t_start", "t_stop", "f_sample", "repetitions", "n_experiments", "seed"}
_FILTER_KEYS = {"basis", "levels", "boundary", "beta", "beta_grid", "freq_window", "freq_points"}
_EXPERIMENT_KEYS = {"mode", "delta_b", "n_sd", "m_values", "n_sd_values",
                    "photon_stats", "shared_estimate", "squared_contrast",
                    "points", "points_file"}
_OUTPUT_KEYS = {"directory", "formats"}
_SECTIONS = {"sensor": _SENSOR_KEYS, "plan": _PLAN_KEYS, "filter": _FILTER_KEYS,
             "experiment": _EXPERIMENT_KEYS, "output": _OUTPUT_KEYS}

_DEFAULTS = {
    "sensor": {"contrast": 0.2143, "n_ave": 0.196, "t2_star": 3.9e-6,
               "decay_power": 2.0, "b_calib": 100e-6},
    "plan": {"t_start": 0.97e-6, "t_stop": 1.75e-6, "f_sample": 128e6,
             "repetitions": 25000, "n_experiments": 200},
    "filter": {"basis": "bior6.8", "levels": None, "boundary": "periodic", "beta": 0.0,
               "beta_grid": {"start": -4.0, "stop": 2.0, "step": 0.1},
               "freq_window": 0.15, "freq_points": 2001},
    "experiment": {"delta_b": 2e-6, "n_sd": None,
                   "m_values": [25000, 50000, 100000, 200000, 400000],
                   "n_sd_values": list(range(1, 10)),
                   "photon_stats": "bernoulli-poisson", "shared_estimate": False,
                   "squared_contrast": False},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}


@dataclass(frozen=True)
class FilterConfig:
    basis: str
    levels: int | None
    boundary: str
    beta: float
    beta_grid: np.ndarray
    freq_window: float
    freq_points: int

    def frequency_grid(self, omega_center: float) -> FrequencyGrid:
        return FrequencyGrid.around(omega_center, self.freq_window, self.freq_points)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str | None
    delta_b: float
    n_sd: int | None
    m_values: list[int]
    n_sd_values: list[int]
    photon_stats: str
    shared_estimate: bool
    squared_contrast: bool
    points: list[list[float]] | None = None
    points_file: str | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    formats: list[str]


@dataclass(frozen=True)
class RunConfig:
    sensor: SensorParams
    plan: AcquisitionPlan
    filter: FilterConfig
    experiment: ExperimentConfig
    output: OutputConfig
    seed_explicit: bool = False
    snapshot: dict = field(repr=False, default_factory=dict)

    @property
    def omega_sense(self) -> float:
        return sensing_frequency(self.sensor, self.experiment.delta_b)


def _check_keys(section: str, data: dict) -> None:
    unknown = set(data) - _SECTIONS[section]
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"unknown key {name!r} in section {section!r}")


def _merged(section: str, data: dict) -> dict:
    _check_keys(section, data)
    out = dict(_DEFAULTS[section])
    out.update(data)
    return out


def _build_sensor(data: dict) -> SensorParams:
    _check_keys("sensor", data)
    merged = dict(_DEFAULTS["sensor"])
    merged.update(data)
    gamma_e = float(merged.get("gamma_e", GAMMA_E))
    try:
        if "n0" in data or "n1" in data:
            if not ("n0" in data and "n1" in data):
                raise ConfigError("sensor: n0 and n1 must be given together")
            n0, n1 = float(data["n0"]), float(data["n1"])
            contrast = (n0 - n1) / n0 if n0 > 0 else float("nan")
            n_ave = 0.5 * (n0 + n1)
            if "contrast" in data and abs(contrast - float(data["contrast"])) > 1e-9:
                raise ConfigError("sensor: contrast is inconsistent with the given n0/n1")
            if "n_ave" in data and abs(n_ave - float(data["n_ave"])) > 1e-9:
                raise ConfigError("sensor: n_ave is inconsistent with the given n0/n1")
            return SensorParams(n0=n0, n1=n1, contrast=contrast, n_ave=n_ave,
                                t2_star=float(merged["t2_star"]),
                                decay_power=float(merged["decay_power"]),
                                omega_calib=calib_frequency(float(merged["b_calib"]), gamma_e),
                                gamma_e=gamma_e)
        return SensorParams.from_contrast(float(merged["contrast"]), float(merged["n_ave"]),
                                          float(merged["t2_star"]), float(merged["decay_power"]),
                                          float(merged["b_calib"]), gamma_e)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sensor: {exc}") from exc


def _build_plan(data: dict) -> AcquisitionPlan:
    merged = _merged("plan", data)
    try:
        return AcquisitionPlan(
            t_start=float(merged["t_start"]),
            t_stop=float(merged["t_stop"]),
            f_sample=float(merged["f_sample"]),
            repetitions=int(merged["repetitions"]),
            n_experiments=int(merged["n_experiments"]),
            seed=int(merged.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"plan: {exc}") from exc


def _build_beta_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "step"}
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in 'filter.beta_grid'")
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        if step <= 0 or stop <= start:
            raise ConfigError("filter.beta_grid needs stop > start and step > 0")
        n = int(round((stop - start) / step))
        return start + step * np.arange(n + 1)
    grid = np.asarray(spec, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ConfigError("filter.beta_grid must be strictly increasing with >= 3 values")
    return grid


def _build_filter(data: dict) -> FilterConfig:
    merged = _merged("filter", data)
    basis = str(merged["basis"])
    if basis not in available_bases():
        raise ConfigError(f"filter: unknown basis {basis!r} (known: {', '.join(available_bases())})")
    boundary = str(merged["boundary"])
    if boundary not in ("periodic", "symmetric"):
        raise ConfigError(f"filter: unknown boundary {boundary!r}")
    levels = merged["levels"]
    if levels is not None:
        levels = int(levels)
        if levels < 0:
            raise ConfigError(f"filter: levels must be >= 0, got {levels}")
    freq_points = int(merged["freq_points"])
    freq_window = float(merged["freq_window"])
    if freq_points < 3:
        raise ConfigError("filter: freq_points must be >= 3")
    if not 0.0 < freq_window < 1.0:
        raise ConfigError("filter: freq_window must lie in (0, 1)")
    return FilterConfig(
        basis=basis,
        levels=levels,
        boundary=boundary,
        beta=float(merged["beta"]),
        beta_grid=_build_beta_grid(merged["beta_grid"]),
        freq_window=freq_window,
        freq_points=freq_points,
    )


def _build_experiment(data: dict) -> ExperimentConfig:
    merged = _merged("experiment", data)
    mode = merged.get("mode")
    if mode is not None and mode not in MODES:
        raise ConfigError(f"experiment: unknown mode {mode!r} (known: {', '.join(MODES)})")
    photon_stats = str(merged["photon_stats"])
    if photon_stats not in ("bernoulli-poisson", "poisson"):
        raise ConfigError(f"experiment: unknown photon_stats {photon_stats!r}")
    n_sd = merged["n_sd"]
    if n_sd is not None:
        n_sd = int(n_sd)
        if n_sd < 1:
            raise ConfigError(f"experiment: n_sd must be >= 1, got {n_sd}")
    m_values = [int(m) for m in merged["m_values"]]
    if any(m < 1 for m in m_values):
        raise ConfigError("experiment: m_values must all be >= 1")
    n_sd_values = [int(v) for v in merged["n_sd_values"]]
    if any(v < 1 for v in n_sd_values):
        raise ConfigError("experiment: n_sd_values must all be >= 1")
    points = merged.get("points")
    if points is not None:
        points = [[float(a), float(b)] for a, b in points]
    return ExperimentConfig(
        mode=mode,
        delta_b=float(merged["delta_b"]),
        n_sd=n_sd,
        m_values=m_values,
        n_sd_values=n_sd_values,
        photon_stats=photon_stats,
        shared_estimate=bool(merged["shared_estimate"]),
        squared_contrast=bool(merged["squared_contrast"]),
        points=points,
        points_file=merged.get("points_file"),
    )


def _build_output(data: dict) -> OutputConfig:
    merged = _merged("output", data)
    formats = list(merged["formats"])
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output: unknown format {fmt!r}")
    if not formats:
        raise ConfigError("output: formats must not be empty")
    return OutputConfig(directory=str(merged["directory"]), formats=formats)


def config_snapshot(config: RunConfig) -> dict:
    """Fully resolved configuration, defaults applied, for the run manifest."""
    s, p, f, e, o = config.sensor, config.plan, config.filter, config.experiment, config.output
    return {
        "sensor": {"contrast": s.contrast, "n_ave": s.n_ave, "n0": s.n0, "n1": s.n1,
                   "t2_star": s.t2_star, "decay_power": s.decay_power,
                   "b_calib": s.omega_calib / abs(s.gamma_e), "gamma_e": s.gamma_e},
        "plan": {"t_start": p.t_start, "t_stop": p.t_stop, "f_sample": p.f_sample,
                 "repetitions": p.repetitions, "n_experiments": p.n_experiments,
                 "seed": p.seed},
        "filter": {"basis": f.basis, "levels": f.levels, "boundary": f.boundary,
                   "beta": f.beta, "beta_grid": [float(b) for b in f.beta_grid],
                   "freq_window": f.freq_window, "freq_points": f.freq_points},
        "experiment": {"mode": e.mode, "delta_b": e.delta_b, "n_sd": e.n_sd,
                       "m_values": e.m_values, "n_sd_values": e.n_sd_values,
                       "photon_stats": e.photon_stats, "shared_estimate": e.shared_estimate,
                       "squared_contrast": e.squared_contrast,
                       "points": e.points, "points_file": e.points_file},
        # the output directory is a location, not configuration: leaving it
        # out keeps table bytes identical wherever a run is written
        "output": {"formats": o.formats},
    }


def parse_config(source: str | Path | dict | None) -> RunConfig:
    """Parse and validate a configuration from a path, JSON text or dict.

    ``None`` yields the all-defaults configuration.  Parse errors carry the
    offending line; validation errors name the violated invariant.
    """
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = source
    else:
        if isinstance(source, Path):
            text = source.read_text()
        else:
            try:
                is_file = "\n" not in source and Path(source).exists()
            except OSError:
                is_file = False
            text = Path(source).read_text() if is_file else source
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section {sorted(unknown)[0]!r} (known: {', '.join(_SECTIONS)})")
    config = RunConfig(
        sensor=_build_sensor(data.get("sensor", {})),
        plan=_build_plan(data.get("plan", {})),
        filter=_build_filter(data.get("filter", {})),
        experiment=_build_experiment(data.get("experiment", {})),
        output=_build_output(data.get("output", {})),
        seed_explicit="seed" in data.get("plan", {}),
    )
    return RunConfig(sensor=config.sensor, plan=config.plan, filter=config.filter,
                     experiment=config.experiment, output=config.output,
                     seed_explicit=config.seed_explicit,
                     snapshot=config_snapshot(config))
