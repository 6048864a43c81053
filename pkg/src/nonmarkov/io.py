"""File formats, run configuration and plot emission.

All numeric output uses 17-significant-digit decimals so that every file
re-parses to the in-memory values exactly and re-runs are byte-identical.
Frequencies in configuration files carry explicit unit suffixes
(``_mhz_cyclic`` is multiplied by 2 pi at the boundary, ``_rad_per_us`` is
taken as is); time values are in microseconds.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .exceptions import ConfigError
from .ionmodel import IonParams
from .metrics import TraceDistanceSeries
from .noise import NoiseConfig, NoiseMode
from .qmodel import ModelParams, PureState2, Trajectory, rotation_gate
from .regularize import LoessConfig, PlateauConfig

TWO_PI = 2.0 * math.pi

ENV_OUTPUT_DIR = "NONMARKOV_OUT"


def fmt(x: float) -> str:
    """Decimal serialization that round-trips float64 exactly."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# CSV formats

def write_trajectory_csv(path, traj: Trajectory, time_offset: float = 0.0) -> None:
    """Trajectory file: header t,vx,vy,vz[,shots], one row per time point."""
    lines = []
    if traj.shots is None:
        lines.append("t,vx,vy,vz")
        for t, v in zip(traj.times, traj.points):
            lines.append(f"{fmt(t + time_offset)},{fmt(v[0])},{fmt(v[1])},{fmt(v[2])}")
    else:
        lines.append("t,vx,vy,vz,shots")
        for t, v in zip(traj.times, traj.points):
            lines.append(f"{fmt(t + time_offset)},{fmt(v[0])},{fmt(v[1])},{fmt(v[2])},"
                         f"{traj.shots}")
    _write_text(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    header, rows = _read_csv(path, {"t,vx,vy,vz": 4, "t,vx,vy,vz,shots": 5})
    data = np.asarray(rows, dtype=float)
    shots = None
    if header == "t,vx,vy,vz,shots":
        shots_col = data[:, 4]
        if np.any(shots_col != shots_col[0]):
            raise ConfigError(f"{path}: shots column is not constant")
        shots = int(shots_col[0])
    return Trajectory(times=data[:, 0], points=data[:, 1:4], shots=shots)


def write_series_csv(path, series: TraceDistanceSeries, time_offset: float = 0.0) -> None:
    """Trace-distance file: header t,D[,sigma]."""
    lines = []
    if series.sigmas is None:
        lines.append("t,D")
        for t, d in zip(series.times, series.values):
            lines.append(f"{fmt(t + time_offset)},{fmt(d)}")
    else:
        lines.append("t,D,sigma")
        for t, d, s in zip(series.times, series.values, series.sigmas):
            lines.append(f"{fmt(t + time_offset)},{fmt(d)},{fmt(s)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_series_csv(path) -> TraceDistanceSeries:
    header, rows = _read_csv(path, {"t,D": 2, "t,D,sigma": 3})
    data = np.asarray(rows, dtype=float)
    sigmas = data[:, 2] if header == "t,D,sigma" else None
    return TraceDistanceSeries(times=data[:, 0], values=data[:, 1], sigmas=sigmas)


def write_sweep_csv(path, s_grid, chi_values, flags) -> None:
    """Sweep file: header s,chi,flag with flag = 1 when no oscillation survived."""
    lines = ["s,chi,flag"]
    for s, chi, flag in zip(s_grid, chi_values, flags):
        lines.append(f"{fmt(s)},{fmt(chi)},{int(flag)}")
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _read_csv(path, headers: dict[str, int]) -> tuple[str, list[list[float]]]:
    """Read a comma-separated numeric file, reporting file/line/column on errors."""
    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not raw:
        raise ConfigError(f"{path}:1: empty file")
    header = raw[0].strip()
    if header not in headers:
        raise ConfigError(
            f"{path}:1: unrecognized header {header!r}; expected one of "
            f"{sorted(headers)}")
    n_cols = headers[header]
    rows = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != n_cols:
            raise ConfigError(
                f"{path}:{lineno}: expected {n_cols} columns, got {len(fields)}")
        row = []
        for col, token in enumerate(fields, start=1):
            try:
                row.append(float(token))
            except ValueError as exc:
                raise ConfigError(
                    f"{path}:{lineno}:{col}: not a number: {token!r}") from exc
        rows.append(row)
    if not rows:
        raise ConfigError(f"{path}:2: no data rows")
    return header, rows


# ---------------------------------------------------------------------------
# Run configuration

@dataclass
class RunConfig:
    """Fully resolved run configuration (all frequencies angular, times in us)."""

    kind: str  # "two_qubit" or "ion"
    model: ModelParams | None = None
    ion: IonParams | None = None
    nbar: float = 0.0
    initial_states: list[tuple[str, PureState2]] = field(default_factory=list)
    t_start: float = 0.0
    t_end: float = 1.0
    n_points: int = 2
    noise: NoiseConfig | None = None
    loess: LoessConfig = field(default_factory=lambda: LoessConfig(span_fraction=0.0))
    plateau: PlateauConfig = field(default_factory=PlateauConfig)
    amplitude_threshold: float = 1e-3
    chi_variant: str = "extrema"
    time_offset: float = 0.0
    output_dir: str = "."

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


def _req(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing key {context}.{key}")
    return mapping[key]


def _frequency(mapping: dict, base: str, context: str) -> float:
    """Resolve a frequency given with an explicit unit suffix."""
    cyclic = f"{base}_mhz_cyclic"
    angular = f"{base}_rad_per_us"
    has_c = cyclic in mapping
    has_a = angular in mapping
    if has_c == has_a:
        raise ConfigError(
            f"{context}: give exactly one of {cyclic} or {angular}")
    value = mapping[cyclic] if has_c else mapping[angular]
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{context}.{cyclic if has_c else angular}: not a number")
    return TWO_PI * value if has_c else value


def _angle(mapping: dict, base: str, context: str, default: float | None = None) -> float:
    rad = f"{base}_rad"
    pi_units = f"{base}_pi"
    has_r = rad in mapping
    has_p = pi_units in mapping
    if has_r and has_p:
        raise ConfigError(f"{context}: give only one of {rad} or {pi_units}")
    if not has_r and not has_p:
        if default is None:
            raise ConfigError(f"{context}: missing {rad} or {pi_units}")
        return default
    value = mapping[rad] if has_r else mapping[pi_units]
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{context}.{rad if has_r else pi_units}: not a number")
    return value if has_r else value * math.pi


def _initial_state(entry, index: int) -> tuple[str, PureState2]:
    context = f"initial_states[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{context}: expected a mapping")
    label = str(entry.get("label", f"state_{index}"))
    if "state" in entry:
        amps = entry["state"]
        try:
            a = complex(amps[0][0], amps[0][1])
            b = complex(amps[1][0], amps[1][1])
        except (TypeError, IndexError, ValueError):
            raise ConfigError(f"{context}.state: expected [[re,im],[re,im]]")
        try:
            return label, PureState2(a, b)
        except ValueError as exc:
            raise ConfigError(f"{context}.state: {exc}")
    if "prep" in entry:
        prep = entry["prep"]
        if not isinstance(prep, dict):
            raise ConfigError(f"{context}.prep: expected a mapping")
        if "theta_rad" in prep:
            theta = float(prep["theta_rad"])
        else:
            rabi = _frequency(prep, "rabi", f"{context}.prep")
            tau = float(_req(prep, "tau_us", f"{context}.prep"))
            theta = rabi * tau
        phi = _angle(prep, "phi", f"{context}.prep")
        psi = rotation_gate(theta, phi) @ np.array([1.0, 0.0], dtype=complex)
        return label, PureState2(complex(psi[0]), complex(psi[1]))
    raise ConfigError(f"{context}: needs either 'state' or 'prep'")


def load_config(path) -> RunConfig:
    """Load and resolve a YAML/JSON run configuration (or a manifest)."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if "config" in doc and "command" in doc:  # manifest round-trip
        doc = doc["config"]
    return resolve_config(doc)


def resolve_config(doc: dict) -> RunConfig:
    cfg = RunConfig(kind="two_qubit")
    model = _req(doc, "model", "config")
    if not isinstance(model, dict):
        raise ConfigError("config.model: expected a mapping")
    cfg.kind = str(model.get("kind", "two_qubit"))
    if cfg.kind == "two_qubit":
        try:
            cfg.model = ModelParams(
                omega_sys=_frequency(model, "omega_sys", "config.model"),
                omega_res=_frequency(model, "omega_res", "config.model"),
                coupling=_frequency(model, "coupling", "config.model"))
        except ValueError as exc:
            raise ConfigError(f"config.model: {exc}")
    elif cfg.kind == "ion":
        try:
            cfg.ion = IonParams(
                rabi=_frequency(model, "rabi", "config.model"),
                motional=_frequency(model, "motional", "config.model"),
                lamb_dicke=float(_req(model, "lamb_dicke", "config.model")),
                laser_phase=_angle(model, "laser_phase", "config.model", default=0.0),
                fock_cutoff=int(model.get("fock_cutoff", 10)))
        except ValueError as exc:
            raise ConfigError(f"config.model: {exc}")
        cfg.nbar = float(model.get("nbar", 0.0))
        if cfg.nbar < 0:
            raise ConfigError("config.model.nbar: must be >= 0")
    else:
        raise ConfigError(f"config.model.kind: unknown kind {cfg.kind!r}")

    states = doc.get("initial_states", [])
    if not isinstance(states, list):
        raise ConfigError("config.initial_states: expected a list")
    cfg.initial_states = [_initial_state(entry, i) for i, entry in enumerate(states)]

    grid = _req(doc, "time_grid", "config")
    if not isinstance(grid, dict):
        raise ConfigError("config.time_grid: expected a mapping")
    cfg.t_start = float(grid.get("t_start_us", 0.0))
    cfg.t_end = float(_req(grid, "t_end_us", "config.time_grid"))
    cfg.n_points = int(_req(grid, "n_points", "config.time_grid"))
    if cfg.n_points < 2:
        raise ConfigError("config.time_grid.n_points: must be >= 2")
    if not cfg.t_end > cfg.t_start:
        raise ConfigError("config.time_grid: t_end_us must exceed t_start_us")

    if "noise" in doc and doc["noise"] is not None:
        noise = doc["noise"]
        if not isinstance(noise, dict):
            raise ConfigError("config.noise: expected a mapping")
        mode_name = str(noise.get("mode", "bloch_shots"))
        try:
            mode = NoiseMode(mode_name)
        except ValueError:
            raise ConfigError(f"config.noise.mode: unknown mode {mode_name!r}")
        try:
            cfg.noise = NoiseConfig(shots=int(_req(noise, "shots", "config.noise")),
                                    seed=int(noise.get("seed", 0)), mode=mode)
        except ValueError as exc:
            raise ConfigError(f"config.noise: {exc}")

    if "loess" in doc and doc["loess"] is not None:
        lo = doc["loess"]
        try:
            cfg.loess = LoessConfig(span_fraction=float(lo.get("span_fraction", 0.0)),
                                    degree=int(lo.get("degree", 2)),
                                    robustness_iterations=int(
                                        lo.get("robustness_iterations", 0)))
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"config.loess: {exc}")

    if "plateau" in doc and doc["plateau"] is not None:
        pl = doc["plateau"]
        grid_spec = pl.get("s_grid", {})
        if isinstance(grid_spec, dict):
            start = float(grid_spec.get("start", 0.0))
            stop = float(grid_spec.get("stop", 1.0))
            num = int(grid_spec.get("num", 101))
            s_grid = np.linspace(start, stop, num)
        else:
            s_grid = np.asarray(grid_spec, dtype=float)
        try:
            cfg.plateau = PlateauConfig(eps_abs=float(pl.get("eps_abs", 0.02)),
                                        min_length=int(pl.get("min_length", 5)),
                                        s_grid=s_grid)
        except ValueError as exc:
            raise ConfigError(f"config.plateau: {exc}")

    if "measure" in doc and doc["measure"] is not None:
        me = doc["measure"]
        cfg.amplitude_threshold = float(me.get("amplitude_threshold", 1e-3))
        if cfg.amplitude_threshold <= 0:
            raise ConfigError("config.measure.amplitude_threshold: must be positive")
        cfg.chi_variant = str(me.get("variant", "extrema"))
        if cfg.chi_variant not in ("extrema", "positive-sum"):
            raise ConfigError(
                f"config.measure.variant: unknown variant {cfg.chi_variant!r}")

    cfg.time_offset = float(doc.get("time_offset_us", 0.0))
    cfg.output_dir = str(doc.get("output_dir", os.environ.get(ENV_OUTPUT_DIR, ".")))
    return cfg


def config_as_dict(cfg: RunConfig) -> dict:
    """Resolved configuration as a plain mapping (re-loadable, all angular)."""
    if cfg.kind == "two_qubit":
        model = {"kind": "two_qubit",
                 "omega_sys_rad_per_us": cfg.model.omega_sys,
                 "omega_res_rad_per_us": cfg.model.omega_res,
                 "coupling_rad_per_us": cfg.model.coupling}
    else:
        model = {"kind": "ion",
                 "rabi_rad_per_us": cfg.ion.rabi,
                 "motional_rad_per_us": cfg.ion.motional,
                 "lamb_dicke": cfg.ion.lamb_dicke,
                 "laser_phase_rad": cfg.ion.laser_phase,
                 "fock_cutoff": cfg.ion.fock_cutoff,
                 "nbar": cfg.nbar}
    doc = {
        "model": model,
        "initial_states": [
            {"label": label,
             "state": [[s.a.real, s.a.imag], [s.b.real, s.b.imag]]}
            for label, s in cfg.initial_states],
        "time_grid": {"t_start_us": cfg.t_start, "t_end_us": cfg.t_end,
                      "n_points": cfg.n_points},
        "loess": {"span_fraction": cfg.loess.span_fraction,
                  "degree": cfg.loess.degree,
                  "robustness_iterations": cfg.loess.robustness_iterations},
        "plateau": {"eps_abs": cfg.plateau.eps_abs,
                    "min_length": cfg.plateau.min_length,
                    "s_grid": [float(s) for s in cfg.plateau.s_grid]},
        "measure": {"amplitude_threshold": cfg.amplitude_threshold,
                    "variant": cfg.chi_variant},
        "time_offset_us": cfg.time_offset,
        "output_dir": cfg.output_dir,
    }
    if cfg.noise is not None:
        doc["noise"] = {"mode": cfg.noise.mode.value, "shots": cfg.noise.shots,
                        "seed": cfg.noise.seed}
    return doc


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(config_as_dict(cfg)).encode()).hexdigest()


def write_manifest(path, command: str, cfg: RunConfig, outputs: list[str]) -> None:
    """Manifest with the fully resolved configuration; no timestamps, so a
    re-run reproduces the manifest itself byte for byte."""
    doc = {"command": command, "config_hash": config_hash(cfg),
           "config": config_as_dict(cfg), "outputs": outputs}
    _write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Minimal static SVG line charts

_SVG_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def write_svg_lines(path, x, ys: list, labels: list[str],
                    x_label: str, y_label: str, title: str = "") -> None:
    """Static multi-line SVG chart; deterministic output, no interactivity."""
    width, height = 640, 420
    left, right, top, bottom = 64, 16, 28, 44
    x = np.asarray(x, dtype=float)
    all_y = np.concatenate([np.asarray(y, dtype=float) for y in ys])
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    span_x = x_hi - x_lo
    span_y = y_hi - y_lo
    plot_w = width - left - right
    plot_h = height - top - bottom

    def sx(v):
        return left + (v - x_lo) / span_x * plot_w

    def sy(v):
        return top + plot_h - (v - y_lo) / span_y * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{title}</text>')
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * span_x
        yv = y_lo + frac * span_y
        parts.append(f'<text x="{sx(xv):.1f}" y="{height - bottom + 16}" '
                     'text-anchor="middle" font-family="sans-serif" font-size="11">'
                     f'{xv:.6g}</text>')
        parts.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{yv:.6g}</text>')
    parts.append(f'<text x="{left + plot_w / 2:.1f}" y="{height - 10}" '
                 'text-anchor="middle" font-family="sans-serif" font-size="12">'
                 f'{x_label}</text>')
    parts.append(f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">{y_label}</text>')
    for i, (y, label) in enumerate(zip(ys, labels)):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        pts = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, np.asarray(y)))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{pts}"/>')
        parts.append(f'<text x="{left + plot_w - 4}" y="{top + 14 + 14 * i}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="11" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    _write_text(path, "\n".join(parts) + "\n")
