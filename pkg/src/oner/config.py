"""Run configuration: YAML schema with mandatory units, presets, resolution.

Every dimensioned value in a config file is a string of the form
``"<number> <unit>"``; bare numbers are rejected so a config never
silently changes meaning when the internal unit convention moves.
Dimensionless values (g-factors, fidelity targets) are plain numbers.

Frequencies are quoted the spectroscopic way: ``"30 MHz"`` means an
angular frequency of 2*pi*30 rad/us internally.  The unit ``rad/us``
bypasses that convention for lossless re-emission of resolved configs.

Three built-in presets name the operating regimes studied here by their
bias field: ``3000G`` (30 MHz drive at 60 degrees, 50 us observation)
and the weak-field pair ``1000G`` / ``1500G`` (15 and 20 MHz at
75 degrees, 150 us observation, tighter perturbation bounds).
"""

from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

import numpy as np
import yaml

from .atom import SR87, AtomSpec, DriveParams
from .basis import TRANSITIONS
from .stability import STRONG_FIELD_BOUNDS, WEAK_FIELD_BOUNDS


class ConfigError(ValueError):
    """Config rejection; the message starts with the offending key path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


_TWO_PI = 2 * np.pi

# multipliers into internal units (rad/us, us, gauss, rad, m)
_UNITS = {
    "frequency": {"Hz": _TWO_PI * 1e-6, "kHz": _TWO_PI * 1e-3,
                  "MHz": _TWO_PI, "GHz": _TWO_PI * 1e3, "rad/us": 1.0},
    "time": {"ns": 1e-3, "us": 1.0, "ms": 1e3, "s": 1e6},
    "field": {"mG": 1e-3, "G": 1.0, "gauss": 1.0},
    "angle": {"deg": np.pi / 180.0, "mrad": 1e-3, "rad": 1.0},
    "length": {"nm": 1e-9, "um": 1e-6, "m": 1.0},
}


def parse_quantity(value: Any, kind: str, path: str) -> float:
    """Parse ``"<number> <unit>"`` into internal units for ``kind``."""
    units = _UNITS[kind]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        raise ConfigError(path, f"missing unit; write e.g. "
                                f"\"{value} {next(iter(units))}\"")
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a quantity string, got {value!r}")
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError(path, f"expected \"<number> <unit>\", got {value!r}")
    number, unit = parts
    try:
        magnitude = float(number)
    except ValueError:
        raise ConfigError(path, f"bad number {number!r}") from None
    if unit not in units:
        raise ConfigError(
            path, f"unknown {kind} unit {unit!r}; one of {sorted(units)}")
    return magnitude * units[unit]


def format_quantity(value: float, kind: str) -> str:
    """Lossless emission in internal units (inverse of parse_quantity)."""
    unit = {"frequency": "rad/us", "time": "us", "field": "gauss",
            "angle": "rad", "length": "m"}[kind]
    return f"{float(value)!r} {unit}"


def _parse_dimensionless(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a plain number, got {value!r}")
    return float(value)


def parse_transition(value: Any, path: str = "transitions") -> float:
    """Parse one ``"<lower m_I>:<upper m_I>"`` pair into the lower m_I.

    Spin projections are written as fractions (``-9/2``) or decimals
    (``-4.5``); the pair must be adjacent and drivable.
    """
    if not isinstance(value, str) or ":" not in value:
        raise ConfigError(path, f"expected \"<m_I>:<m_I>\" pair, got {value!r}")
    lower_text, upper_text = value.split(":", 1)
    try:
        lower = float(Fraction(lower_text.strip()))
        upper = float(Fraction(upper_text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(path, f"bad spin projection in {value!r}") from None
    if upper != lower + 1.0:
        raise ConfigError(path, f"{value!r} is not a raising pair of "
                                "neighbouring projections")
    if lower not in TRANSITIONS:
        raise ConfigError(path, f"{value!r} is outside the I = 9/2 manifold")
    return lower


def format_transition(m_i: float) -> str:
    lower = Fraction(m_i).limit_denominator(2)
    return f"{lower}:{lower + 1}"


@dataclass(frozen=True)
class Preset:
    drive: DriveParams                      # template; period/detuning unset
    grid: tuple[float, float, float]        # us: start, stop, step
    bounds: Mapping[str, float]
    layout: str                             # natural tolerance-table shape


PRESETS = {
    "3000G": Preset(
        DriveParams(field=3000.0, rabi_peak=_TWO_PI * 30.0,
                    angle=np.deg2rad(60.0), window=50.0),
        (0.45, 0.56, 0.002), STRONG_FIELD_BOUNDS, "aggregated"),
    "1000G": Preset(
        DriveParams(field=1000.0, rabi_peak=_TWO_PI * 15.0,
                    angle=np.deg2rad(75.0), window=150.0),
        (1.28, 1.80, 0.002), WEAK_FIELD_BOUNDS, "per_transition"),
    "1500G": Preset(
        DriveParams(field=1500.0, rabi_peak=_TWO_PI * 20.0,
                    angle=np.deg2rad(75.0), window=150.0),
        (0.90, 1.20, 0.002), WEAK_FIELD_BOUNDS, "per_transition"),
}
DEFAULT_PRESET = "3000G"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description, everything in internal units."""

    atom: AtomSpec
    drive: DriveParams                      # template for calibration
    transitions: tuple[float, ...]
    grid: tuple[float, float, float]
    targets: tuple[float, ...]
    bounds: tuple[tuple[str, float], ...]   # sorted (parameter, magnitude)
    layout: str                             # aggregated | per_transition
    floor: float

    def period_grid(self) -> np.ndarray:
        start, stop, step = self.grid
        return np.arange(start, stop, step)

    def bounds_dict(self) -> dict[str, float]:
        return dict(self.bounds)


_ATOM_KINDS = {
    "g_j": None, "g_i": None,
    "hyperfine_a": "frequency", "hyperfine_q": "frequency",
    "gamma": "frequency", "wavelength": "length",
}
_DRIVE_KINDS = {
    "field": "field", "rabi_peak": "frequency",
    "angle": "angle", "window": "time",
}
_BOUND_KINDS = {
    "period": "time", "field": "field", "rabi_peak": "frequency",
    "angle": "angle", "detuning": "frequency",
}


def _require_mapping(node: Any, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(path, f"expected a mapping, got {node!r}")
    return node


def _reject_unknown(node: dict, allowed, path: str) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0],
                          "unknown key")


def parse_config(text: str) -> RunConfig:
    """Parse a YAML document into a resolved RunConfig.

    An empty document resolves to the full 3000G preset over all nine
    transitions.
    """
    try:
        root = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as err:
        raise ConfigError("", f"not parseable as YAML ({err})") from None
    root = _require_mapping(root, "")
    _reject_unknown(root, {"preset", "atom", "drive", "transitions",
                           "scan", "stability"}, "")

    preset_name = root.get("preset", DEFAULT_PRESET)
    if preset_name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset_name!r}; "
                                    f"one of {sorted(PRESETS)}")
    preset = PRESETS[preset_name]

    atom_node = _require_mapping(root.get("atom"), "atom")
    _reject_unknown(atom_node, _ATOM_KINDS, "atom")
    atom_overrides = {}
    for key, value in atom_node.items():
        kind = _ATOM_KINDS[key]
        path = f"atom.{key}"
        atom_overrides[key] = (_parse_dimensionless(value, path) if kind is None
                               else parse_quantity(value, kind, path))
    atom = dataclasses.replace(SR87, **atom_overrides) if atom_overrides else SR87

    drive_node = _require_mapping(root.get("drive"), "drive")
    _reject_unknown(drive_node, _DRIVE_KINDS, "drive")
    drive_overrides = {
        key: parse_quantity(value, _DRIVE_KINDS[key], f"drive.{key}")
        for key, value in drive_node.items()
    }
    try:
        drive = dataclasses.replace(preset.drive, **drive_overrides)
    except ValueError as err:
        raise ConfigError("drive", str(err)) from None

    transitions_node = root.get("transitions", "all")
    if transitions_node == "all":
        transitions = TRANSITIONS
    else:
        if isinstance(transitions_node, str):
            transitions_node = [transitions_node]
        if not isinstance(transitions_node, list) or not transitions_node:
            raise ConfigError("transitions",
                              f"expected \"all\", a pair, or a list; "
                              f"got {transitions_node!r}")
        transitions = tuple(sorted(
            {parse_transition(item, f"transitions[{i}]")
             for i, item in enumerate(transitions_node)}))

    scan_node = _require_mapping(root.get("scan"), "scan")
    _reject_unknown(scan_node, {"start", "stop", "step"}, "scan")
    grid = tuple(
        parse_quantity(scan_node[key], "time", f"scan.{key}")
        if key in scan_node else default
        for key, default in zip(("start", "stop", "step"), preset.grid))
    if not 0 < grid[0] < grid[1]:
        raise ConfigError("scan", "need 0 < start < stop")
    if grid[2] <= 0:
        raise ConfigError("scan.step", "step must be positive")

    stability_node = _require_mapping(root.get("stability"), "stability")
    _reject_unknown(stability_node, {"targets", "bounds", "layout", "floor"},
                    "stability")
    targets_node = stability_node.get("targets", [0.999, 0.99])
    if not isinstance(targets_node, list) or not targets_node:
        raise ConfigError("stability.targets", "expected a non-empty list")
    targets = tuple(
        _parse_dimensionless(t, f"stability.targets[{i}]")
        for i, t in enumerate(targets_node))
    for i, target in enumerate(targets):
        if not 0 < target < 1:
            raise ConfigError(f"stability.targets[{i}]",
                              f"target must lie in (0, 1), got {target}")
    bounds_node = _require_mapping(stability_node.get("bounds"),
                                   "stability.bounds")
    _reject_unknown(bounds_node, _BOUND_KINDS, "stability.bounds")
    bounds = dict(preset.bounds)
    for key, value in bounds_node.items():
        bound = parse_quantity(value, _BOUND_KINDS[key],
                               f"stability.bounds.{key}")
        if bound <= 0:
            raise ConfigError(f"stability.bounds.{key}",
                              "search bound must be positive")
        bounds[key] = bound
    layout = stability_node.get("layout", preset.layout)
    if layout not in ("aggregated", "per_transition", "both"):
        raise ConfigError(
            "stability.layout",
            f"one of aggregated, per_transition, both; got {layout!r}")
    floor = _parse_dimensionless(stability_node.get("floor", 0.99),
                                 "stability.floor")
    if not 0 < floor < 1:
        raise ConfigError("stability.floor", f"must lie in (0, 1), got {floor}")

    return RunConfig(atom=atom, drive=drive, transitions=transitions,
                     grid=grid, targets=targets,
                     bounds=tuple(sorted(bounds.items())), layout=layout,
                     floor=floor)


def emit_config(config: RunConfig) -> str:
    """Resolved config as YAML; parse_config(emit_config(c)) == c."""
    atom = {
        key: (getattr(config.atom, key) if kind is None
              else format_quantity(getattr(config.atom, key), kind))
        for key, kind in _ATOM_KINDS.items()
    }
    drive = {
        key: format_quantity(getattr(config.drive, key), kind)
        for key, kind in _DRIVE_KINDS.items()
    }
    document = {
        "atom": atom,
        "drive": drive,
        "transitions": [format_transition(m) for m in config.transitions],
        "scan": dict(zip(("start", "stop", "step"),
                         (format_quantity(g, "time") for g in config.grid))),
        "stability": {
            "targets": list(config.targets),
            "bounds": {key: format_quantity(value, _BOUND_KINDS[key])
                       for key, value in config.bounds},
            "layout": config.layout,
            "floor": config.floor,
        },
    }
    return yaml.safe_dump(document, sort_keys=True)


def config_snapshot(config: RunConfig) -> dict:
    """JSON-ready snapshot of a resolved config (internal units)."""
    return {
        "atom": dataclasses.asdict(config.atom),
        "drive": dataclasses.asdict(config.drive),
        "transitions": list(config.transitions),
        "grid": list(config.grid),
        "targets": list(config.targets),
        "bounds": dict(config.bounds),
        "layout": config.layout,
        "floor": config.floor,
    }
