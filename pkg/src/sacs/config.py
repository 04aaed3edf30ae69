"""Structured-text run configuration with explicit physical units.

Configs are INI-style files (sections of key = value pairs).  Every
dimensioned value must carry a unit suffix (ns, rad/ns, nm, W/cm2,
MW/cm2, GW/cm2, rad); bare numbers are accepted only for dimensionless
keys such as point counts and ratios.  This keeps laboratory inputs
(intensities, wavelengths) and internal quantities (rad/ns) from being
silently confused.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .atomdata import (find_transition, load_transition_table,
                       mercury_stark_context, rabi_from_intensity,
                       stark_shift_from_intensity, effective_two_photon_rabi)
from .propagate import TimeGrid
from .protocols import ScenarioConfig, make_half_scrap, make_sacs, make_stirap


class ConfigError(ValueError):
    """Unreadable, incomplete, or ill-typed run configuration."""


_UNITS = {
    "time": {"ns": 1.0},
    "angfreq": {"rad/ns": 1.0},
    "intensity": {"W/cm2": 1.0, "MW/cm2": 1e6, "GW/cm2": 1e9},
    "wavelength": {"nm": 1.0},
    "angle": {"rad": 1.0},
}


def parse_quantity(text: str, kind: str, key: str) -> float:
    """Parse "value unit" with a unit legal for the given kind."""
    parts = text.split()
    if len(parts) != 2:
        raise ConfigError(
            f"{key}: expected '<number> <unit>' with a unit from "
            f"{sorted(_UNITS[kind])}, got {text!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"{key}: bad number {parts[0]!r}") from None
    unit = parts[1]
    if unit not in _UNITS[kind]:
        raise ConfigError(f"{key}: unit {unit!r} is not valid for {kind} "
                          f"(expected one of {sorted(_UNITS[kind])})")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value * _UNITS[kind][unit]


def parse_number(text: str, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: bad number {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: bad integer {text!r}") from None


def bundled_config_path(name: str) -> Path:
    """Path of a reference config shipped with the package."""
    path = Path(resources.files("sacs").joinpath(f"configs/{name}"))
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return path


def _read(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return cp


class _Section:
    """Accessor with required/optional typed lookups."""

    def __init__(self, cp, name):
        self.name = name
        self._sec = cp[name] if cp.has_section(name) else None

    @property
    def present(self) -> bool:
        return self._sec is not None

    def raw(self, key, default=None, required=False):
        if self._sec is None or key not in self._sec:
            if required:
                raise ConfigError(f"[{self.name}] is missing required key {key!r}")
            return default
        return self._sec[key].strip()

    def quantity(self, key, kind, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        return parse_quantity(text, kind, f"[{self.name}] {key}")

    def number(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        return parse_number(text, f"[{self.name}] {key}")

    def integer(self, key, default=None, required=False):
        text = self.raw(key, required=required)
        if text is None:
            return default
        return parse_int(text, f"[{self.name}] {key}")


@dataclass
class RunSpec:
    """Parsed scenario run: the scenario plus optional explicit grid/dt."""

    scenario: ScenarioConfig
    grid: TimeGrid | None
    dt: float | None
    label: str


def _drive_peak(sec: _Section, records, suffix: str) -> float:
    """Drive peak from either a direct rad/ns value or intensity+transition."""
    peak = sec.quantity(f"peak{suffix}", "angfreq")
    intensity = sec.quantity(f"intensity{suffix}", "intensity")
    if (peak is None) == (intensity is None):
        raise ConfigError(
            f"[{sec.name}] needs exactly one of peak{suffix} (rad/ns) or "
            f"intensity{suffix} (W/cm2) with transition{suffix}")
    if peak is not None:
        return peak
    label = sec.raw(f"transition{suffix}", required=True)
    try:
        upper, lower = label.split("-")
        rec = find_transition(records, upper.strip(), lower.strip())
    except ValueError:
        raise ConfigError(f"[{sec.name}] transition{suffix}: bad label {label!r} "
                          "(expected UPPER-LOWER)") from None
    return rabi_from_intensity(rec, intensity)


def _stark_peak(sec: _Section, records) -> float:
    peak = sec.quantity("peak", "angfreq")
    intensity = sec.quantity("intensity", "intensity")
    if (peak is None) == (intensity is None):
        raise ConfigError(f"[{sec.name}] needs exactly one of peak (rad/ns) or "
                          "intensity (W/cm2) with wavelength (nm)")
    if peak is not None:
        return peak
    wavelength = sec.quantity("wavelength", "wavelength", required=True)
    shifted = sec.raw("shifted_state", default="71S0")
    ctx = mercury_stark_context(records, wavelength_nm=wavelength,
                                shifted_state=shifted)
    return stark_shift_from_intensity(ctx, intensity)


def _grid_spec(cp) -> tuple[TimeGrid | None, float | None]:
    sec = _Section(cp, "grid")
    if not sec.present:
        return None, None
    dt_text = sec.raw("dt", default="auto")
    dt = None if dt_text == "auto" else parse_quantity(dt_text, "time", "[grid] dt")
    start = sec.quantity("start", "time")
    end = sec.quantity("end", "time")
    if (start is None) != (end is None):
        raise ConfigError("[grid] needs both start and end (or neither)")
    if start is None:
        return None, dt
    if dt is None:
        raise ConfigError("[grid] an explicit grid also needs an explicit dt")
    try:
        return TimeGrid(start, end, dt), dt
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from None


def parse_scenario_config(path) -> RunSpec:
    """Parse a scenario config into a RunSpec (raises ConfigError on misuse)."""
    cp = _read(path)
    sec = _Section(cp, "scenario")
    protocol = sec.raw("protocol", required=True)
    beta = sec.quantity("beta", "angle", default=0.0)
    records = None
    if any("intensity" in k for s in cp.sections() for k in cp[s]):
        records = load_transition_table()
    grid, dt = _grid_spec(cp)
    label = Path(path).stem

    if protocol == "sacs":
        det = _Section(cp, "detunings")
        delta2 = det.quantity("delta2", "angfreq", required=True)
        delta3 = det.quantity("delta3", "angfreq", default=-delta2)
        drive = _Section(cp, "drive")
        width = drive.quantity("width", "time", required=True)
        if width <= 0:
            raise ConfigError("[drive] width must be positive")
        delay = drive.quantity("delay", "time", required=True)
        if drive.raw("peak") is not None:
            peaks = (drive.quantity("peak", "angfreq"),) * 2
        else:
            peaks = (_drive_peak(drive, records, "1"),
                     _drive_peak(drive, records, "2"))
        stark = _Section(cp, "stark")
        stark_peak = _stark_peak(stark, records)
        stark_width = stark.quantity("width", "time", default=width)
        if stark_width <= 0:
            raise ConfigError("[stark] width must be positive")
        try:
            scenario = make_sacs(
                delta2, omega_peaks=peaks, stark_peak=stark_peak, width=width,
                stark_width=stark_width, delay=delay,
                shape=drive.raw("shape", default="sin2"), beta=beta,
                weight_control=(drive.raw("weight_control", "no") == "yes"),
                two_photon_detuning=delta2 + delta3)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif protocol in ("stirap", "fstirap"):
        det = _Section(cp, "detunings")
        delta2 = det.quantity("delta2", "angfreq", required=True)
        drive = _Section(cp, "drive")
        peak = drive.quantity("peak", "angfreq", required=True)
        width = drive.quantity("width", "time", required=True)
        if width <= 0:
            raise ConfigError("[drive] width must be positive")
        fractional = None
        separation = 1.2
        if protocol == "fstirap":
            fractional = _Section(cp, "fstirap").quantity(
                "alpha", "angle", required=True)
        else:
            sep = drive.quantity("separation", "time")
            separation = sep if sep is not None else 1.2 * width
        try:
            scenario = make_stirap(delta2, peak=peak, width=width,
                                   separation=separation,
                                   fractional=fractional, beta=beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif protocol == "half_scrap":
        pump = _Section(cp, "pump")
        pump_width = pump.quantity("width", "time", required=True)
        if pump_width <= 0:
            raise ConfigError("[pump] width must be positive")
        pump_delay = pump.quantity("delay", "time", default=0.3)
        if pump.raw("peak") is not None:
            omega_eff = pump.quantity("peak", "angfreq")
        else:
            intensity = pump.quantity("intensity", "intensity", required=True)
            wavelength = pump.quantity("wavelength", "wavelength", required=True)
            omega_eff = effective_two_photon_rabi(records or load_transition_table(),
                                                  wavelength, intensity)
        stark = _Section(cp, "stark")
        stark_peak = _stark_peak(stark, records)
        stark_width = stark.quantity("width", "time", required=True)
        if stark_width <= 0:
            raise ConfigError("[stark] width must be positive")
        hs = _Section(cp, "halfscrap")
        delta_static = hs.quantity("delta_static", "angfreq", required=True)
        readout_text = hs.raw("readout", default="auto")
        readout = ("auto" if readout_text == "auto"
                   else parse_quantity(readout_text, "time", "[halfscrap] readout"))
        try:
            scenario = make_half_scrap(
                omega_eff_peak=omega_eff, stark_peak=stark_peak,
                delta_static=delta_static, pump_width=pump_width,
                stark_width=stark_width, pump_delay=pump_delay,
                pump_shift_coeff=hs.number("pump_shift_coeff", default=0.1),
                readout=readout,
                readout_ratio=hs.number("readout_ratio", default=0.0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        raise ConfigError(f"unknown protocol {protocol!r}")
    return RunSpec(scenario=scenario, grid=grid, dt=dt, label=label)


@dataclass
class SweepSpec:
    kind: str
    base: RunSpec | None
    axes: dict
    params: dict
    label: str


SWEEP_KINDS = ("detuning", "contour", "surface", "gap", "levelline")


def _axis_values(sec: _Section, kind_of_unit: str, points_override=None):
    lo = sec.quantity("min", kind_of_unit, required=True)
    hi = sec.quantity("max", kind_of_unit, required=True)
    n = sec.integer("points", required=points_override is None)
    if points_override is not None:
        n = points_override
    if n < 2:
        raise ConfigError(f"[{sec.name}] points must be >= 2")
    if not lo < hi:
        raise ConfigError(f"[{sec.name}] needs min < max")
    return np.linspace(lo, hi, n)


def parse_sweep_config(path, kind: str, points_override: int | None = None
                       ) -> SweepSpec:
    """Parse a sweep config for the given kind."""
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"unknown sweep kind {kind!r} "
                          f"(expected one of {SWEEP_KINDS})")
    cp = _read(path)
    label = Path(path).stem
    if kind == "detuning":
        base = parse_scenario_config(path)
        axis = _Section(cp, "axis")
        if not axis.present:
            raise ConfigError("detuning sweep needs an [axis] section")
        values = _axis_values(axis, "angfreq", points_override)
        return SweepSpec(kind, base, {"two_photon_detuning": values}, {}, label)
    if kind == "contour":
        sw = _Section(cp, "sweep")
        params = {
            "pump_peak": sw.quantity("pump_peak", "angfreq", required=True),
            "width": sw.quantity("width", "time", default=1.0),
            "delta2": sw.quantity("delta2", "angfreq", required=True),
            "stark_peak": sw.quantity("stark_peak", "angfreq", required=True),
            "stark_offset": sw.number("stark_offset", default=-1.5),
        }
        stokes = _axis_values(_Section(cp, "axis.stokes"), "angfreq", points_override)
        delay = _axis_values(_Section(cp, "axis.delay"), "time", points_override)
        return SweepSpec(kind, None, {"stokes_peak": stokes, "delay": delay},
                         params, label)
    # surface / gap / levelline share the [surface] section
    sf = _Section(cp, "surface")
    delta2 = sf.quantity("delta2", "angfreq", required=True)
    n = points_override or sf.integer("points", default=101)
    if n < 2:
        raise ConfigError("[surface] points must be >= 2")
    omega = np.linspace(0.0, sf.quantity("omega_max", "angfreq", required=True), n)
    starkv = np.linspace(0.0, sf.quantity("stark_max", "angfreq", required=True), n)
    params = {"delta2": delta2,
              "normalize": sf.raw("normalize", default="no") == "yes"}
    if kind == "levelline":
        ll = _Section(cp, "levelline")
        params["level"] = ll.quantity("level", "angfreq", required=True)
        params["anchor"] = (ll.quantity("anchor_omega", "angfreq", default=0.0),
                            ll.quantity("anchor_stark", "angfreq", required=True))
    return SweepSpec(kind, None, {"omega": omega, "stark": starkv}, params, label)
