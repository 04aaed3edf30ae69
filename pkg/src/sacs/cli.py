"""Command-line front end.

Subcommands:

* ``sacs simulate --config FILE --out DIR``: integrate one scenario, write
  the trajectory (CSV or JSON), a superposition report, and a run manifest.
* ``sacs sweep KIND --config FILE --out DIR``: run one of the sweep kinds
  detuning | contour | surface | gap | levelline and write the grids.
* ``sacs validate-data [--data FILE]``: Einstein-A / dipole consistency of
  the transition table.

Exit codes: 0 success, 1 --check mismatch, 2 config error, 3 physics
validation error, 4 non-adiabatic outcome under --strict, 5 data-table
inconsistency.  Outputs are written with fixed 12-significant-digit
formatting, so identical config and version give byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import time
from pathlib import Path

import numpy as np

from ._version import __version__
from .atomdata import DataFileError, PhysicsError, load_transition_table, validate_table
from .config import (ConfigError, SWEEP_KINDS, parse_scenario_config,
                     parse_sweep_config)
from .propagate import propagate, trajectory_to_csv
from .protocols import analyze_final
from .sweeps import (contour_sweep, detuning_scan, eigen_surfaces, gap_surface,
                     grid_metadata, grid_to_csv, grid_to_json, level_line,
                     path_to_csv)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_STRICT = 4
EXIT_DATA = 5


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Collects output files and writes the manifest."""

    def __init__(self, command, out_dir: Path, config_path: Path | None):
        self.command = command
        self.out = out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.config_path = config_path
        self.t0 = time.monotonic()
        self.outputs: list[Path] = []
        self.warnings: list[str] = []

    def add(self, path: Path):
        self.outputs.append(path)

    def manifest(self) -> dict:
        entry = None
        if self.config_path is not None:
            entry = {"path": str(self.config_path),
                     "sha256": _sha256(self.config_path)}
        return {
            "tool": "sacs",
            "version": __version__,
            "command": self.command,
            "config": entry,
            "wall_time_s": round(time.monotonic() - self.t0, 3),
            "outputs": [{"path": p.name, "sha256": _sha256(p),
                         "bytes": p.stat().st_size} for p in self.outputs],
            "warnings": list(self.warnings),
        }

    def write_manifest(self) -> Path:
        path = self.out / "manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.manifest(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        return path

    def check_against(self, previous: dict | None) -> list[str]:
        """Compare current output hashes against a previous manifest."""
        if previous is None:
            return ["--check: no previous manifest.json in the output directory"]
        old = {e["path"]: e["sha256"] for e in previous.get("outputs", [])}
        problems = []
        for p in self.outputs:
            if p.name not in old:
                problems.append(f"--check: {p.name} missing from previous manifest")
            elif old[p.name] != _sha256(p):
                problems.append(f"--check: {p.name} differs from previous run")
        return problems


def _load_previous_manifest(out_dir: Path) -> dict | None:
    path = out_dir / "manifest.json"
    if not path.is_file():
        return None
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None


def _report_payload(report, traj) -> dict:
    return {
        "weights": {"p1": report.weight_1, "p3": report.weight_3},
        "residual_p2": report.residual_p2,
        "relative_phase_rad": (None if np.isnan(report.relative_phase)
                               else report.relative_phase),
        "time_integrated_p2_ns": report.time_integrated_p2,
        "norm_drift": traj.norm_drift,
        "flags": list(report.flags),
    }


def cmd_simulate(args) -> int:
    spec = parse_scenario_config(args.config)
    previous = _load_previous_manifest(Path(args.out)) if args.check else None
    run = _Run(["simulate", str(args.config)], Path(args.out), Path(args.config))
    traj = propagate(spec.scenario, grid=spec.grid,
                     dt=args.dt if args.dt is not None else spec.dt)
    report = analyze_final(traj)
    run.warnings.extend(report.flags)

    if args.format == "csv":
        traj_path = run.out / f"{spec.label}_trajectory.csv"
        trajectory_to_csv(traj, traj_path)
    else:
        traj_path = run.out / f"{spec.label}_trajectory.json"
        payload = {"t": traj.times.tolist(),
                   "states_re": traj.states.real.tolist(),
                   "states_im": traj.states.imag.tolist(),
                   "populations": traj.populations.tolist()}
        with open(traj_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    run.add(traj_path)

    report_path = run.out / f"{spec.label}_report.json"
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_report_payload(report, traj), fh, indent=1, sort_keys=True)
        fh.write("\n")
    run.add(report_path)
    run.write_manifest()

    print(f"{spec.label}: P1={report.weight_1:.4f} P3={report.weight_3:.4f} "
          f"P2={report.residual_p2:.2e} norm_drift={traj.norm_drift:.2e}")
    for w in report.flags:
        print(f"  warning: {w}")

    if args.check:
        problems = run.check_against(previous)
        for p in problems:
            print(p)
        if problems:
            return EXIT_CHECK_FAILED
    if args.strict and any("non-adiabatic" in f for f in report.flags):
        return EXIT_STRICT
    return EXIT_OK


def _write_grid(run, grid, name, label, fmt):
    if fmt == "csv":
        path = run.out / f"{label}_{name}.csv"
        grid_to_csv(grid, name, path)
        run.add(path)
        side = run.out / f"{label}_{name}.meta.json"
        with open(side, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(grid_metadata(grid), fh, indent=1, sort_keys=True)
            fh.write("\n")
        run.add(side)
    else:
        path = run.out / f"{label}_{name}.json"
        grid_to_json(grid, path)
        run.add(path)


def cmd_sweep(args) -> int:
    spec = parse_sweep_config(args.config, args.kind, points_override=args.grid)
    previous = _load_previous_manifest(Path(args.out)) if args.check else None
    run = _Run(["sweep", args.kind, str(args.config)], Path(args.out),
               Path(args.config))
    label = spec.label

    if args.kind == "detuning":
        grid = detuning_scan(spec.base.scenario, spec.axes["two_photon_detuning"],
                             dt=args.dt)
        for name in ("p1", "p2", "p3"):
            _write_grid(run, grid, name, label, args.format)
    elif args.kind == "contour":
        g1, g3 = contour_sweep(spec.axes["stokes_peak"], spec.axes["delay"],
                               spec.params["stark_peak"],
                               pump_peak=spec.params["pump_peak"],
                               width=spec.params["width"],
                               delta2=spec.params["delta2"],
                               stark_offset=spec.params["stark_offset"],
                               dt=args.dt)
        _write_grid(run, g1, "p1", label, args.format)
        _write_grid(run, g3, "p3", label, args.format)
    elif args.kind == "surface":
        grid = eigen_surfaces(spec.params["delta2"], spec.axes["omega"],
                              spec.axes["stark"], normalize=spec.params["normalize"])
        for name in ("lambda_minus", "lambda_0", "lambda_plus"):
            _write_grid(run, grid, name, label, args.format)
    elif args.kind == "gap":
        grid = gap_surface(spec.params["delta2"], spec.axes["omega"],
                           spec.axes["stark"], normalize=spec.params["normalize"])
        _write_grid(run, grid, "gap", label, args.format)
    else:  # levelline
        surface = gap_surface(spec.params["delta2"], spec.axes["omega"],
                              spec.axes["stark"])
        path_obj = level_line(surface, spec.params["level"], spec.params["anchor"])
        out_path = run.out / f"{label}_levelline.csv"
        path_to_csv(path_obj, out_path)
        run.add(out_path)

    run.write_manifest()
    print(f"{label}: wrote {len(run.outputs)} file(s) to {run.out}")
    if args.check:
        problems = run.check_against(previous)
        for p in problems:
            print(p)
        if problems:
            return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_validate_data(args) -> int:
    records = load_transition_table(args.data)
    checks = validate_table(records)
    width = max(len(c.transition) for c in checks)
    bad = 0
    for c in checks:
        status = "ok" if c.ok else "FAIL"
        print(f"{c.transition:<{width}}  lambda={c.wavelength_nm:9.3f} nm  "
              f"d_table={c.dipole_table / 1e-30:6.2f}  "
              f"d_from_A={c.dipole_from_a / 1e-30:6.2f} (1e-30 C m)  "
              f"dev={100 * c.dipole_deviation:5.2f}%  "
              f"A-dev={100 * c.einstein_deviation:6.1f}%  {status}")
        bad += 0 if c.ok else 1
    print(f"{len(checks)} rows checked, {bad} inconsistent")
    return EXIT_OK if bad == 0 else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sacs",
        description="Three-state ladder simulator for adiabatic "
                    "superposition protocols")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one scenario")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--dt", type=float, default=None, metavar="NS",
                     help="integrator step override in ns")
    sim.add_argument("--strict", action="store_true",
                     help="exit 4 on a non-adiabatic outcome")
    sim.add_argument("--check", action="store_true",
                     help="compare outputs against the previous manifest")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a parameter sweep")
    sw.add_argument("kind", choices=SWEEP_KINDS)
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--grid", type=int, default=None, metavar="N",
                    help="override the number of points per axis")
    sw.add_argument("--dt", type=float, default=None, metavar="NS")
    sw.add_argument("--strict", action="store_true")
    sw.add_argument("--check", action="store_true")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.set_defaults(func=cmd_sweep)

    val = sub.add_parser("validate-data", help="check the transition table")
    val.add_argument("--data", default=None,
                     help="path of a transition table (default: bundled)")
    val.set_defaults(func=cmd_validate_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which matches the config-error code
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return EXIT_CONFIG
    except DataFileError as exc:
        print(f"data error: {exc}")
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"physics error: {exc}")
        return EXIT_PHYSICS


if __name__ == "__main__":
    raise SystemExit(main())
