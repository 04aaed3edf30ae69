"""Parameter sweeps: eigenvalue surfaces, level lines, population maps.

The surface functions evaluate the two-photon-resonant Hamiltonian on an
(Omega, stark) grid; :func:`level_line` extracts a constant-gap contour by
marching squares, which is the geometric recipe for pulse amplitudes that
minimize nonadiabatic losses.  The population sweeps (two-photon detuning
scan, Stokes-amplitude/delay maps, weight-control scan) integrate batches
of scenarios on a shared grid and record final populations per cell.
Cells are evaluated independently and merged in row-major order, so
repeated runs are bitwise reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from ._version import __version__ as _version
from .propagate import TimeGrid, evolve_final_states, uniform_grid
from .protocols import (ScenarioConfig, default_grid, hamiltonian_series,
                        make_sacs)
from .pulses import envelope_peak_bound, envelope_support, envelope_value
from .quantum import (HamiltonianParams, build_hamiltonian, eigensystem,
                      eigvals3, initial_frame, nonadiabatic_coupling,
                      track_adiabatic)


class EmptyPathError(ValueError):
    """No contour exists at the requested level."""


@dataclass(frozen=True)
class Axis:
    name: str
    values: np.ndarray
    unit: str = "rad/ns"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError(f"axis {self.name} needs at least 2 points")
        if np.any(np.diff(v) <= 0.0):
            raise ValueError(f"axis {self.name} must be strictly increasing")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SweepGrid:
    """Gridded scalar results over one or two axes.

    ``values[name]`` has shape (len(axes[0]),) or
    (len(axes[0]), len(axes[1])) in row-major (first-axis-major) order.
    """

    axes: tuple[Axis, ...]
    values: dict[str, np.ndarray]
    meta: dict = None

    def value(self, name: str) -> np.ndarray:
        return self.values[name]


@dataclass(frozen=True)
class ParameterPath:
    """Polyline in the (Omega, stark) plane, optionally time-stamped."""

    points: np.ndarray                  # (n, 2) columns: omega, stark
    times: np.ndarray | None = None
    gap: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError("path points must have shape (n, 2)")
        object.__setattr__(self, "points", p)


# --- eigenvalue surfaces -----------------------------------------------------

def _resonant_hamiltonians(delta2, omega_values, stark_values):
    om = np.asarray(omega_values, dtype=float)[:, None]
    st = np.asarray(stark_values, dtype=float)[None, :]
    shape = (om.shape[0], st.shape[1])
    h = np.zeros(shape + (3, 3))
    h[..., 0, 1] = h[..., 1, 0] = 0.5 * np.broadcast_to(om, shape)
    h[..., 1, 2] = h[..., 2, 1] = 0.5 * np.broadcast_to(om, shape)
    h[..., 1, 1] = delta2
    h[..., 2, 2] = -np.broadcast_to(st, shape)
    return h


def eigen_surfaces(delta2: float, omega_values, stark_values,
                   normalize: bool = False) -> SweepGrid:
    """Value-sorted adiabatic energies over the (Omega, stark) plane.

    Assumes two-photon resonance.  With ``normalize`` the returned surfaces
    (and axes metadata) are in units of delta2.
    """
    lam = eigvals3(_resonant_hamiltonians(delta2, omega_values, stark_values))
    scale = delta2 if normalize else 1.0
    unit = "delta2" if normalize else "rad/ns"
    axes = (Axis("omega", np.asarray(omega_values) / scale, unit),
            Axis("stark", np.asarray(stark_values) / scale, unit))
    values = {"lambda_minus": lam[..., 0] / scale,
              "lambda_0": lam[..., 1] / scale,
              "lambda_plus": lam[..., 2] / scale}
    return SweepGrid(axes=axes, values=values,
                     meta={"delta2": delta2, "normalized": normalize})


def gap_surface(delta2: float, omega_values, stark_values,
                normalize: bool = False) -> SweepGrid:
    """Difference of the two lowest adiabatic energies on the same grid."""
    surf = eigen_surfaces(delta2, omega_values, stark_values, normalize)
    gap = surf.values["lambda_0"] - surf.values["lambda_minus"]
    return SweepGrid(axes=surf.axes, values={"gap": gap}, meta=surf.meta)


# --- marching-squares level line ----------------------------------------------

def _cell_segments(x, y, z, level):
    """Contour segments of one grid as a list of point pairs."""
    segs = []
    nx, ny = z.shape
    below = z < level
    for i in range(nx - 1):
        for j in range(ny - 1):
            idx = ((not below[i, j]) | (not below[i + 1, j]) << 1
                   | (not below[i + 1, j + 1]) << 2 | (not below[i, j + 1]) << 3)
            if idx in (0, 15):
                continue
            corners = {
                "s": ((x[i], y[j]), (x[i + 1], y[j]), z[i, j], z[i + 1, j]),
                "e": ((x[i + 1], y[j]), (x[i + 1], y[j + 1]), z[i + 1, j], z[i + 1, j + 1]),
                "n": ((x[i], y[j + 1]), (x[i + 1], y[j + 1]), z[i, j + 1], z[i + 1, j + 1]),
                "w": ((x[i], y[j]), (x[i], y[j + 1]), z[i, j], z[i, j + 1]),
            }

            def cross(edge):
                (xa, ya), (xb, yb), za, zb = corners[edge]
                t = 0.5 if zb == za else (level - za) / (zb - za)
                return (xa + t * (xb - xa), ya + t * (yb - ya))

            table = {
                1: [("w", "s")], 2: [("s", "e")], 3: [("w", "e")],
                4: [("e", "n")], 6: [("s", "n")], 7: [("w", "n")],
                8: [("n", "w")], 9: [("n", "s")], 11: [("n", "e")],
                12: [("e", "w")], 13: [("e", "s")], 14: [("s", "w")],
            }
            if idx in (5, 10):
                center = 0.25 * (z[i, j] + z[i + 1, j] + z[i, j + 1] + z[i + 1, j + 1])
                if idx == 5:
                    pairs = [("w", "n"), ("s", "e")] if center < level else \
                        [("w", "s"), ("e", "n")]
                else:
                    pairs = [("s", "w"), ("n", "e")] if center < level else \
                        [("s", "e"), ("n", "w")]
            else:
                pairs = table[idx]
            for ea, eb in pairs:
                segs.append((cross(ea), cross(eb)))
    return segs


def _chain_segments(segs, tol):
    """Join segments into polylines by matching endpoints within tol."""
    def key(p):
        return (round(p[0] / tol), round(p[1] / tol))

    by_endpoint: dict = {}
    for i, (a, b) in enumerate(segs):
        by_endpoint.setdefault(key(a), []).append(i)
        by_endpoint.setdefault(key(b), []).append(i)

    def take_neighbor(tip, used):
        for i in by_endpoint.get(key(tip), ()):
            if i in used:
                continue
            a, b = segs[i]
            used.add(i)
            return b if key(a) == key(tip) else a
        return None

    used = set()
    polylines = []
    for start in range(len(segs)):
        if start in used:
            continue
        used.add(start)
        chain = [segs[start][0], segs[start][1]]
        while (nxt := take_neighbor(chain[-1], used)) is not None:
            chain.append(nxt)
        while (nxt := take_neighbor(chain[0], used)) is not None:
            chain.insert(0, nxt)
        polylines.append(np.array(chain))
    return polylines


def level_line(surface: SweepGrid, level: float,
               anchor: tuple[float, float]) -> ParameterPath:
    """Extract the contour at ``level`` passing nearest the anchor point.

    Marching squares with linear edge interpolation; the polyline is
    oriented to start at its end nearest the anchor.  A constant surface
    equal to the level degenerates to the grid boundary; a level outside
    the surface range raises :class:`EmptyPathError`.
    """
    if len(surface.axes) != 2 or len(surface.values) != 1:
        raise ValueError("level_line expects a single-valued 2-D surface")
    (name_x, name_y) = (surface.axes[0].name, surface.axes[1].name)
    x = surface.axes[0].values
    y = surface.axes[1].values
    z = next(iter(surface.values.values()))
    scale = max(float(np.max(np.abs(z))), abs(level), 1e-300)
    if np.all(np.abs(z - level) <= 1e-12 * scale):
        boundary = np.array([[x[0], y[0]], [x[-1], y[0]], [x[-1], y[-1]],
                             [x[0], y[-1]], [x[0], y[0]]])
        return ParameterPath(points=boundary)
    if level > float(np.max(z)) or level < float(np.min(z)):
        raise EmptyPathError(f"no contour at level {level}: surface range "
                             f"[{np.min(z):.4g}, {np.max(z):.4g}]")
    segs = _cell_segments(x, y, z, level)
    if not segs:
        raise EmptyPathError(f"no contour found at level {level}")
    tol = 1e-9 * max(x[-1] - x[0], y[-1] - y[0])
    polylines = _chain_segments(segs, tol)
    anchor = np.asarray(anchor, dtype=float)

    def dist(poly):
        return float(np.min(np.linalg.norm(poly - anchor, axis=1)))

    best = min(polylines, key=dist)
    if np.linalg.norm(best[-1] - anchor) < np.linalg.norm(best[0] - anchor):
        best = best[::-1]
    return ParameterPath(points=np.ascontiguousarray(best))


# --- scenario path and adiabaticity score --------------------------------------

# Couplings below this fraction of the spectral scale are indistinguishable
# from eigenvector noise and are excluded from the score.
COUPLING_FLOOR_RTOL = 1e-8


def scenario_path(scenario: ScenarioConfig, n_samples: int = 801,
                  reference: ParameterPath | None = None):
    """Sampled (Omega(t), stark(t)) path of a SACS scenario and its
    adiabaticity score.

    The score is the maximum over time of the nonadiabatic coupling between
    the dark-following surface and its lower neighbour divided by the
    instantaneous gap.  It diverges when the path crosses a region where
    those surfaces are degenerate while the basis is still rotating
    (e.g. coincident pulses with no Stark shift).  With a ``reference``
    line the mean distance from the interior path points to that line is
    reported as well.

    Returns ``(path, score)`` or ``(path, score, distance)``.
    """
    if scenario.protocol != "sacs":
        raise ValueError("scenario_path expects a SACS-type scenario")
    grid = default_grid(scenario)
    ts = np.linspace(grid.start, grid.end, n_samples)
    om = envelope_value(scenario.drive1, ts)
    st = envelope_value(scenario.stark, ts)
    h = hamiltonian_series(scenario, ts)
    dt = ts[1] - ts[0]

    frame = initial_frame(h[0])
    score = 0.0
    gaps = np.empty(n_samples)
    gaps[0] = frame.energies[1] - frame.energies[0]
    scale = max(1.0, float(np.max(np.abs(frame.energies))))
    for k in range(1, n_samples):
        nxt = track_adiabatic(frame, eigensystem(h[k]))
        scale = max(scale, float(np.max(np.abs(nxt.energies))))
        coupling = nonadiabatic_coupling(frame, nxt, dt)[1, 0]
        gap = nxt.energies[1] - nxt.energies[0]
        gaps[k] = gap
        if coupling > COUPLING_FLOOR_RTOL * scale:
            score = max(score, coupling / gap if gap > 0.0 else math.inf)
        frame = nxt
    path = ParameterPath(points=np.column_stack([om, st]), times=ts, gap=gaps)
    if reference is None:
        return path, score
    interior = path.points[(om > 1e-9 * scale) | (st > 1e-9 * scale)]
    dists = [float(np.min(np.linalg.norm(reference.points - p, axis=1)))
             for p in interior]
    return path, score, float(np.mean(dists)) if dists else 0.0


# --- population sweeps ----------------------------------------------------------

def detuning_scan(base: ScenarioConfig, detuning_values,
                  dt: float | None = None) -> SweepGrid:
    """Final populations versus the two-photon detuning delta2 + delta3.

    ``base`` supplies the pulse sequence and delta2; each cell overrides
    delta3 = detuning - delta2 so the scanned quantity is the two-photon
    detuning itself.
    """
    if base.n_levels != 3:
        raise ValueError("detuning scan requires a three-level scenario")
    values = np.asarray(detuning_values, dtype=float)
    grid = default_grid(base, dt=dt)
    b = values.shape[0]

    def build(tm):
        om1 = envelope_value(base.drive1, tm)
        om2 = envelope_value(base.drive2, tm)
        st = envelope_value(base.stark, tm)
        h = np.zeros((b, tm.shape[0], 3, 3))
        h[..., 0, 1] = h[..., 1, 0] = 0.5 * om1[None, :]
        h[..., 1, 2] = h[..., 2, 1] = 0.5 * om2[None, :]
        h[..., 1, 1] = base.delta2
        h[..., 2, 2] = values[:, None] - st[None, :]
        return h

    psi0 = np.zeros((b, 3), dtype=complex)
    psi0[:, 0] = 1.0
    finals = evolve_final_states(build, grid, psi0)
    pops = np.abs(finals) ** 2
    axis = Axis("two_photon_detuning", values, "rad/ns")
    return SweepGrid(axes=(axis,),
                     values={"p1": pops[:, 0], "p2": pops[:, 1], "p3": pops[:, 2]},
                     meta={"delta2": base.delta2})


def contour_sweep(stokes_values, delay_values, stark_peak: float, *,
                  pump_peak: float, width: float = 1.0, delta2: float,
                  stark_offset: float = -1.5, dt: float | None = None,
                  ) -> tuple[SweepGrid, SweepGrid]:
    """Final P1 and P3 maps over Stokes peak amplitude and Stokes delay.

    Gaussian pulses: the pump is centered at t = 0, the Stokes pulse at the
    delay value, and the Stark pulse (when present) at delay +
    ``stark_offset`` widths so it precedes the driving pulses and lifts
    their end-point degeneracy.  Two-photon resonance is maintained.
    """
    sv = np.asarray(stokes_values, dtype=float)
    tv = np.asarray(delay_values, dtype=float)
    ss, tt = np.meshgrid(sv, tv, indexing="ij")
    cs = ss.ravel()[:, None]
    ct = tt.ravel()[:, None]
    b = cs.shape[0]

    centers = [0.0, float(tv.min()), float(tv.max())]
    if stark_peak > 0.0:
        centers += [float(tv.min()) + stark_offset * width,
                    float(tv.max()) + stark_offset * width]
    lo = min(centers) - 6.0 * width
    hi = max(centers) + 6.0 * width
    if dt is None:
        scale = (abs(delta2) + 0.5 * (pump_peak + float(sv.max())) + stark_peak)
        dt = 0.05 / scale
    grid = uniform_grid(lo, hi, dt)

    def build(tm):
        tt_ = tm[None, :]
        u1 = tt_ / width
        o1 = pump_peak * np.exp(-u1 * u1) * (np.abs(u1) <= 6.0)
        o1 = np.broadcast_to(o1, (b, tm.shape[0]))
        u2 = (tt_ - ct) / width
        o2 = cs * np.exp(-u2 * u2) * (np.abs(u2) <= 6.0)
        u3 = (tt_ - (ct + stark_offset * width)) / width
        st = stark_peak * np.exp(-u3 * u3) * (np.abs(u3) <= 6.0)
        st = np.broadcast_to(st, (b, tm.shape[0]))
        h = np.zeros((b, tm.shape[0], 3, 3))
        h[..., 0, 1] = h[..., 1, 0] = 0.5 * o1
        h[..., 1, 2] = h[..., 2, 1] = 0.5 * o2
        h[..., 1, 1] = delta2
        h[..., 2, 2] = -st
        return h

    psi0 = np.zeros((b, 3), dtype=complex)
    psi0[:, 0] = 1.0
    finals = evolve_final_states(build, grid, psi0)
    pops = (np.abs(finals) ** 2).reshape(sv.size, tv.size, 3)
    axes = (Axis("stokes_peak", sv, "rad/ns"), Axis("delay", tv, "ns"))
    meta = {"pump_peak": pump_peak, "stark_peak": stark_peak,
            "delta2": delta2, "width": width, "stark_offset": stark_offset}
    return (SweepGrid(axes=axes, values={"p1": pops[..., 0]}, meta=meta),
            SweepGrid(axes=axes, values={"p3": pops[..., 2]}, meta=meta))


def weight_control_scan(ratios, *, delta2: float, omega2_peak: float,
                        stark_peak: float, width: float = 1.0,
                        delay: float = 0.8, dt: float | None = None) -> SweepGrid:
    """Final weights versus the drive ratio Omega1/Omega2 at the pulse end.

    With equal shapes the dark state fixes |C3|^2 / |C1|^2 = (Omega1/Omega2)^2
    at the end of the sequence; this scan verifies that control handle.
    """
    rv = np.asarray(ratios, dtype=float)
    p1 = np.empty(rv.size)
    p3 = np.empty(rv.size)
    for i, r in enumerate(rv):
        scenario = make_sacs(delta2, omega_peaks=(r * omega2_peak, omega2_peak),
                             stark_peak=stark_peak, width=width, delay=delay,
                             weight_control=True)
        grid = default_grid(scenario, dt=dt)

        def build(tm, s=scenario):
            return hamiltonian_series(s, tm)[None, ...]

        final = evolve_final_states(build, grid, np.array([[1.0, 0, 0]], dtype=complex))
        p1[i], p3[i] = np.abs(final[0, 0]) ** 2, np.abs(final[0, 2]) ** 2
    axis = Axis("drive_ratio", rv, "dimensionless")
    law = rv**2 / (1.0 + rv**2)
    return SweepGrid(axes=(axis,),
                     values={"p1": p1, "p3": p3, "p3_dark_state_law": law},
                     meta={"delta2": delta2, "omega2_peak": omega2_peak})


# --- export ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return np.format_float_scientific(x, precision=11, unique=False)


def grid_to_csv(grid: SweepGrid, name: str, path) -> None:
    """Write one gridded value as CSV.

    1-D grids: axis column followed by the value column.  2-D grids: header
    row carries the second axis, the first column the first axis, values in
    row-major order.
    """
    z = grid.values[name]
    lines = []
    if len(grid.axes) == 1:
        lines.append(f"{grid.axes[0].name},{name}")
        for xv, zv in zip(grid.axes[0].values, z):
            lines.append(f"{_fmt(xv)},{_fmt(zv)}")
    else:
        ax0, ax1 = grid.axes
        lines.append(",".join([f"{ax0.name}\\{ax1.name}"]
                              + [_fmt(v) for v in ax1.values]))
        for i, xv in enumerate(ax0.values):
            lines.append(",".join([_fmt(xv)] + [_fmt(v) for v in z[i]]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def grid_metadata(grid: SweepGrid, scenario_hash: str | None = None) -> dict:
    meta = {
        "axes": [{"name": a.name, "unit": a.unit, "min": float(a.values[0]),
                  "max": float(a.values[-1]), "points": int(a.values.size)}
                 for a in grid.axes],
        "values": sorted(grid.values.keys()),
        "tool_version": _version,
    }
    if grid.meta:
        meta["parameters"] = {k: (float(v) if isinstance(v, (int, float)) else v)
                              for k, v in grid.meta.items()}
    if scenario_hash is not None:
        meta["scenario_sha256"] = scenario_hash
    return meta


def grid_to_json(grid: SweepGrid, path, scenario_hash: str | None = None) -> None:
    payload = grid_metadata(grid, scenario_hash)
    payload["data"] = {k: np.asarray(v).tolist() for k, v in grid.values.items()}
    payload["axis_values"] = [a.values.tolist() for a in grid.axes]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def path_to_csv(path_obj: ParameterPath, path) -> None:
    lines = ["omega,stark" + (",t" if path_obj.times is not None else "")
             + (",gap" if path_obj.gap is not None else "")]
    for i, (om, st) in enumerate(path_obj.points):
        row = [_fmt(om), _fmt(st)]
        if path_obj.times is not None:
            row.append(_fmt(path_obj.times[i]))
        if path_obj.gap is not None:
            row.append(_fmt(path_obj.gap[i]))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
