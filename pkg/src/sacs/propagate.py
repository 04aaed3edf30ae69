"""Time-dependent Schrödinger integration i dC/dt = H(t) C.

Each step applies the exact exponential of the Hamiltonian sampled at the
interval midpoint.  The exponential is evaluated from the closed-form
eigenvalues through the Newton (divided-difference) interpolation of
exp(-i dt x) on the spectrum, which is exact for 2x2/3x3 Hermitian
matrices, remains stable through eigenvalue degeneracies, and is unitary
to machine precision.  The batched form evolves many scenarios on a shared
time grid at once (used by the sweep engine).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quantum import (AdiabaticFrame, eigensystem, eigvals3, initial_frame,
                      spectral_norm3, track_adiabatic)

# Default accuracy target: dt * max|eigenvalue| <= DT_TARGET.
DT_TARGET = 0.05
# Hard stability/accuracy bound for a single step.
DT_LIMIT = 0.5
# Relative envelope amplitude still considered "active" at the grid end.
END_ACTIVITY_THRESHOLD = 1e-12


class StepSizeError(ValueError):
    """dt * ||H|| exceeded the allowed bound for a single step."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform integration grid (ns); at least ten steps."""

    start: float
    end: float
    dt: float

    def __post_init__(self):
        if not (self.start < self.end):
            raise ValueError(f"start must precede end, got [{self.start}, {self.end}]")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if (self.end - self.start) / self.dt < 10.0 - 1e-9:
            raise ValueError("grid must contain at least 10 steps")

    @property
    def n_steps(self) -> int:
        return int(round((self.end - self.start) / self.dt))

    def times(self) -> np.ndarray:
        return self.start + self.dt * np.arange(self.n_steps + 1)

    def midpoints(self) -> np.ndarray:
        return self.start + self.dt * (np.arange(self.n_steps) + 0.5)


def uniform_grid(start: float, end: float, dt: float) -> TimeGrid:
    """Grid over [start, end] with dt rounded down so the span divides evenly."""
    n = max(10, int(math.ceil((end - start) / dt)))
    return TimeGrid(start, end, (end - start) / n)


def _eigvals2(h):
    tr = np.real(h[..., 0, 0] + h[..., 1, 1])
    det = np.real(h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0])
    disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
    return np.stack([0.5 * tr - disc, 0.5 * tr + disc], axis=-1)


def _dd1(a, b, dt):
    # First divided difference of exp(-i dt x): exact and stable for any gap.
    return -1j * dt * np.exp(-0.5j * dt * (a + b)) * np.sinc(dt * (a - b) / (2.0 * np.pi))


def step_propagators(h, dt: float) -> np.ndarray:
    """exp(-i dt H) for Hermitian 2x2/3x3 matrices, vectorized over leading axes."""
    h = np.asarray(h)
    dim = h.shape[-1]
    eye = np.eye(dim, dtype=complex)
    if dim == 2:
        lam = _eigvals2(h)
        a, b = lam[..., 0], lam[..., 1]
        fa = np.exp(-1j * dt * a)
        return (fa[..., None, None] * eye
                + _dd1(a, b, dt)[..., None, None] * (h - a[..., None, None] * eye))
    if dim != 3:
        raise ValueError(f"only 2x2 and 3x3 Hamiltonians are supported, got {dim}x{dim}")
    lam = eigvals3(h, refine=False)
    a, b, c = lam[..., 0], lam[..., 1], lam[..., 2]
    fa = np.exp(-1j * dt * a)
    d_ab = _dd1(a, b, dt)
    d_bc = _dd1(b, c, dt)
    span = c - a
    scale = np.maximum(np.maximum(np.abs(a), np.abs(c)), 1.0)
    merged = span < 1e-12 * scale
    span_safe = np.where(merged, 1.0, span)
    # Second divided difference; when all three eigenvalues coincide it
    # reduces to f''(b)/2.
    d2 = np.where(merged, -0.5 * dt * dt * np.exp(-1j * dt * b),
                  (d_bc - d_ab) / span_safe)
    ha = h - a[..., None, None] * eye
    hb = h - b[..., None, None] * eye
    return (fa[..., None, None] * eye + d_ab[..., None, None] * ha
            + d2[..., None, None] * (ha @ hb))


def step(state: np.ndarray, h_mid: np.ndarray, dt: float) -> np.ndarray:
    """Advance a state by the exact exponential of the midpoint Hamiltonian.

    Raises :class:`StepSizeError` when dt * ||H|| >= 0.5 (midpoint sampling
    is no longer a faithful surrogate for the time-ordered evolution).
    """
    h_mid = np.asarray(h_mid)
    if h_mid.shape[-1] == 3:
        norm = float(spectral_norm3(h_mid))
    else:
        norm = float(np.max(np.abs(_eigvals2(h_mid))))
    if dt * norm >= DT_LIMIT:
        raise StepSizeError(
            f"dt*||H|| = {dt * norm:.3g} exceeds the stability bound {DT_LIMIT}")
    return step_propagators(h_mid, dt) @ np.asarray(state, dtype=complex)


def reduce_ordered_product(u: np.ndarray) -> np.ndarray:
    """Time-ordered product U[..., m-1] @ ... @ U[..., 0] by pairwise folding."""
    while u.shape[-3] > 1:
        if u.shape[-3] % 2 == 1:
            tail = np.matmul(u[..., -1, :, :], u[..., -2, :, :])
            u = np.concatenate([u[..., :-2, :, :], tail[..., None, :, :]], axis=-3)
            if u.shape[-3] == 1:
                break
        u = np.matmul(u[..., 1::2, :, :], u[..., 0::2, :, :])
    return u[..., 0, :, :]


def evolve_final_states(h_builder, grid: TimeGrid, psi0, chunk: int = 512) -> np.ndarray:
    """Final states of a batch of scenarios sharing one time grid.

    ``h_builder(t_mid)`` must return Hamiltonians of shape (B, m, d, d) for
    midpoint times ``t_mid`` of shape (m,).  Only final states are kept;
    per-chunk propagators are folded into a single matrix before being
    applied, so the cost is dominated by the eigenvalue evaluation.
    """
    mids = grid.midpoints()
    n = mids.shape[0]
    psi = np.array(psi0, dtype=complex)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        h = h_builder(mids[done:done + m])
        u = reduce_ordered_product(step_propagators(h, grid.dt))
        psi = np.einsum("...ij,...j->...i", u, psi)
        done += m
    return psi


@dataclass
class Trajectory:
    """Sampled time evolution of one scenario.

    ``states[k]`` is the statevector at ``times[k]``; ``energies`` and
    ``overlaps`` hold the continuity-ordered adiabatic eigenvalues and the
    populations |<Phi_k|Psi>|^2 in that basis (present when tracking was
    requested).  ``warnings`` collects non-fatal diagnostics such as
    envelopes still active at the grid end.
    """

    times: np.ndarray
    states: np.ndarray
    populations: np.ndarray
    energies: np.ndarray | None = None
    overlaps: np.ndarray | None = None
    warnings: tuple[str, ...] = ()
    n_levels: int = 3
    scenario: object = None
    degenerate_frames: bool = False

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.populations.sum(axis=1) - 1.0)))

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def propagate(scenario, grid: TimeGrid | None = None, *, dt: float | None = None,
              store_every: int | None = None, track: bool = True) -> Trajectory:
    """Integrate one scenario over its grid.

    The default grid covers all envelope supports (plus readout for
    half-SCRAP scenarios) with dt chosen so dt * max||H(t)|| <= 0.05.
    ``store_every`` subsamples the stored trajectory (the integration step
    is unaffected); by default at most ~8000 samples are kept.
    """
    from .protocols import default_grid, hamiltonian_series  # cycle-free at runtime

    if grid is None:
        grid = default_grid(scenario, dt=dt)
    n = grid.n_steps
    if store_every is None:
        store_every = max(1, int(math.ceil(n / 8000)))

    psi0 = scenario_initial_state(scenario)
    dim = psi0.shape[0]
    h_mid = hamiltonian_series(scenario, grid.midpoints())
    norm_max = float(np.max(spectral_norm3(h_mid))) if dim == 3 else \
        float(np.max(np.abs(_eigvals2(h_mid))))
    if grid.dt * norm_max >= DT_LIMIT:
        raise StepSizeError(
            f"dt*max||H|| = {grid.dt * norm_max:.3g} exceeds {DT_LIMIT}; "
            "refine the grid")
    u = step_propagators(h_mid, grid.dt)

    keep = list(range(0, n + 1, store_every))
    if keep[-1] != n:
        keep.append(n)
    keep_mask = np.zeros(n + 1, dtype=bool)
    keep_mask[keep] = True

    states = np.empty((len(keep), dim), dtype=complex)
    psi = psi0.copy()
    idx = 0
    if keep_mask[0]:
        states[idx] = psi
        idx += 1
    for k in range(n):
        psi = u[k] @ psi
        if keep_mask[k + 1]:
            states[idx] = psi
            idx += 1

    times = grid.times()[keep_mask]
    pops = np.abs(states) ** 2

    warnings = tuple(scenario.build_warnings) if getattr(scenario, "build_warnings", None) else ()
    warnings += _end_activity_warnings(scenario, grid.end)

    energies = overlaps = None
    degenerate = False
    if track:
        energies, overlaps, degenerate = _attach_adiabatic(scenario, times, states)

    return Trajectory(times=times, states=states, populations=pops,
                      energies=energies, overlaps=overlaps, warnings=warnings,
                      n_levels=dim, scenario=scenario, degenerate_frames=degenerate)


def scenario_initial_state(scenario) -> np.ndarray:
    dim = getattr(scenario, "n_levels", 3)
    init = getattr(scenario, "initial_state", None)
    if init is None:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        return psi
    psi = np.asarray(init, dtype=complex)
    if psi.shape != (dim,):
        raise ValueError(f"initial state must have {dim} components")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"initial state norm {norm:.3g} is not 1")
    return psi / norm


def _end_activity_warnings(scenario, t_end: float) -> tuple[str, ...]:
    from .pulses import envelope_peak_bound, envelope_value

    out = []
    for name in ("drive1", "drive2", "stark"):
        env = getattr(scenario, name, None)
        if env is None:
            continue
        peak = envelope_peak_bound(env)
        if peak <= 0.0 or any(p.shape == "constant" for p in env):
            continue
        value = float(envelope_value(env, t_end))
        if value > END_ACTIVITY_THRESHOLD * peak:
            out.append(f"envelope {name} still active at the grid end "
                       f"({value:.3e} rad/ns)")
    return tuple(out)


def _attach_adiabatic(scenario, times, states):
    from .protocols import hamiltonian_series

    h = hamiltonian_series(scenario, times)
    dim = states.shape[1]
    n = times.shape[0]
    energies = np.empty((n, dim))
    overlaps = np.empty((n, dim))
    frame = initial_frame(h[0])
    degenerate = frame.degenerate
    energies[0] = frame.energies
    overlaps[0] = np.abs(frame.vectors.conj().T @ states[0]) ** 2
    for k in range(1, n):
        frame = track_adiabatic(frame, eigensystem(h[k]))
        degenerate = degenerate or frame.degenerate
        energies[k] = frame.energies
        overlaps[k] = np.abs(frame.vectors.conj().T @ states[k]) ** 2
    return energies, overlaps, degenerate


def final_populations(traj: Trajectory):
    """Populations at the last sample, with the end-activity warnings."""
    if traj.times.shape[0] == 0:
        raise ValueError("empty trajectory")
    return tuple(traj.populations[-1]), traj.warnings


# --- trajectory export -------------------------------------------------------

def _fmt(x: float) -> str:
    return np.format_float_scientific(x, precision=11, unique=False)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write the trajectory as CSV with 12 significant digits.

    Three-level columns: t, Re/Im of C1..C3, populations, the three
    continuity-ordered adiabatic energies and the adiabatic-basis overlaps.
    Two-level trajectories use the reduced column set (levels labelled 1
    and 3, matching the states they represent).
    """
    cols_state = []
    if traj.n_levels == 3:
        labels = ("1", "2", "3")
        lam = ("lambda_minus", "lambda_0", "lambda_plus")
        ovl = ("overlap_minus", "overlap_0", "overlap_plus")
    else:
        labels = ("1", "3")
        lam = ("lambda_minus", "lambda_plus")
        ovl = ("overlap_minus", "overlap_plus")
    for s in labels:
        cols_state += [f"re_c{s}", f"im_c{s}"]
    header = ["t"] + cols_state + [f"p{s}" for s in labels]
    has_adiabatic = traj.energies is not None
    if has_adiabatic:
        header += list(lam) + list(ovl)

    lines = [",".join(header)]
    for k in range(traj.times.shape[0]):
        row = [_fmt(traj.times[k])]
        for j in range(traj.n_levels):
            row += [_fmt(traj.states[k, j].real), _fmt(traj.states[k, j].imag)]
        row += [_fmt(v) for v in traj.populations[k]]
        if has_adiabatic:
            row += [_fmt(v) for v in traj.energies[k]]
            row += [_fmt(v) for v in traj.overlaps[k]]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
