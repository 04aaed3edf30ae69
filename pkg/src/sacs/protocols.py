"""Scenario builders and final-state analysis for the superposition protocols.

Four protocols are covered:

* SACS: simultaneous equal driving pulses delayed after a Stark pulse,
  two-photon resonant.  The statevector rides the dark-state surface into
  (psi1 - e^{-i beta} psi3)/sqrt(2).
* STIRAP: counterintuitive Stokes-before-pump ordering, complete transfer.
* F-STIRAP: both pulses vanish with a fixed late-time ratio tan(alpha),
  freezing the dark state at mixing angle alpha.
* half-SCRAP: an effective two-level model for the two-photon 1 <-> 3
  transition, with the Stark pulse sweeping the effective detuning and
  readout at the point of maximum coherence.

Builders return a :class:`ScenarioConfig`; :func:`hamiltonian_series` maps
a scenario onto Hamiltonians for the integrator, and :func:`analyze_final`
condenses a trajectory into superposition weights and the relative phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .pulses import (Envelope, PulseEnvelope, ZERO_ENVELOPE, as_envelope,
                     envelope_peak_bound, envelope_support, envelope_value,
                     gaussian_pulse, sin2_pulse)
from .quantum import spectral_norm3
from .propagate import (DT_TARGET, TimeGrid, Trajectory, _eigvals2,
                        uniform_grid)

PROTOCOLS = ("sacs", "stirap", "fstirap", "half_scrap", "custom")

# Residual intermediate-state population above which a final state is
# flagged as a non-adiabatic outcome.
NONADIABATIC_RESIDUAL = 0.05
# Weights below this are too small for a meaningful relative phase.
PHASE_WEIGHT_FLOOR = 1e-6
# SACS drive envelopes may differ by at most this relative amount unless
# weight-control mode is enabled (intensity-derived peaks are near-equal,
# not exactly equal).
SACS_PEAK_RTOL = 0.05


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation.

    ``drive1``/``drive2`` are the Rabi-frequency envelopes of fields 1 and 2
    (for the two-level half-SCRAP model ``drive1`` is the effective
    two-photon Rabi frequency and ``drive2`` is unused).  ``beta`` is the
    relative phase of field 2.  Angular frequencies in rad/ns, times in ns.
    """

    protocol: str
    drive1: Envelope
    drive2: Envelope
    stark: Envelope
    delta2: float
    delta3: float
    beta: float = 0.0
    initial_state: tuple[complex, ...] | None = None
    weight_control: bool = False
    mixing_alpha: float | None = None
    delta_static: float = 0.0
    pump_shift_coeff: float = 0.1
    readout_time: float | None = None
    n_levels: int = 3
    build_warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.n_levels not in (2, 3):
            raise ValueError("n_levels must be 2 or 3")
        for name in ("delta2", "delta3", "beta", "delta_static", "pump_shift_coeff"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.protocol in ("stirap", "fstirap") and self.n_levels == 3:
            if abs(self.delta2 + self.delta3) > 1e-9 * max(1.0, abs(self.delta2)):
                raise ValueError(
                    "STIRAP/F-STIRAP require two-photon resonance "
                    f"(delta2 + delta3 = {self.delta2 + self.delta3:.3g})")


def hamiltonian_series(scenario: ScenarioConfig, t) -> np.ndarray:
    """Hamiltonians H(t) for an array of times, shape t.shape + (d, d)."""
    t = np.asarray(t, dtype=float)
    om1 = envelope_value(scenario.drive1, t)
    if scenario.n_levels == 2:
        om1 = np.broadcast_to(om1, t.shape)
        st = np.broadcast_to(envelope_value(scenario.stark, t), t.shape)
        h = np.zeros(t.shape + (2, 2))
        h[..., 0, 1] = h[..., 1, 0] = 0.5 * om1
        h[..., 1, 1] = (scenario.delta_static - st
                        - scenario.pump_shift_coeff * om1)
        return h
    om2 = envelope_value(scenario.drive2, t)
    st = envelope_value(scenario.stark, t)
    shape = np.broadcast(om1, om2, st, t).shape
    dtype = complex if scenario.beta != 0.0 else float
    h = np.zeros(shape + (3, 3), dtype=dtype)
    h[..., 0, 1] = h[..., 1, 0] = 0.5 * np.broadcast_to(om1, shape)
    c23 = 0.5 * np.broadcast_to(om2, shape)
    if scenario.beta != 0.0:
        h[..., 1, 2] = c23 * np.exp(1j * scenario.beta)
        h[..., 2, 1] = np.conj(h[..., 1, 2])
    else:
        h[..., 1, 2] = h[..., 2, 1] = c23
    h[..., 1, 1] = scenario.delta2
    h[..., 2, 2] = scenario.delta2 + scenario.delta3 - np.broadcast_to(st, shape)
    return h


def default_grid(scenario: ScenarioConfig, dt: float | None = None,
                 margin: float = 0.05) -> TimeGrid:
    """Grid covering every envelope support (and the readout time).

    When ``dt`` is omitted it is set from dt * max||H(t)|| <= 0.05, with
    the spectral norm sampled coarsely over the span.
    """
    bounds = [envelope_support(env) for env in
              (scenario.drive1, scenario.drive2, scenario.stark)]
    lo = min(b[0] for b in bounds if b != (0.0, 0.0))
    hi = max(b[1] for b in bounds if b != (0.0, 0.0))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("cannot derive a grid from unbounded envelopes; "
                         "pass an explicit TimeGrid")
    if scenario.readout_time is not None:
        hi = scenario.readout_time
    else:
        hi = hi + margin
        lo = lo - margin if lo < 0.0 else lo
    if dt is None:
        sample = np.linspace(lo, hi, 512)
        h = hamiltonian_series(scenario, sample)
        if scenario.n_levels == 3:
            norm = float(np.max(spectral_norm3(h)))
        else:
            norm = float(np.max(np.abs(_eigvals2(h))))
        dt = DT_TARGET / max(norm, 1e-6)
    return uniform_grid(lo, hi, dt)


# --- builders ----------------------------------------------------------------

def sacs_optimal_peaks(delta2: float) -> tuple[float, float]:
    """Peak amplitudes (Omega_max, stark_max) that minimize nonadiabatic
    losses for a given one-photon detuning: 2.6*delta2 and 1.5*delta2."""
    return 2.6 * delta2, 1.5 * delta2


def make_sacs(delta2: float, *, omega_peak: float | None = None,
              omega_peaks: tuple[float, float] | None = None,
              stark_peak: float, width: float, delay: float,
              stark_width: float | None = None, shape: str = "sin2",
              beta: float = 0.0, weight_control: bool = False,
              two_photon_detuning: float = 0.0) -> ScenarioConfig:
    """Stark-assisted coherent superposition scenario.

    The Stark pulse starts at t = 0; both driving envelopes share one shape
    and are delayed by ``delay``.  Drive peaks may be given as a common
    ``omega_peak`` or as per-field ``omega_peaks``; unequal peaks are
    accepted within 5% (or with ``weight_control`` enabled, which turns the
    end ratio Omega1/Omega2 into a superposition-weight control).
    """
    if (omega_peak is None) == (omega_peaks is None):
        raise ValueError("provide exactly one of omega_peak or omega_peaks")
    if omega_peaks is None:
        omega_peaks = (omega_peak, omega_peak)
    pk1, pk2 = omega_peaks
    if not weight_control:
        if max(pk1, pk2) > 0 and abs(pk1 - pk2) > SACS_PEAK_RTOL * max(pk1, pk2):
            raise ValueError(
                f"SACS drive peaks {pk1:.4g} and {pk2:.4g} rad/ns differ by more "
                f"than {SACS_PEAK_RTOL:.0%}; enable weight_control to allow this")
    stark_width = width if stark_width is None else stark_width
    if shape == "sin2":
        stark_env = sin2_pulse(stark_peak, stark_width, 0.0)
        d1 = sin2_pulse(pk1, width, delay)
        d2 = sin2_pulse(pk2, width, delay)
    elif shape == "gaussian":
        stark_env = gaussian_pulse(stark_peak, stark_width, 0.0)
        d1 = gaussian_pulse(pk1, width, delay)
        d2 = gaussian_pulse(pk2, width, delay)
    else:
        raise ValueError(f"unsupported SACS pulse shape {shape!r}")
    warnings = ()
    s_lo, s_hi = envelope_support(stark_env)
    if stark_peak > 0.0 and not (s_lo <= delay <= s_hi):
        warnings += (f"drive delay {delay} ns lies outside the Stark support "
                     f"[{s_lo:.3g}, {s_hi:.3g}] ns; the path leaves the "
                     "dark-state surface",)
    return ScenarioConfig(protocol="sacs", drive1=d1, drive2=d2,
                          stark=stark_env, delta2=delta2,
                          delta3=two_photon_detuning - delta2, beta=beta,
                          weight_control=weight_control,
                          build_warnings=warnings)


def make_stirap(delta2: float, *, peak: float, width: float,
                separation: float = 1.2, fractional: float | None = None,
                early_pulse_offset: float = 1.6, beta: float = 0.0
                ) -> ScenarioConfig:
    """STIRAP, or F-STIRAP when a fractional mixing angle is given.

    Plain STIRAP uses Gaussian Stokes/pump pulses of equal width centered
    at -separation/2 and +separation/2 (Stokes first).  For F-STIRAP the
    pulses must vanish with a fixed ratio Omega_pump/Omega_stokes =
    tan(fractional): the Stokes field is built as cos(alpha) * A(t) plus an
    early pulse at -early_pulse_offset * width, the pump as sin(alpha) * A(t),
    so the late-time ratio is exact by construction.
    """
    if fractional is None:
        stokes = gaussian_pulse(peak, width, -0.5 * separation)
        pump = gaussian_pulse(peak, width, +0.5 * separation)
        return ScenarioConfig(protocol="stirap", drive1=pump, drive2=stokes,
                              stark=ZERO_ENVELOPE, delta2=delta2,
                              delta3=-delta2, beta=beta)
    alpha = float(fractional)
    if not (0.0 < alpha < 0.5 * math.pi):
        raise ValueError(f"mixing angle must lie in (0, pi/2), got {alpha}")
    early = PulseEnvelope("gaussian", peak, width, -early_pulse_offset * width)
    stokes = (PulseEnvelope("gaussian", peak * math.cos(alpha), width, 0.0), early)
    pump = (PulseEnvelope("gaussian", peak * math.sin(alpha), width, 0.0),)
    return ScenarioConfig(protocol="fstirap", drive1=pump, drive2=stokes,
                          stark=ZERO_ENVELOPE, delta2=delta2, delta3=-delta2,
                          beta=beta, mixing_alpha=alpha)


def half_scrap_detuning(scenario: ScenarioConfig, t) -> np.ndarray:
    """Effective two-photon detuning delta_static - stark(t) - shift(t)."""
    om = envelope_value(scenario.drive1, t)
    st = envelope_value(scenario.stark, t)
    return scenario.delta_static - st - scenario.pump_shift_coeff * om


def solve_half_scrap_readout(scenario: ScenarioConfig,
                             ratio: float = 0.0) -> float:
    """Latest time where Delta_eff(t) = ratio * Omega_eff(t).

    Scanned over the pulse span on a fine grid and refined by bisection;
    used to end half-SCRAP scenarios at the maximum-coherence point
    (ratio 0) or at a chosen mixing angle.
    """
    lo = envelope_support(scenario.stark)[0]
    hi = max(envelope_support(scenario.drive1)[1],
             envelope_support(scenario.stark)[1])
    ts = np.linspace(lo, hi, 40001)
    g = half_scrap_detuning(scenario, ts) - ratio * envelope_value(scenario.drive1, ts)
    idx = np.where((g[:-1] <= 0.0) & (g[1:] > 0.0))[0]
    if idx.size == 0:
        raise ValueError("no readout crossing found: the Stark pulse never "
                         "sweeps the effective detuning through the target")
    a, b = ts[idx[-1]], ts[idx[-1] + 1]
    for _ in range(60):
        m = 0.5 * (a + b)
        gm = float(half_scrap_detuning(scenario, m)
                   - ratio * envelope_value(scenario.drive1, m))
        if gm <= 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def make_half_scrap(*, omega_eff_peak: float, stark_peak: float,
                    delta_static: float, pump_width: float = 2.5,
                    stark_width: float = 2.0, pump_delay: float = 0.3,
                    pump_shift_coeff: float = 0.1,
                    readout: float | str = "auto",
                    readout_ratio: float = 0.0) -> ScenarioConfig:
    """Two-level half-SCRAP scenario.

    The Stark pulse (sine-squared, starting at t = 0) precedes the pump
    pulse; the effective detuning delta_static - stark(t) - c * Omega_eff(t)
    is swept through zero and the scenario ends at the readout time, by
    default the late crossing Delta_eff = 0 where the mixing angle reaches
    pi/4 and the coherence is maximal.  A warning is attached when the
    end-of-interaction condition Omega_eff(t_f) > |Delta_eff(t_f)| fails.
    """
    pump = sin2_pulse(omega_eff_peak, pump_width, pump_delay)
    stark = sin2_pulse(stark_peak, stark_width, 0.0)
    scenario = ScenarioConfig(protocol="half_scrap", drive1=pump,
                              drive2=ZERO_ENVELOPE, stark=stark,
                              delta2=0.0, delta3=0.0,
                              delta_static=delta_static,
                              pump_shift_coeff=pump_shift_coeff, n_levels=2)
    if readout == "auto":
        t_f = solve_half_scrap_readout(scenario, ratio=readout_ratio)
    else:
        t_f = float(readout)
    om_f = float(envelope_value(scenario.drive1, t_f))
    det_f = float(half_scrap_detuning(scenario, t_f))
    warnings = ()
    if om_f <= abs(det_f):
        warnings = ((f"half-SCRAP readout violates Omega_eff > |Delta_eff| "
                     f"({om_f:.3g} <= {abs(det_f):.3g} rad/ns); the frozen "
                     "mixing angle is far from pi/4"),)
    return replace(scenario, readout_time=t_f, build_warnings=warnings)


def half_scrap_mixing_angle(scenario: ScenarioConfig, t: float) -> float:
    """Mixing angle theta(t) with tan(2 theta) = Omega_eff / Delta_eff,
    branch 2*theta = atan2(Omega_eff, Delta_eff) in [0, pi)."""
    om = float(envelope_value(scenario.drive1, t))
    det = float(half_scrap_detuning(scenario, t))
    return 0.5 * math.atan2(om, det)


# --- final-state analysis ------------------------------------------------------

@dataclass(frozen=True)
class SuperpositionReport:
    """Weights and relative phase of the prepared 1-3 superposition.

    ``relative_phase`` is arg(C3/C1) in the rotating frame of the field
    carriers; the physical superposition additionally carries the bookkept
    factor exp(-i (omega1 + omega2) t), which is never sampled.  NaN with a
    "phase-undefined" flag when either weight is negligible.
    """

    weight_1: float
    weight_3: float
    residual_p2: float
    relative_phase: float
    time_integrated_p2: float
    flags: tuple[str, ...] = ()


def analyze_final(traj: Trajectory) -> SuperpositionReport:
    """Condense a trajectory into a superposition report.

    Weights are read at the last sample.  A residual intermediate-state
    population above 5% is flagged as a non-adiabatic outcome; envelope
    still active at the end propagates as a flag from the trajectory.
    """
    psi = traj.final_state()
    if traj.n_levels == 2:
        w1, w3 = float(np.abs(psi[0]) ** 2), float(np.abs(psi[1]) ** 2)
        p2 = 0.0
        integ = 0.0
        c1, c3 = psi[0], psi[1]
    else:
        w1, w3 = float(np.abs(psi[0]) ** 2), float(np.abs(psi[2]) ** 2)
        p2 = float(np.abs(psi[1]) ** 2)
        integ = float(np.trapz(traj.populations[:, 1], traj.times))
        c1, c3 = psi[0], psi[2]
    flags = tuple(traj.warnings)
    if p2 > NONADIABATIC_RESIDUAL:
        flags += (f"non-adiabatic outcome: residual P2 = {p2:.3g}",)
    if min(w1, w3) < PHASE_WEIGHT_FLOOR:
        flags += ("phase-undefined",)
        phase = math.nan
    else:
        phase = float(np.angle(c3 / c1))
    return SuperpositionReport(weight_1=w1, weight_3=w3, residual_p2=p2,
                               relative_phase=phase, time_integrated_p2=integ,
                               flags=flags)


# --- four-wave-mixing source term ---------------------------------------------

@dataclass(frozen=True)
class FwmContext:
    """Mixing field and far-detuned state for the coherence source term.

    ``omega3`` is the Rabi-frequency envelope of the mixing field, and
    ``delta4`` the detuning of the far state; the adiabatic elimination
    behind the source term requires |delta4| >= 10x the peak of omega3.
    ``dipole_scale`` collects the dipole/field prefactor (and may carry the
    number-density factor for an extended medium, which enters linearly).
    """

    omega3: Envelope
    delta4: float
    dipole_scale: float = 1.0
    density: float = 1.0

    def __post_init__(self):
        peak = envelope_peak_bound(self.omega3)
        if abs(self.delta4) < 10.0 * peak:
            raise ValueError(
                f"|delta4| = {abs(self.delta4):.3g} rad/ns must be at least "
                f"10x the mixing-field peak {peak:.3g} rad/ns for adiabatic "
                "elimination")


@dataclass(frozen=True)
class FwmSource:
    """Time series of the adiabatically eliminated amplitude and source term."""

    times: np.ndarray
    c4: np.ndarray
    source: np.ndarray


def fwm_source(traj: Trajectory, ctx: FwmContext) -> FwmSource:
    """Coherence source term P4(t) = scale * C3*(t) C1(t) Omega3(t) / (2 delta4).

    The far-state amplitude follows the adiabatic-elimination formula
    C4 = Omega3 C3 / (2 delta4) (the generated-field term is dropped while
    that field is still weak).  |P4| peaks at maximum coherence
    |C1| = |C3| = 1/sqrt(2) and is invariant under a global phase of the
    trajectory.
    """
    if traj.n_levels != 3:
        raise ValueError("four-wave-mixing source requires a three-level trajectory")
    om3 = envelope_value(ctx.omega3, traj.times)
    c1 = traj.states[:, 0]
    c3 = traj.states[:, 2]
    c4 = om3 / (2.0 * ctx.delta4) * c3
    source = (ctx.density * ctx.dipole_scale * np.conj(c3) * c1 * om3
              / (2.0 * ctx.delta4))
    return FwmSource(times=traj.times, c4=c4, source=source)
