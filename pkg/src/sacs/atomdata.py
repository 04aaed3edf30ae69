"""Mercury spectroscopy and conversions from laboratory to internal units.

The bundled table lists the eight dipole transitions connecting the ladder
states 6^1S_0 (state 1), 6^3P_1 (state 2) and 7^1S_0 (state 3) to the
intermediate ^1P_1 levels.  From it this module derives

* peak Rabi frequencies from laser intensities (Omega = d E / hbar),
* the dynamic Stark shift of 7^1S_0 induced by a nonresonant field,
* the effective two-photon Rabi frequency for direct 1 <-> 3 coupling,
* Einstein-A / dipole-moment consistency checks.

Stark and two-photon sums use the near-resonant (rotating-wave) denominator
(E_upper - E_lower)/hbar - omega_laser per intermediate state; counter-
rotating terms are dropped.  The Stark shift is returned as a positive
magnitude; its sign convention lives in the Hamiltonian (state 3 is pulled
down by ``stark``).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .constants import (EPSILON_0, HBAR, RAD_PER_S_TO_RAD_PER_NS,
                        SPEED_OF_LIGHT, angular_frequency, field_amplitude)


class PhysicsError(ValueError):
    """A physically invalid configuration (e.g. resonant Stark denominator)."""


class DataFileError(ValueError):
    """The transition data file is missing, malformed, or corrupted."""


GROUND_STATE = "61S0"
LADDER_STATES = ("61S0", "63P1", "71S0")
# Minimum allowed |denominator| in the perturbative sums, as a fraction of
# the smallest contributing transition frequency.
RESONANCE_GUARD = 1e-3

_BUNDLED_SHA256 = "b76837e45972bdff597600ffb1113bd17c594d3c9c22be555b8dba2e787290de"


@dataclass(frozen=True)
class TransitionRecord:
    """One dipole transition; SI units internally.

    ``einstein_a`` in s^-1 and ``dipole`` in C*m (the data file carries the
    conventional 1e8 s^-1 and 1e-30 C*m column units).
    """

    upper: str
    lower: str
    wavelength_nm: float
    einstein_a: float
    dipole: float

    def __post_init__(self):
        if self.wavelength_nm <= 0 or self.einstein_a <= 0 or self.dipole <= 0:
            raise ValueError("wavelength, Einstein A and dipole must be positive")

    @property
    def label(self) -> str:
        return f"{self.upper}-{self.lower}"

    def angular_frequency(self) -> float:
        """Transition angular frequency in rad/s."""
        return angular_frequency(self.wavelength_nm)


def _bundled_path() -> Path:
    return Path(resources.files("sacs").joinpath("data/hg_transitions.txt"))


def load_transition_table(path: str | Path | None = None,
                          verify_checksum: bool | None = None
                          ) -> tuple[TransitionRecord, ...]:
    """Parse the transition table.

    With no ``path`` the bundled mercury file is used and its SHA-256 is
    verified; for user-supplied files the checksum is skipped unless
    requested, so deliberately modified tables can still be validated row
    by row with :func:`validate_table`.
    """
    if path is None:
        path = _bundled_path()
        if verify_checksum is None:
            verify_checksum = True
    path = Path(path)
    if not path.is_file():
        raise DataFileError(f"transition data file not found: {path}")
    raw = path.read_bytes()
    if verify_checksum:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != _BUNDLED_SHA256:
            raise DataFileError(
                f"transition data checksum mismatch for {path}: {digest}")
    records = []
    for ln, line in enumerate(raw.decode().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise DataFileError(f"{path}:{ln}: expected 5 columns, got {len(parts)}")
        upper, lower = parts[0], parts[1]
        try:
            lam, a8, d30 = (float(x) for x in parts[2:])
        except ValueError as exc:
            raise DataFileError(f"{path}:{ln}: bad number ({exc})") from None
        records.append(TransitionRecord(upper, lower, lam, a8 * 1e8, d30 * 1e-30))
    if not records:
        raise DataFileError(f"{path}: no transition rows found")
    return tuple(records)


def find_transition(records, upper: str, lower: str) -> TransitionRecord:
    for r in records:
        if r.upper == upper and r.lower == lower:
            return r
    raise DataFileError(f"transition {upper}-{lower} not in table")


def level_energies(records) -> dict[str, float]:
    """Level energies E/hbar in rad/s above the ground state.

    Built by walking transitions from the ground state; raises if the table
    does not connect every named level.
    """
    energies = {GROUND_STATE: 0.0}
    pending = list(records)
    while pending:
        progress = False
        for r in list(pending):
            w = r.angular_frequency()
            if r.lower in energies and r.upper not in energies:
                energies[r.upper] = energies[r.lower] + w
                pending.remove(r)
                progress = True
            elif r.upper in energies and r.lower not in energies:
                energies[r.lower] = energies[r.upper] - w
                pending.remove(r)
                progress = True
            elif r.upper in energies and r.lower in energies:
                pending.remove(r)
                progress = True
        if not progress:
            missing = sorted({r.upper for r in pending} | {r.lower for r in pending}
                             - set(energies))
            raise DataFileError(f"levels not connected to ground state: {missing}")
    return energies


# --- Einstein relation -----------------------------------------------------

def dipole_from_einstein(record: TransitionRecord) -> float:
    """Dipole moment (C*m) implied by the Einstein A coefficient.

    A = omega^3 d^2 / (3 pi eps0 hbar c^3).
    """
    w = record.angular_frequency()
    return math.sqrt(record.einstein_a * 3.0 * math.pi * EPSILON_0 * HBAR
                     * SPEED_OF_LIGHT**3 / w**3)


@dataclass(frozen=True)
class RowCheck:
    transition: str
    wavelength_nm: float
    dipole_table: float
    dipole_from_a: float
    dipole_deviation: float   # |d_A - d_table| / d_table
    einstein_deviation: float  # |A_d - A_table| / A_table
    ok: bool


def validate_table(records, tolerance: float = 0.02) -> list[RowCheck]:
    """Per-row consistency between the tabulated dipole and Einstein A."""
    out = []
    for r in records:
        d_a = dipole_from_einstein(r)
        ddev = abs(d_a - r.dipole) / r.dipole
        # A scales as d^2, so report the quadratic deviation as well
        adev = abs((r.dipole / d_a) ** 2 - 1.0)
        out.append(RowCheck(r.label, r.wavelength_nm, r.dipole, d_a,
                            ddev, adev, ddev <= tolerance))
    return out


# --- intensity conversions ---------------------------------------------------

def rabi_from_intensity(transition: TransitionRecord,
                        intensity_w_cm2: float) -> float:
    """Peak Rabi frequency Omega = d E0 / hbar in rad/ns."""
    if intensity_w_cm2 < 0.0:
        raise ValueError(f"intensity must be nonnegative, got {intensity_w_cm2}")
    e0 = field_amplitude(intensity_w_cm2)
    return transition.dipole * e0 / HBAR * RAD_PER_S_TO_RAD_PER_NS


@dataclass(frozen=True)
class StarkContext:
    """Inputs of the dynamic Stark shift of one level.

    ``contributions`` lists the dipole transitions from the shifted state to
    the nonresonant intermediate states included in the perturbative sum.
    """

    shifted_state: str
    wavelength_nm: float
    contributions: tuple[TransitionRecord, ...]
    energies: dict[str, float]

    def __post_init__(self):
        if not self.contributions:
            raise ValueError("at least one contributing transition is required")
        for r in self.contributions:
            if self.shifted_state not in (r.upper, r.lower):
                raise ValueError(f"{r.label} does not involve {self.shifted_state}")


def mercury_stark_context(records=None, wavelength_nm: float = 1064.0,
                          shifted_state: str = "71S0",
                          partners: tuple[str, ...] = ("61P1", "71P1"),
                          ) -> StarkContext:
    """Stark context for the mercury target state (7^1S_0 by default).

    The default partners are the two ^1P_1 levels that dominate the shift at
    1064 nm; the remaining levels contribute well below a percent.
    """
    if records is None:
        records = load_transition_table()
    contributions = []
    for p in partners:
        try:
            contributions.append(find_transition(records, p, shifted_state))
        except DataFileError:
            contributions.append(find_transition(records, shifted_state, p))
    return StarkContext(shifted_state, wavelength_nm, tuple(contributions),
                        level_energies(records))


def _partner(record: TransitionRecord, state: str) -> str:
    return record.lower if record.upper == state else record.upper


def stark_shift_from_intensity(ctx: StarkContext,
                               intensity_w_cm2: float) -> float:
    """Magnitude of the dynamic Stark shift of the context state, rad/ns.

    Delta_S = (E0^2 / 4 hbar^2) * sum_j d_j^2 / ((E_s - E_j)/hbar - omega),
    i.e. the rotating-wave light shift summed over intermediate states j.
    Raises :class:`PhysicsError` if any denominator falls inside the
    resonance guard band.
    """
    if intensity_w_cm2 < 0.0:
        raise ValueError(f"intensity must be nonnegative, got {intensity_w_cm2}")
    w_laser = angular_frequency(ctx.wavelength_nm)
    e_s = ctx.energies[ctx.shifted_state]
    guard = RESONANCE_GUARD * min(r.angular_frequency() for r in ctx.contributions)
    total = 0.0
    for r in ctx.contributions:
        e_j = ctx.energies[_partner(r, ctx.shifted_state)]
        denom = (e_s - e_j) - w_laser
        if abs(denom) < guard:
            raise PhysicsError(
                f"Stark field at {ctx.wavelength_nm} nm is resonant with "
                f"{r.label} (denominator {denom:.3e} rad/s)")
        total += r.dipole**2 / denom
    e0 = field_amplitude(intensity_w_cm2)
    shift = e0**2 / (4.0 * HBAR**2) * total
    return abs(shift) * RAD_PER_S_TO_RAD_PER_NS


def effective_two_photon_rabi(records, pump_wavelength_nm: float,
                              intensity_w_cm2: float,
                              lower: str = "61S0", upper: str = "71S0",
                              intermediates: tuple[str, ...] = (
                                  "63P1", "61P1", "71P1", "91P1"),
                              ) -> float:
    """Effective two-photon Rabi frequency for the direct 1 <-> 3 coupling.

    Omega_eff = (E0^2 / 2 hbar^2) * sum_j d_1j d_j3 / ((E_j - E_1)/hbar - omega_p)
    in rad/ns, with the sum over the listed intermediate states.
    """
    if intensity_w_cm2 < 0.0:
        raise ValueError(f"intensity must be nonnegative, got {intensity_w_cm2}")
    energies = level_energies(records)
    w_p = angular_frequency(pump_wavelength_nm)
    total = 0.0
    guard = None
    pairs = []
    for j in intermediates:
        try:
            leg1 = find_transition(records, j, lower)
        except DataFileError:
            leg1 = find_transition(records, lower, j)
        try:
            leg2 = find_transition(records, j, upper)
        except DataFileError:
            leg2 = find_transition(records, upper, j)
        pairs.append((j, leg1, leg2))
        w_min = min(leg1.angular_frequency(), leg2.angular_frequency())
        guard = w_min if guard is None else min(guard, w_min)
    guard *= RESONANCE_GUARD
    for j, leg1, leg2 in pairs:
        denom = (energies[j] - energies[lower]) - w_p
        if abs(denom) < guard:
            raise PhysicsError(
                f"pump at {pump_wavelength_nm} nm is resonant with the "
                f"{lower}-{j} leg (denominator {denom:.3e} rad/s)")
        total += leg1.dipole * leg2.dipole / denom
    e0 = field_amplitude(intensity_w_cm2)
    return abs(e0**2 / (2.0 * HBAR**2) * total) * RAD_PER_S_TO_RAD_PER_NS
