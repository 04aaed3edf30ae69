"""Pulse envelopes for the driving and Stark-shifting fields.

Two pulse families are used by the protocols: sine-squared pulses, which
vanish identically outside a finite support and therefore give exact
field-free regions, and Gaussian pulses, truncated at six widths where
they fall below 1e-15 of the peak.  Composite envelopes (e.g. the
fractional-STIRAP Stokes pulse) are represented as tuples of primitives
that are summed at evaluation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPES = ("sin2", "gaussian", "constant", "zero")

# Gaussians are treated as exactly zero beyond this many widths from the
# center; the neglected tail is below 1e-15 of the peak.
GAUSSIAN_CUTOFF = 6.0


@dataclass(frozen=True)
class PulseEnvelope:
    """One pulse primitive.

    Parameters
    ----------
    shape : str
        "sin2"     peak * sin((t - delay)/width)^2 on [delay, pi*width + delay]
        "gaussian" peak * exp(-((t - delay)/width)^2), truncated at 6 widths
        "constant" peak everywhere (analytic test aid)
        "zero"     0 everywhere
    peak : float
        Peak value in rad/ns.
    width : float
        Width parameter T in ns (support of a sin2 pulse is pi*T).
    delay : float
        For "sin2" the support start; for "gaussian" the center, in ns.
    """

    shape: str
    peak: float = 0.0
    width: float = 1.0
    delay: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown envelope shape {self.shape!r}")
        if self.shape not in ("zero", "constant") and self.width <= 0.0:
            raise ValueError(f"envelope width must be positive, got {self.width}")
        if self.peak < 0.0:
            raise ValueError(f"envelope peak must be nonnegative, got {self.peak}")
        for name in ("peak", "width", "delay"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"envelope {name} must be finite")

    def value(self, t):
        """Envelope value at time(s) t (ns), vectorized."""
        t = np.asarray(t, dtype=float)
        if self.shape == "zero" or self.peak == 0.0:
            return np.zeros_like(t)
        if self.shape == "constant":
            return np.full_like(t, self.peak)
        u = (t - self.delay) / self.width
        if self.shape == "sin2":
            inside = (u >= 0.0) & (u <= np.pi)
            return np.where(inside, self.peak * np.sin(np.where(inside, u, 0.0)) ** 2, 0.0)
        inside = np.abs(u) <= GAUSSIAN_CUTOFF
        return np.where(inside, self.peak * np.exp(-np.where(inside, u, 0.0) ** 2), 0.0)

    def support(self) -> tuple[float, float]:
        """Interval outside which the envelope is exactly zero."""
        if self.shape == "zero" or self.peak == 0.0:
            return (0.0, 0.0)
        if self.shape == "constant":
            return (-math.inf, math.inf)
        if self.shape == "sin2":
            return (self.delay, self.delay + math.pi * self.width)
        half = GAUSSIAN_CUTOFF * self.width
        return (self.delay - half, self.delay + half)


Envelope = tuple[PulseEnvelope, ...]


def as_envelope(arg) -> Envelope:
    """Normalize a primitive or an iterable of primitives to a tuple."""
    if isinstance(arg, PulseEnvelope):
        return (arg,)
    parts = tuple(arg)
    for p in parts:
        if not isinstance(p, PulseEnvelope):
            raise TypeError(f"not a PulseEnvelope: {p!r}")
    return parts


def envelope_value(env: Envelope, t):
    """Summed value of a composite envelope at time(s) t."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for part in env:
        total = total + part.value(t)
    return total


def envelope_peak_bound(env: Envelope) -> float:
    """Upper bound on the composite peak (sum of primitive peaks)."""
    return sum(p.peak for p in env)


def envelope_support(env: Envelope) -> tuple[float, float]:
    """Hull of the primitive supports (ignoring zero-amplitude parts)."""
    lo, hi = [], []
    for p in env:
        if p.peak == 0.0 or p.shape == "zero":
            continue
        a, b = p.support()
        lo.append(a)
        hi.append(b)
    if not lo:
        return (0.0, 0.0)
    return (min(lo), max(hi))


ZERO_ENVELOPE: Envelope = (PulseEnvelope("zero"),)


def sin2_pulse(peak: float, width: float, delay: float = 0.0) -> Envelope:
    return (PulseEnvelope("sin2", peak, width, delay),)


def gaussian_pulse(peak: float, width: float, center: float = 0.0) -> Envelope:
    return (PulseEnvelope("gaussian", peak, width, center),)
