"""Physical constants and unit conversions.

Internal convention throughout the package: angular frequencies in rad/ns,
times in ns.  Laboratory units (W/cm^2, nm, Einstein A coefficients in s^-1,
dipole moments in C*m) are converted here and in :mod:`sacs.atomdata` only.
"""

import math

# CODATA 2018
SPEED_OF_LIGHT = 299792458.0          # m/s (exact)
HBAR = 1.05457181765e-34              # J*s
EPSILON_0 = 8.85418781280e-12         # F/m

RAD_PER_S_TO_RAD_PER_NS = 1e-9
W_CM2_TO_W_M2 = 1e4


def angular_frequency(wavelength_nm: float) -> float:
    """Angular frequency 2*pi*c/lambda of a transition or laser, in rad/s."""
    if wavelength_nm <= 0.0:
        raise ValueError(f"wavelength must be positive, got {wavelength_nm} nm")
    return 2.0 * math.pi * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


def field_amplitude(intensity_w_cm2: float) -> float:
    """Peak electric field amplitude E0 (V/m) for intensity I = eps0*c*E0^2/2."""
    if intensity_w_cm2 < 0.0:
        raise ValueError(f"intensity must be nonnegative, got {intensity_w_cm2}")
    return math.sqrt(2.0 * intensity_w_cm2 * W_CM2_TO_W_M2
                     / (EPSILON_0 * SPEED_OF_LIGHT))
