"""Physical constants and unit conversions.

Internal unit conventions:
    time        -> femtoseconds (fs), except inside the SFA integral (atomic units)
    length      -> micrometers (um)
    frequency   -> rad/fs
    field       -> atomic units of electric field
"""

import numpy as np

# Speed of light
C_UM_FS = 0.299792458       # um / fs
C_NM_FS = 299.792458        # nm / fs

# Atomic units
AU_TIME_FS = 0.02418884326586  # one atomic unit of time, in fs
HARTREE_EV = 27.211386245988

# I [W/cm^2] = INTENSITY_AU * E0^2, with E0 the linear field amplitude in a.u.
INTENSITY_AU_W_CM2 = 3.50944758e16

# Argon ionization potential
ARGON_IP_EV = 15.7596


def omega_from_wavelength(wavelength_nm):
    """Angular frequency in rad/fs for a vacuum wavelength in nm."""
    return 2.0 * np.pi * C_NM_FS / wavelength_nm


def field_amplitude_au(intensity_w_cm2):
    """Peak field amplitude in atomic units from a peak intensity in W/cm^2."""
    return np.sqrt(intensity_w_cm2 / INTENSITY_AU_W_CM2)
