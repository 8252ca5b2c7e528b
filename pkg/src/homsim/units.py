"""Spectral and temporal unit conversions.

Everything inside the package works in SI (metres, seconds, rad/s).  Nanometres
and micrometres only appear at the edges (config files, CSV columns, reports).
"""

from dataclasses import dataclass
import math

import numpy as np

#: vacuum speed of light (m/s), CODATA exact value
C = 2.99792458e8

NM = 1e-9
UM = 1e-6

#: FWHM = FWHM_PER_SIGMA * standard deviation, for a Gaussian
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def _check_positive(name, value):
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"{name} must be positive, got {value!r}")


def wavelength_to_angular_frequency(wavelength):
    """Vacuum wavelength (m) to angular frequency (rad/s), ``2*pi*c/lambda``."""
    _check_positive("wavelength", wavelength)
    return 2.0 * np.pi * C / wavelength


def angular_frequency_to_wavelength(omega):
    """Angular frequency (rad/s) to vacuum wavelength (m)."""
    _check_positive("angular frequency", omega)
    return 2.0 * np.pi * C / omega


def fwhm_wavelength_to_fwhm_angfreq(center_wavelength, fwhm_wavelength):
    """First-order conversion of a spectral width from wavelength to rad/s.

    ``d_omega = 2*pi*c*d_lambda / lambda0**2``.  The linearisation is refused
    once the width reaches the centre wavelength.
    """
    _check_positive("center wavelength", center_wavelength)
    if np.any(np.asarray(fwhm_wavelength) < 0):
        raise ValueError("spectral width must be non-negative")
    if np.any(np.asarray(fwhm_wavelength) >= np.asarray(center_wavelength)):
        raise ValueError(
            "spectral width must be much smaller than the centre wavelength "
            f"(got {fwhm_wavelength!r} vs {center_wavelength!r})"
        )
    return 2.0 * np.pi * C * fwhm_wavelength / center_wavelength**2


def fwhm_angfreq_to_fwhm_wavelength(center_wavelength, fwhm_omega):
    """Inverse of :func:`fwhm_wavelength_to_fwhm_angfreq`."""
    _check_positive("center wavelength", center_wavelength)
    return fwhm_omega * center_wavelength**2 / (2.0 * np.pi * C)


def delay_to_path_length(delay):
    """Time delay (s) to optical path length (m); sign is kept."""
    return C * delay


def path_length_to_delay(path_length):
    return path_length / C


@dataclass(frozen=True)
class GaussianSpectrum:
    """Gaussian spectrum given by centre wavelength and intensity FWHM, both in nm."""

    center_nm: float
    fwhm_nm: float

    def __post_init__(self):
        if not self.center_nm > 0:
            raise ValueError(f"center wavelength must be positive, got {self.center_nm}")
        if not self.fwhm_nm > 0:
            raise ValueError(f"FWHM must be positive, got {self.fwhm_nm}")
        if not self.fwhm_nm < self.center_nm:
            raise ValueError("FWHM must be smaller than the centre wavelength")

    @property
    def center_omega(self):
        return wavelength_to_angular_frequency(self.center_nm * NM)

    @property
    def fwhm_omega(self):
        """Intensity FWHM in rad/s."""
        return fwhm_wavelength_to_fwhm_angfreq(self.center_nm * NM, self.fwhm_nm * NM)

    @property
    def sigma_omega(self):
        """Standard deviation of the intensity spectrum in rad/s."""
        return self.fwhm_omega / FWHM_PER_SIGMA
