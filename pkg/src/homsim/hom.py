"""Analytic three-fold HOM coincidence curve for Gaussian signal and LO spectra.

Bandwidth convention
--------------------
``SIGMA_CONVENTION`` selects how a :class:`GaussianSpectrum` is turned into the
bandwidth entering the coincidence formula.  The default, ``"fwhm"``, uses the
intensity FWHM expressed in angular frequency.  With the 9.3 nm / 7.1 nm
spectra at 830 nm it predicts a 45.7 um dip, against about 108 um for the
standard-deviation reading.  The visibility depends only on the bandwidth
ratio and is the same under every convention.
"""

from dataclasses import dataclass
import math

import numpy as np

from .units import FWHM_PER_SIGMA, C, GaussianSpectrum, UM

SIGMA_CONVENTIONS = {
    "fwhm": 1.0,
    "std": 1.0 / FWHM_PER_SIGMA,
}
SIGMA_CONVENTION = "fwhm"


def spectral_bandwidth(spectrum: GaussianSpectrum, convention=SIGMA_CONVENTION):
    """Bandwidth in rad/s entering the coincidence formula."""
    return spectrum.fwhm_omega * SIGMA_CONVENTIONS[convention]


@dataclass(frozen=True)
class HomParams:
    sigma_s: float
    sigma_l: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.sigma_s > 0 and self.sigma_l > 0):
            raise ValueError("bandwidths must be positive")

    @classmethod
    def from_spectra(cls, signal, lo, convention=SIGMA_CONVENTION):
        return cls(
            spectral_bandwidth(signal, convention),
            spectral_bandwidth(lo, convention),
            signal.center_omega - lo.center_omega,
        )

    @property
    def ratio(self):
        return self.sigma_s / self.sigma_l


def dip_term(tau, p: HomParams):
    """The Gaussian term subtracted from 1/2; equals |overlap|^2 / 2."""
    ss, sl = p.sigma_s**2, p.sigma_l**2
    prefactor = p.sigma_s * p.sigma_l / (ss + sl)
    tau = np.asarray(tau, dtype=float)
    return prefactor * np.exp(-(ss * sl * tau**2 + 4.0 * p.delta**2) / (2.0 * (ss + sl)))


def coincidence_probability(tau, p: HomParams):
    """Three-fold coincidence probability P(tau) for pure Gaussian signal and LO modes."""
    return 0.5 - dip_term(tau, p)


def visibility(sigma_s, sigma_l):
    """V = 2x/(1 + x^2) with x = sigma_s/sigma_l (zero detuning)."""
    if not (sigma_s > 0 and sigma_l > 0):
        raise ValueError("bandwidths must be positive")
    x = sigma_s / sigma_l
    return 2.0 * x / (1.0 + x * x)


def expected_visibility_from_spectra(signal: GaussianSpectrum, lo: GaussianSpectrum):
    return visibility(spectral_bandwidth(signal), spectral_bandwidth(lo))


def dip_fwhm(p: HomParams):
    """Dip FWHM as ``(delay in s, path length in m)``; only defined at zero detuning."""
    if p.delta != 0:
        raise ValueError("dip width is only defined for zero centre-frequency detuning")
    width = FWHM_PER_SIGMA * math.hypot(p.sigma_s, p.sigma_l) / (p.sigma_s * p.sigma_l)
    return width, C * width


@dataclass(frozen=True)
class HomCurve:
    delays: np.ndarray
    probabilities: np.ndarray

    @property
    def path_um(self):
        return C * self.delays / UM


def hom_curve(p: HomParams, delays):
    delays = np.asarray(delays, dtype=float)
    if not np.all(np.isfinite(delays)):
        raise ValueError("delay samples must be finite")
    return HomCurve(delays, coincidence_probability(delays, p))
