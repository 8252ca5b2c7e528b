"""Joint spectral amplitude f(ws, wi) = phi(ws, wi) * alpha(ws + wi) on a frequency grid."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .crystal import group_index, phase_mismatch
from .units import C, FWHM_PER_SIGMA, GaussianSpectrum, angular_frequency_to_wavelength

#: x at which sinc(x)**2 = 1/2
SINC2_HALF_WIDTH = 1.391557377
MIN_POINTS_PER_FWHM = 8


class ResolutionError(ValueError):
    pass


class GridTooNarrowError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform signal and idler angular-frequency axes (rad/s)."""

    signal: np.ndarray
    idler: np.ndarray

    def __post_init__(self):
        for name, axis in (("signal", self.signal), ("idler", self.idler)):
            axis = np.asarray(axis, dtype=float)
            if axis.ndim != 1 or axis.size < 2:
                raise ValueError(f"{name} axis needs at least 2 points")
            steps = np.diff(axis)
            if np.any(steps <= 0):
                raise ValueError(f"{name} axis must be strictly increasing")
            if np.max(np.abs(steps - steps.mean())) > 1e-12 * np.max(np.abs(axis)):
                raise ValueError(f"{name} axis must be uniformly spaced")
            object.__setattr__(self, name, axis)

    @classmethod
    def centered(cls, signal_center, idler_center, signal_halfspan, idler_halfspan, n_signal, n_idler=None):
        n_idler = n_signal if n_idler is None else n_idler
        return cls(
            signal_center + np.linspace(-signal_halfspan, signal_halfspan, n_signal),
            idler_center + np.linspace(-idler_halfspan, idler_halfspan, n_idler),
        )

    @property
    def d_signal(self):
        return (self.signal[-1] - self.signal[0]) / (self.signal.size - 1)

    @property
    def d_idler(self):
        return (self.idler[-1] - self.idler[0]) / (self.idler.size - 1)

    @property
    def shape(self):
        return (self.signal.size, self.idler.size)

    def mesh(self):
        return np.meshgrid(self.signal, self.idler, indexing="ij")


@dataclass
class JsaMatrix:
    """Complex amplitudes on ``grid``; rows follow the signal axis, columns the idler."""

    grid: FrequencyGrid
    amplitudes: np.ndarray
    normalized: bool = False
    alpha: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None

    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.d_signal * self.grid.d_idler)


def pump_envelope(omega_s, omega_i, pump: GaussianSpectrum):
    """Gaussian pump amplitude alpha(ws + wi), peak 1 at the pump centre.

    ``pump.fwhm_nm`` is the intensity FWHM, so the amplitude carries
    ``exp(-d**2 / (4 sigma**2))`` with sigma the intensity standard deviation.
    """
    detuning = np.asarray(omega_s) + np.asarray(omega_i) - pump.center_omega
    return np.exp(-(detuning**2) / (4.0 * pump.sigma_omega**2))


def phase_matching_function(omega_s, omega_i, crystal):
    """sinc(dk L / 2) * exp(i dk L / 2) for the eoe interaction."""
    half = phase_mismatch(omega_s, omega_i, crystal) * crystal.length / 2.0
    # np.sinc is the normalised sinc, sin(pi x)/(pi x)
    return np.sinc(half / np.pi) * np.exp(1j * half)


def estimate_marginal_fwhm(pump: GaussianSpectrum, crystal):
    """Rough signal/idler marginal FWHMs (rad/s) from a linearised Gaussian model.

    Linearises dk around degeneracy with the group indices and replaces sinc^2
    by the Gaussian of equal FWHM.  Used only to lay out default grids.
    """
    wp = pump.center_omega
    th, m = crystal.cut_angle_deg, crystal.material
    kp = group_index(wp, "e", th, m) / C
    a = kp - group_index(wp / 2, "o", th, m) / C
    b = kp - group_index(wp / 2, "e", th, m) / C
    prec = np.ones((2, 2)) / pump.sigma_omega**2
    s_equiv = SINC2_HALF_WIDTH / (FWHM_PER_SIGMA / 2.0)
    prec = prec + (crystal.length / 2.0 / s_equiv) ** 2 * np.outer([a, b], [a, b])
    if abs(np.linalg.det(prec)) <= 1e-12 * np.max(np.abs(prec)) ** 2:
        raise ValueError("joint spectrum is unbounded along one direction; give explicit grid spans")
    cov = np.linalg.inv(prec)
    return FWHM_PER_SIGMA * np.sqrt(cov[0, 0]), FWHM_PER_SIGMA * np.sqrt(cov[1, 1])


def default_grid(pump: GaussianSpectrum, crystal, n_points=256, span_fwhm=4.0):
    """Square grid centred on degeneracy spanning +/- ``span_fwhm`` marginal FWHMs."""
    fw_s, fw_i = estimate_marginal_fwhm(pump, crystal)
    center = pump.center_omega / 2.0
    return FrequencyGrid.centered(center, center, span_fwhm * fw_s, span_fwhm * fw_i, n_points)


def _fwhm(axis, values):
    """Interpolated full width at half maximum, or None if it is not bracketed."""
    peak = np.argmax(values)
    half = values[peak] / 2.0
    if values[peak] <= 0:
        return None
    above = np.nonzero(values >= half)[0]
    left, right = above[0], above[-1]
    if left == 0 or right == values.size - 1:
        return None

    def cross(i0, i1):
        y0, y1 = values[i0], values[i1]
        return axis[i0] + (half - y0) * (axis[i1] - axis[i0]) / (y1 - y0)

    return cross(left - 1, left), cross(right, right + 1)


def build_jsa(grid: FrequencyGrid, pump: GaussianSpectrum, crystal):
    """Evaluate f = phi * alpha on ``grid`` and L2-normalise it.

    Raises :class:`ResolutionError` when the idler marginal FWHM spans fewer
    than 8 grid points.
    """
    ws, wi = grid.mesh()
    alpha = pump_envelope(ws, wi, pump)
    phi = phase_matching_function(ws, wi, crystal)
    f = alpha * phi
    norm = np.sqrt(np.sum(np.abs(f) ** 2) * grid.d_signal * grid.d_idler)
    if not norm > 0:
        raise ValueError("joint spectral amplitude vanishes on the grid")
    jsa = JsaMatrix(grid, f / norm, normalized=True, alpha=alpha, phi=phi)

    idler_marginal = np.sum(np.abs(jsa.amplitudes) ** 2, axis=0)
    crossing = _fwhm(grid.idler, idler_marginal)
    if crossing is not None:
        points = (crossing[1] - crossing[0]) / grid.d_idler
        if points < MIN_POINTS_PER_FWHM:
            raise ResolutionError(
                f"idler marginal FWHM covers only {points:.1f} grid points "
                f"(need {MIN_POINTS_PER_FWHM}); refine the idler axis"
            )
    return jsa


@dataclass(frozen=True)
class MarginalSpectra:
    signal: np.ndarray
    idler: np.ndarray
    signal_fwhm_omega: float
    idler_fwhm_omega: float
    signal_fwhm_nm: float
    idler_fwhm_nm: float


def marginal_spectra(jsa: JsaMatrix):
    """Signal and idler intensity marginals (unit area in rad/s) with their FWHMs."""
    if not jsa.normalized:
        raise ValueError("marginal_spectra expects a normalised JsaMatrix")
    grid = jsa.grid
    intensity = np.abs(jsa.amplitudes) ** 2
    signal = intensity.sum(axis=1) * grid.d_idler
    idler = intensity.sum(axis=0) * grid.d_signal
    widths = []
    for name, axis, marg in (("signal", grid.signal, signal), ("idler", grid.idler, idler)):
        crossing = _fwhm(axis, marg)
        if crossing is None:
            raise GridTooNarrowError(f"{name} marginal does not fall below half maximum inside the grid")
        lam = angular_frequency_to_wavelength(np.array(crossing))
        widths.append((crossing[1] - crossing[0], abs(lam[0] - lam[1]) / 1e-9))
    return MarginalSpectra(signal, idler, widths[0][0], widths[1][0], widths[0][1], widths[1][1])


PANELS = {
    "alpha": ("|alpha|^2", lambda j: np.abs(j.alpha) ** 2),
    "phi": ("|phi|^2", lambda j: np.abs(j.phi) ** 2),
    "jsa": ("|f|^2", lambda j: np.abs(j.amplitudes) ** 2),
}


def write_density(path, grid, values, comments=()):
    """One density panel: rows follow the signal axis, columns the idler axis.

    Layout: ``#`` comment lines, two header rows with the idler axis in rad/s
    and nm, then one row per signal frequency
    ``signal_rad_s, signal_nm, v_0 ... v_{Ni-1}``.
    """
    path = Path(path)
    lam_s = angular_frequency_to_wavelength(grid.signal) / 1e-9
    lam_i = angular_frequency_to_wavelength(grid.idler) / 1e-9
    try:
        with path.open("w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["idler_rad_s", ""] + [repr(float(v)) for v in grid.idler])
            writer.writerow(["idler_nm", ""] + [repr(float(v)) for v in lam_i])
            for k in range(grid.signal.size):
                writer.writerow([repr(float(grid.signal[k])), repr(float(lam_s[k]))]
                                + [repr(float(v)) for v in values[k]])
    except OSError as exc:
        raise OSError(f"cannot write density file {path}: {exc}") from exc
    return path


def read_density(path):
    """Inverse of :func:`write_density`; returns ``(signal_rad_s, idler_rad_s, values)``."""
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    idler = np.array([float(v) for v in rows[0][2:]])
    body = rows[2:]
    signal = np.array([float(r[0]) for r in body])
    values = np.array([[float(v) for v in r[2:]] for r in body])
    return signal, idler, values


def export_density(jsa: JsaMatrix, directory, comments=()):
    """Write the alpha, phi and jsa density panels as CSV files into ``directory``."""
    if jsa.alpha is None or jsa.phi is None:
        raise ValueError("JsaMatrix carries no pump/phase-matching panels; build it with build_jsa")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for panel, (label, getter) in PANELS.items():
        lines = [f"panel={panel} quantity={label}", *comments]
        paths[panel] = write_density(directory / f"{panel}.csv", jsa.grid, getter(jsa), lines)
    return paths


def build_separable_jsa(grid: FrequencyGrid, signal: GaussianSpectrum, idler: GaussianSpectrum):
    """Exactly factorable amplitude g_s(ws) * g_i(wi) from two Gaussian spectra."""
    ws, wi = grid.mesh()
    gs = np.exp(-((ws - signal.center_omega) ** 2) / (4.0 * signal.sigma_omega**2))
    gi = np.exp(-((wi - idler.center_omega) ** 2) / (4.0 * idler.sigma_omega**2))
    f = (gs * gi).astype(complex)
    f /= np.sqrt(np.sum(np.abs(f) ** 2) * grid.d_signal * grid.d_idler)
    return JsaMatrix(grid, f, normalized=True)


def separable_grid(signal: GaussianSpectrum, idler: GaussianSpectrum, n_points=256, span_fwhm=4.0):
    return FrequencyGrid.centered(
        signal.center_omega, idler.center_omega,
        span_fwhm * signal.fwhm_omega, span_fwhm * idler.fwhm_omega, n_points,
    )
