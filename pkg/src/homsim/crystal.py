"""Birefringent dispersion and type-II (eoe) phase matching in uniaxial crystals.

Wavelengths are in metres, angles in degrees, frequencies in rad/s.  The
interaction is fixed to pump (e), signal (o), idler (e).
"""

from configparser import ConfigParser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .units import C, NM, wavelength_to_angular_frequency


class RangeError(ValueError):
    """A wavelength fell outside the dispersion formula's validity range."""


class PhaseMatchingError(RuntimeError):
    """No root of the requested phase- or group-velocity-matching condition."""


FORMS = ("zernike", "sellmeier")


def _zernike(coeffs, l2):
    return coeffs["A"] + coeffs["B"] / (l2 - coeffs["C"]) + coeffs["D"] * l2 / (l2 - coeffs["E"])


def _sellmeier(coeffs, l2):
    # n^2 = 1 + sum_k Bk L^2 / (L^2 - Ck)
    n2 = 1.0
    k = 1
    while f"B{k}" in coeffs:
        n2 = n2 + coeffs[f"B{k}"] * l2 / (l2 - coeffs[f"C{k}"])
        k += 1
    return n2


@dataclass(frozen=True)
class SellmeierSet:
    """Dispersion data for a uniaxial crystal (ordinary + principal extraordinary index)."""

    name: str
    ordinary: dict
    extraordinary: dict
    range_um: tuple
    citation: str = ""
    form: str = "zernike"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown dispersion form {self.form!r}; expected one of {FORMS}")
        lo, hi = self.range_um
        if not 0 < lo < hi:
            raise ValueError(f"invalid wavelength range {self.range_um!r}")

    def check_range(self, wavelength):
        lam_um = np.asarray(wavelength) / 1e-6
        lo, hi = self.range_um
        if np.any(lam_um < lo) or np.any(lam_um > hi) or not np.all(np.isfinite(lam_um)):
            raise RangeError(
                f"wavelength outside the valid range {lo}-{hi} um of {self.name} "
                f"(got {np.min(lam_um):.6g}-{np.max(lam_um):.6g} um)"
            )
        return lam_um

    def _index(self, coeffs, wavelength):
        lam_um = self.check_range(wavelength)
        l2 = lam_um * lam_um
        n2 = _zernike(coeffs, l2) if self.form == "zernike" else _sellmeier(coeffs, l2)
        return np.sqrt(n2)

    def n_o(self, wavelength):
        return self._index(self.ordinary, wavelength)

    def n_e_principal(self, wavelength):
        return self._index(self.extraordinary, wavelength)


def load_material(path):
    """Read a material file (INI: ``[material]``, ``[ordinary]``, ``[extraordinary]``)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"material file not found: {path}")
    parser = ConfigParser()
    parser.optionxform = str  # coefficient names are case sensitive
    parser.read(path)
    return _material_from_parser(parser, str(path))


def _material_from_parser(parser, source):
    try:
        meta = parser["material"]
        lo, hi = (float(v) for v in meta["range_um"].split(","))
        return SellmeierSet(
            name=meta.get("name", source),
            citation=meta.get("citation", ""),
            form=meta.get("form", "zernike"),
            range_um=(lo, hi),
            ordinary={k: float(v) for k, v in parser["ordinary"].items()},
            extraordinary={k: float(v) for k, v in parser["extraordinary"].items()},
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed material file {source}: {exc}") from exc


def default_material():
    """KDP after Zernike (1964), the package's built-in dispersion data."""
    text = resources.files("homsim.data").joinpath("kdp_zernike.ini").read_text()
    parser = ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    return _material_from_parser(parser, "kdp_zernike.ini")


@dataclass(frozen=True)
class CrystalConfig:
    material: SellmeierSet
    length_mm: float
    cut_angle_deg: float

    def __post_init__(self):
        if not self.length_mm > 0:
            raise ValueError(f"crystal length must be positive, got {self.length_mm}")
        if not 0 < self.cut_angle_deg < 90:
            raise ValueError(f"cut angle must lie in (0, 90) degrees, got {self.cut_angle_deg}")

    @property
    def length(self):
        """Crystal length in metres."""
        return self.length_mm * 1e-3


def index_ordinary(wavelength, material):
    return material.n_o(wavelength)


def index_extraordinary(wavelength, theta_deg, material):
    """Extraordinary index at propagation angle ``theta_deg`` from the optic axis.

    Index ellipse: ``1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2``.
    """
    if np.any(np.asarray(theta_deg) < 0) or np.any(np.asarray(theta_deg) > 90):
        raise ValueError(f"angle must lie in [0, 90] degrees, got {theta_deg!r}")
    no = material.n_o(wavelength)
    ne = material.n_e_principal(wavelength)
    if np.ndim(theta_deg) == 0 and theta_deg == 0:
        return no
    if np.ndim(theta_deg) == 0 and theta_deg == 90:
        return ne
    th = np.radians(theta_deg)
    return 1.0 / np.sqrt(np.cos(th) ** 2 / no**2 + np.sin(th) ** 2 / ne**2)


def refractive_index(omega, polarization, theta_deg, material):
    wavelength = 2.0 * np.pi * C / np.asarray(omega, dtype=float)
    if polarization == "o":
        return material.n_o(wavelength)
    if polarization == "e":
        return index_extraordinary(wavelength, theta_deg, material)
    raise ValueError(f"polarization must be 'o' or 'e', got {polarization!r}")


def wavenumber(omega, polarization, theta_deg, material):
    """k = n(omega) * omega / c in rad/m; ``theta_deg`` is ignored for 'o'."""
    return refractive_index(omega, polarization, theta_deg, material) * omega / C


def group_index(omega, polarization, theta_deg, material, rel_step=1e-6):
    """Group index ``n + omega * dn/domega`` by central finite difference.

    The derivative is taken with step ``rel_step * omega``; the neighbourhood
    must stay inside the material's valid range.
    """
    omega = np.asarray(omega, dtype=float)
    h = rel_step * omega
    n = refractive_index(omega, polarization, theta_deg, material)
    n_plus = refractive_index(omega + h, polarization, theta_deg, material)
    n_minus = refractive_index(omega - h, polarization, theta_deg, material)
    return n + omega * (n_plus - n_minus) / (2.0 * h)


def phase_mismatch(omega_s, omega_i, config):
    """eoe phase mismatch ``k_e(ws + wi) - k_o(ws) - k_e(wi)`` in rad/m."""
    m, th = config.material, config.cut_angle_deg
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    return (
        wavenumber(omega_s + omega_i, "e", th, m)
        - wavenumber(omega_s, "o", th, m)
        - wavenumber(omega_i, "e", th, m)
    )


def _bisect(fn, lo, hi, xtol):
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        return None
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval at float resolution
            break
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return lo if abs(f_lo) <= abs(fn(hi)) else hi


def phasematch_angle_search(pump_wavelength, degenerate_wavelength, material):
    """Cut angle (degrees) giving zero eoe mismatch for pump -> signal + idler.

    The signal sits at ``degenerate_wavelength``; energy conservation fixes
    the idler.  Bisection over (0, 90) degrees down to float resolution.
    """
    omega_p = wavelength_to_angular_frequency(pump_wavelength)
    omega_s = wavelength_to_angular_frequency(degenerate_wavelength)
    omega_i = omega_p - omega_s
    if omega_i <= 0:
        raise PhaseMatchingError("signal wavelength must be longer than the pump wavelength")

    def mismatch(theta):
        cfg = CrystalConfig(material, 1.0, theta)
        return float(phase_mismatch(omega_s, omega_i, cfg))

    theta = _bisect(mismatch, 1e-9, 90.0 - 1e-9, xtol=0.0)
    if theta is None:
        raise PhaseMatchingError(
            f"no phase-matching angle for {pump_wavelength / NM:.2f} nm -> "
            f"{degenerate_wavelength / NM:.2f} nm in {material.name}"
        )
    return theta


def gvm_residual(pump_wavelength, theta_deg, material):
    """n_g of the e-polarised pump minus n_g of the o-polarised degenerate signal."""
    omega_p = wavelength_to_angular_frequency(pump_wavelength)
    return float(
        group_index(omega_p, "e", theta_deg, material)
        - group_index(omega_p / 2.0, "o", theta_deg, material)
    )


def gvm_pump_search(theta_deg, material, scan_nm=(300.0, 700.0), tol_nm=1e-6):
    """Pump wavelength (m) whose group velocity equals that of the degenerate o-signal."""
    lo_nm, hi_nm = scan_nm
    lam_lo, lam_hi = material.range_um[0] * 1e3, material.range_um[1] * 1e3
    # keep the finite-difference neighbourhoods of pump and signal inside the range
    lo_nm = max(lo_nm, lam_lo * 1.001)
    hi_nm = min(hi_nm, lam_hi / 2.0 * 0.999)
    if not lo_nm < hi_nm:
        raise PhaseMatchingError("scan window does not intersect the material's valid range")

    root = _bisect(lambda lam: gvm_residual(lam * NM, theta_deg, material), lo_nm, hi_nm, tol_nm)
    if root is None:
        raise PhaseMatchingError(
            f"no group-velocity-matched pump wavelength in {lo_nm:.1f}-{hi_nm:.1f} nm "
            f"at theta = {theta_deg} deg for {material.name}"
        )
    return root * NM
