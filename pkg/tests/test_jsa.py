import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homsim.crystal import CrystalConfig, group_index
from homsim.jsa import (
    FrequencyGrid, GridTooNarrowError, ResolutionError, SINC2_HALF_WIDTH, build_jsa,
    build_separable_jsa, default_grid, estimate_marginal_fwhm, export_density, marginal_spectra,
    phase_matching_function, pump_envelope, read_density, separable_grid,
)
from homsim.schmidt import schmidt_decompose
from homsim.units import C, GaussianSpectrum, fwhm_angfreq_to_fwhm_wavelength, fwhm_wavelength_to_fwhm_angfreq


@pytest.fixture(scope="module")
def paper_jsa(paper_crystal, pump):
    return build_jsa(default_grid(pump, paper_crystal), pump, paper_crystal)


def _half_max_width(fn, center, guess):
    """Full width at half maximum of a peaked scalar function by bisection on each side."""
    peak = fn(center)

    def edge(direction):
        lo, hi = 0.0, guess
        while fn(center + direction * hi) > peak / 2:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if fn(center + direction * mid) > peak / 2:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return edge(1) + edge(-1)


def test_grid_invariants():
    with pytest.raises(ValueError):
        FrequencyGrid(np.array([1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        FrequencyGrid(np.array([2.0, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        FrequencyGrid(np.array([1.0, 2.0, 4.0]), np.array([1.0, 2.0]))
    g = FrequencyGrid.centered(10.0, 20.0, 1.0, 2.0, 5, 3)
    assert g.shape == (5, 3)
    assert g.d_signal == pytest.approx(0.5) and g.d_idler == pytest.approx(2.0)


def test_pump_envelope_peak_and_symmetry(pump):
    w0 = pump.center_omega / 2
    assert pump_envelope(w0, w0, pump) == 1.0
    a, b = w0 + 3e12, w0 - 1e12
    assert pump_envelope(a, b, pump) == pump_envelope(b, a, pump)
    assert pump_envelope(a, b, pump) == pump_envelope(w0 + 1e12, w0 + 1e12, pump)


def test_pump_fwhm_recovered(pump):
    w0 = pump.center_omega / 2

    def intensity(total):
        return abs(pump_envelope(total / 2, total / 2, pump)) ** 2

    width = _half_max_width(intensity, pump.center_omega, 1e12)
    assert fwhm_angfreq_to_fwhm_wavelength(415e-9, width) / 1e-9 == pytest.approx(2.3, rel=0.01)
    assert w0 > 0


def test_phase_matching_zero_mismatch(paper_crystal, kdp):
    from homsim.crystal import phasematch_angle_search
    from homsim.units import wavelength_to_angular_frequency
    theta = phasematch_angle_search(415e-9, 830e-9, kdp)
    crystal = CrystalConfig(kdp, 15.0, theta)
    w = wavelength_to_angular_frequency(830e-9)
    wp = wavelength_to_angular_frequency(415e-9)
    assert phase_matching_function(w, wp - w, crystal) == pytest.approx(1.0, abs=1e-9)


def test_phase_matching_bounded(paper_jsa):
    assert np.max(np.abs(paper_jsa.phi)) <= 1.0
    assert np.max(np.abs(paper_jsa.alpha)) <= 1.0


def test_phase_matching_first_zero(paper_crystal):
    from scipy.optimize import brentq
    from homsim.crystal import phase_mismatch
    ws = 2.2694597196492208e15

    def half(offset):
        return phase_mismatch(ws, ws + offset, paper_crystal) * paper_crystal.length / 2

    sign = np.sign(half(1e12) - half(0.0))
    offset = brentq(lambda x: half(x) - sign * np.pi, 0.0, 2e13, xtol=1e-3, rtol=1e-15)
    assert abs(phase_matching_function(ws, ws + offset, paper_crystal)) < 1e-9
    inside = np.linspace(0.0, 0.99 * offset, 200)
    assert np.all(np.abs(phase_matching_function(ws, ws + inside, paper_crystal)) > 1e-3)


def test_normalized(paper_jsa):
    assert paper_jsa.normalized
    assert paper_jsa.norm() == pytest.approx(1.0, abs=1e-9)


def test_pump_only_limit(kdp, pump):
    crystal = CrystalConfig(kdp, 1e-12, 67.8)
    w = pump.center_omega / 2
    grid = FrequencyGrid.centered(w, w, 4e13, 4e13, 128)
    jsa = build_jsa(grid, pump, crystal)
    assert np.max(np.abs(jsa.phi - 1)) < 1e-9
    k_f = schmidt_decompose(jsa).schmidt_number
    alpha = jsa.alpha.astype(complex)
    k_alpha = schmidt_decompose(alpha).schmidt_number
    assert k_f == pytest.approx(k_alpha, rel=1e-6)


def test_paper_signal_marginal(paper_jsa):
    assert marginal_spectra(paper_jsa).signal_fwhm_nm == pytest.approx(9.3, rel=0.15)


@pytest.mark.xfail(strict=True, reason=(
    "15 mm of KDP with the built-in dispersion gives a 0.94 nm idler marginal; "
    "the 1.9 nm figure is a measured width. See the idler oracle test below."
))
def test_paper_idler_marginal(paper_jsa):
    assert marginal_spectra(paper_jsa).idler_fwhm_nm == pytest.approx(1.9, rel=0.15)


def test_idler_marginal_matches_sinc_width(paper_jsa, paper_crystal, pump):
    # the idler width is set by sinc^2(dk L / 2) with dk linear in the idler detuning
    m, th = paper_crystal.material, paper_crystal.cut_angle_deg
    wp = pump.center_omega
    slope = (group_index(wp, "e", th, m) - group_index(wp / 2, "e", th, m)) / C
    width = 4 * SINC2_HALF_WIDTH / (paper_crystal.length * abs(slope))
    expected_nm = fwhm_angfreq_to_fwhm_wavelength(830e-9, width) / 1e-9
    assert marginal_spectra(paper_jsa).idler_fwhm_nm == pytest.approx(expected_nm, rel=0.02)


def test_marginals_integrate_to_one(paper_jsa):
    ms = marginal_spectra(paper_jsa)
    g = paper_jsa.grid
    assert np.all(ms.signal >= 0) and np.all(ms.idler >= 0)
    assert np.sum(ms.signal) * g.d_signal == pytest.approx(1.0, abs=1e-9)
    assert np.sum(ms.idler) * g.d_idler == pytest.approx(1.0, abs=1e-9)


def test_separable_marginals_recovered():
    s, i = GaussianSpectrum(830.0, 9.3), GaussianSpectrum(830.0, 1.9)
    ms = marginal_spectra(build_separable_jsa(separable_grid(s, i), s, i))
    assert ms.signal_fwhm_nm == pytest.approx(9.3, rel=0.005)
    assert ms.idler_fwhm_nm == pytest.approx(1.9, rel=0.005)
    assert ms.signal_fwhm_omega == pytest.approx(fwhm_wavelength_to_fwhm_angfreq(830e-9, 9.3e-9), rel=0.005)


def test_grid_too_narrow():
    s, i = GaussianSpectrum(830.0, 9.3), GaussianSpectrum(830.0, 1.9)
    with pytest.raises(GridTooNarrowError):
        marginal_spectra(build_separable_jsa(separable_grid(s, i, 64, 0.3), s, i))


def test_resolution_error(paper_crystal, pump):
    fw_s, fw_i = estimate_marginal_fwhm(pump, paper_crystal)
    w = pump.center_omega / 2
    grid = FrequencyGrid.centered(w, w, 4 * fw_s, 10 * fw_i, 41)
    with pytest.raises(ResolutionError, match="grid points"):
        build_jsa(grid, pump, paper_crystal)


def test_grid_refinement(paper_crystal, pump):
    fw_s, fw_i = estimate_marginal_fwhm(pump, paper_crystal)
    w = pump.center_omega / 2
    coarse = build_jsa(FrequencyGrid.centered(w, w, 4 * fw_s, 4 * fw_i, 129), pump, paper_crystal)
    fine = build_jsa(FrequencyGrid.centered(w, w, 4 * fw_s, 4 * fw_i, 257), pump, paper_crystal)
    diff = np.abs(coarse.amplitudes - fine.amplitudes[::2, ::2])
    assert np.max(diff) / np.max(np.abs(fine.amplitudes)) < 1e-3


def test_peak_at_degeneracy(kdp, pump, tmp_path):
    from homsim.crystal import phasematch_angle_search
    crystal = CrystalConfig(kdp, 15.0, phasematch_angle_search(415e-9, 830e-9, kdp))
    grid = default_grid(pump, crystal, n_points=257)
    export_density(build_jsa(grid, pump, crystal), tmp_path)
    signal, idler, values = read_density(tmp_path / "jsa.csv")
    k, j = np.unravel_index(np.argmax(values), values.shape)
    w = pump.center_omega / 2
    assert abs(signal[k] - w) <= 0.5 * grid.d_signal
    assert abs(idler[j] - w) <= 0.5 * grid.d_idler


def test_export_round_trip(tmp_path, paper_crystal, pump):
    jsa = build_jsa(default_grid(pump, paper_crystal, n_points=64, span_fwhm=2.0), pump, paper_crystal)
    paths = export_density(jsa, tmp_path / "out", comments=["run=test"])
    assert set(paths) == {"alpha", "phi", "jsa"}
    text = paths["jsa"].read_text().splitlines()
    assert text[0].startswith("#")
    signal, idler, values = read_density(paths["jsa"])
    assert values.shape == jsa.grid.shape
    np.testing.assert_allclose(signal, jsa.grid.signal, rtol=1e-15)
    np.testing.assert_allclose(idler, jsa.grid.idler, rtol=1e-15)
    np.testing.assert_allclose(values, np.abs(jsa.amplitudes) ** 2, rtol=1e-6)
    _, _, alpha = read_density(paths["alpha"])
    np.testing.assert_allclose(alpha, np.abs(jsa.alpha) ** 2, rtol=1e-6)


def test_export_unwritable(tmp_path, paper_crystal, pump):
    jsa = build_jsa(default_grid(pump, paper_crystal, n_points=64, span_fwhm=2.0), pump, paper_crystal)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        export_density(jsa, blocker)


def test_build_deterministic(paper_crystal, pump):
    grid = default_grid(pump, paper_crystal, n_points=64, span_fwhm=2.0)
    a = build_jsa(grid, pump, paper_crystal).amplitudes
    b = build_jsa(grid, pump, paper_crystal).amplitudes
    assert np.array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-5e13, max_value=5e13), st.floats(min_value=-5e13, max_value=5e13))
def test_envelope_bounded(ds, di):
    pump = GaussianSpectrum(415.0, 2.3)
    w = pump.center_omega / 2
    value = pump_envelope(w + ds, w + di, pump)
    assert 0 <= value <= 1
