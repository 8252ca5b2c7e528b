import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homsim.crystal import (
    CrystalConfig, PhaseMatchingError, RangeError, SellmeierSet, group_index, gvm_pump_search,
    gvm_residual, index_extraordinary, index_ordinary, load_material, phase_mismatch,
    phasematch_angle_search, wavenumber,
)
from homsim.units import wavelength_to_angular_frequency

# independent 50-digit evaluation of the built-in coefficients
N_O_830 = 1.5005883658504574
N_E_415_678 = 1.4843058700347905
K_O_830 = 11359608.15956171
DK_825_835 = -2127.80018555027
NG_O_830 = 1.525703656083518
NG_E_415_678 = 1.525701286499362
NG_E_830_678 = 1.482404430198583

W830 = wavelength_to_angular_frequency(830e-9)
W415 = wavelength_to_angular_frequency(415e-9)

in_range_nm = st.floats(min_value=215.0, max_value=1525.0)


@pytest.fixture
def isotropic(kdp):
    return SellmeierSet("iso", kdp.ordinary, kdp.ordinary, kdp.range_um)


def test_ordinary_index_regression(kdp):
    n = index_ordinary(830e-9, kdp)
    assert 1.4 < n < 1.6
    assert n == pytest.approx(N_O_830, rel=1e-13)


def test_normal_dispersion(kdp):
    assert index_ordinary(415e-9, kdp) > index_ordinary(830e-9, kdp)


def test_deterministic(kdp):
    assert index_ordinary(830e-9, kdp) == index_ordinary(830e-9, kdp)
    assert phasematch_angle_search(415e-9, 830e-9, kdp) == phasematch_angle_search(415e-9, 830e-9, kdp)


@pytest.mark.parametrize("lam", [100e-9, 2000e-9, 0.0])
def test_out_of_range_names_range(kdp, lam):
    with pytest.raises(RangeError, match="0.2138"):
        index_ordinary(lam, kdp)


def test_extraordinary_limits(kdp):
    for lam in (415e-9, 830e-9):
        assert index_extraordinary(lam, 0.0, kdp) == index_ordinary(lam, kdp)
        assert index_extraordinary(lam, 90.0, kdp) == kdp.n_e_principal(lam)


def test_extraordinary_regression(kdp):
    assert index_extraordinary(415e-9, 67.8, kdp) == pytest.approx(N_E_415_678, rel=1e-13)


@pytest.mark.parametrize("theta", [-1.0, 91.0])
def test_extraordinary_angle_checked(kdp, theta):
    with pytest.raises(ValueError):
        index_extraordinary(830e-9, theta, kdp)


@given(in_range_nm, st.floats(min_value=0.0, max_value=90.0))
def test_indices_bounded(lam_nm, theta):
    from homsim.crystal import default_material
    m = default_material()
    n_o = index_ordinary(lam_nm * 1e-9, m)
    n_e = index_extraordinary(lam_nm * 1e-9, theta, m)
    assert 1 < n_o < 3 and 1 < n_e < 3


def test_wavenumber_regression(kdp):
    assert wavenumber(W830, "o", 67.8, kdp) == pytest.approx(K_O_830, rel=1e-13)


def test_ordinary_wavenumber_ignores_angle(kdp):
    assert wavenumber(W830, "o", 10.0, kdp) == wavenumber(W830, "o", 80.0, kdp)


def test_wavenumber_increasing(kdp):
    omegas = wavelength_to_angular_frequency(np.linspace(1520e-9, 220e-9, 400))
    for pol in ("o", "e"):
        k = wavenumber(omegas, pol, 67.8, kdp)
        assert np.all(np.diff(k) > 0)


def test_bad_polarization(kdp):
    with pytest.raises(ValueError):
        wavenumber(W830, "x", 67.8, kdp)


@pytest.mark.parametrize("omega, pol, expected", [
    (W830, "o", NG_O_830), (W415, "e", NG_E_415_678), (W830, "e", NG_E_830_678),
])
def test_group_index_regression(kdp, omega, pol, expected):
    assert group_index(omega, pol, 67.8, kdp) == pytest.approx(expected, rel=1e-9)


def test_group_index_exceeds_phase_index(kdp):
    for omega, pol in ((W830, "o"), (W415, "e"), (W830, "e")):
        from homsim.crystal import refractive_index
        assert group_index(omega, pol, 67.8, kdp) >= refractive_index(omega, pol, 67.8, kdp)


def test_gvm_paper_pair(kdp):
    ng_p = group_index(W415, "e", 67.8, kdp)
    ng_s = group_index(W830, "o", 67.8, kdp)
    assert abs(ng_p - ng_s) / ng_s < 1e-2


def test_group_index_step_halving(kdp):
    for omega, pol in ((W830, "o"), (W415, "e"), (W830, "e")):
        a = group_index(omega, pol, 67.8, kdp, rel_step=1e-6)
        b = group_index(omega, pol, 67.8, kdp, rel_step=5e-7)
        assert abs(b / a - 1) < 1e-8


def test_group_index_near_edge_raises(kdp):
    edge = wavelength_to_angular_frequency(kdp.range_um[1] * 1e-6)
    with pytest.raises(RangeError):
        group_index(edge, "o", 67.8, kdp)


def test_phase_mismatch_regression(paper_crystal):
    ws = wavelength_to_angular_frequency(825e-9)
    wi = wavelength_to_angular_frequency(835e-9)
    assert phase_mismatch(ws, wi, paper_crystal) == pytest.approx(DK_825_835, rel=1e-9)


def test_phase_mismatch_continuous(paper_crystal):
    ws = np.linspace(W830 * 0.99, W830 * 1.01, 2001)
    dk = phase_mismatch(ws, W830, paper_crystal)
    assert np.max(np.abs(np.diff(dk))) < 1e-2 * np.ptp(dk)


def test_phasematch_angle(kdp):
    theta = phasematch_angle_search(415e-9, 830e-9, kdp)
    assert theta == pytest.approx(67.8, abs=0.5)
    cfg = CrystalConfig(kdp, 15.0, theta)
    assert abs(phase_mismatch(W830, W415 - W830, cfg)) < 1e-6


def test_phasematch_angle_continuous(kdp):
    a = phasematch_angle_search(415e-9, 830e-9, kdp)
    b = phasematch_angle_search(416e-9, 832e-9, kdp)
    c = phasematch_angle_search(415.001e-9, 830.002e-9, kdp)
    assert abs(b - a) < 1.0
    assert abs(c - a) < 1e-3 * max(abs(b - a), 1e-9) * 10


def test_no_phasematch_angle(isotropic):
    with pytest.raises(PhaseMatchingError, match="no phase-matching angle"):
        phasematch_angle_search(415e-9, 830e-9, isotropic)


def test_gvm_pump_search(kdp):
    lam = gvm_pump_search(67.8, kdp)
    assert lam == pytest.approx(415e-9, abs=5e-9)
    assert abs(gvm_residual(lam, 67.8, kdp)) < 1e-6
    assert gvm_residual(lam - 1e-9, 67.8, kdp) * gvm_residual(lam + 1e-9, 67.8, kdp) < 0


def test_gvm_no_root():
    # one UV resonance: group index falls monotonically with wavelength, so no match
    toy = {"B1": 1.0, "C1": 0.01}
    m = SellmeierSet("toy", toy, toy, (0.2, 2.0), form="sellmeier")
    with pytest.raises(PhaseMatchingError):
        gvm_pump_search(67.8, m)


@pytest.mark.parametrize("length, theta", [(0.0, 67.8), (-1.0, 67.8), (15.0, 0.0), (15.0, 90.0)])
def test_crystal_config_invariants(kdp, length, theta):
    with pytest.raises(ValueError):
        CrystalConfig(kdp, length, theta)


def test_material_file_round_trip(tmp_path, kdp):
    path = tmp_path / "kdp.ini"
    lines = ["[material]", "name = copy", "citation = test", "form = zernike",
             f"range_um = {kdp.range_um[0]}, {kdp.range_um[1]}", "[ordinary]"]
    lines += [f"{k} = {v!r}" for k, v in kdp.ordinary.items()]
    lines += ["[extraordinary]"] + [f"{k} = {v!r}" for k, v in kdp.extraordinary.items()]
    path.write_text("\n".join(lines) + "\n")
    copy = load_material(path)
    assert copy.name == "copy"
    assert index_extraordinary(415e-9, 67.8, copy) == index_extraordinary(415e-9, 67.8, kdp)


def test_sellmeier_form_file(tmp_path):
    path = tmp_path / "glass.ini"
    path.write_text(
        "[material]\nname = toy\nform = sellmeier\nrange_um = 0.3, 2.0\n"
        "[ordinary]\nB1 = 1.0\nC1 = 0.01\n[extraordinary]\nB1 = 1.1\nC1 = 0.01\n"
    )
    m = load_material(path)
    assert index_ordinary(1e-6, m) == pytest.approx(np.sqrt(1 + 1.0 / (1 - 0.01)), rel=1e-15)


def test_missing_material_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.ini"):
        load_material(tmp_path / "nope.ini")


def test_malformed_material_file(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[material]\nname = bad\n")
    with pytest.raises(ValueError, match="malformed"):
        load_material(path)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=820.0, max_value=840.0), st.floats(min_value=820.0, max_value=840.0))
def test_mismatch_symmetric_structure(a, b):
    # eoe is not symmetric in (s, i) but the e-pump term is
    from homsim.crystal import default_material
    cfg = CrystalConfig(default_material(), 15.0, 67.8)
    wa, wb = wavelength_to_angular_frequency(a * 1e-9), wavelength_to_angular_frequency(b * 1e-9)
    m = cfg.material
    lhs = phase_mismatch(wa, wb, cfg) + wavenumber(wa, "o", 67.8, m) + wavenumber(wb, "e", 67.8, m)
    rhs = wavenumber(wa + wb, "e", 67.8, m)
    assert lhs == pytest.approx(rhs, rel=1e-12)
