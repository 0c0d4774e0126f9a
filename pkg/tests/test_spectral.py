import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homspec import matrixio
from homspec.errors import DegenerateInput, InvalidArgument, NotMeasurable
from homspec.spectral import (
    FrequencyGrid,
    JointSpectralAmplitude,
    JointSpectralIntensity,
    bandwidth_nm_to_thz,
    bandwidth_thz_to_nm,
    frequency_to_wavelength,
    fwhm,
    intensity_of,
    magnitude_jsa_from_jsi,
    make_grid,
    marginal,
    normalize,
    schmidt_decompose,
    wavelength_to_frequency,
)

from .conftest import random_jsa
from .oracles import gram_schmidt_coefficients


def test_make_grid_endpoints():
    g = make_grid(190.95, 20.0, 512)
    assert g.nu1[0] == pytest.approx(180.95, abs=1e-12)
    assert g.nu1[-1] == pytest.approx(200.95, abs=1e-12)
    assert g.is_square and g.shape == (512, 512)
    g2 = make_grid(190.95, 20.0, 2)
    np.testing.assert_allclose(g2.nu1, [180.95, 200.95], atol=1e-12)


@pytest.mark.parametrize("span,n", [(0.0, 8), (-1.0, 8), (1.0, 1), (1.0, 2.5)])
def test_make_grid_rejects(span, n):
    with pytest.raises(InvalidArgument):
        make_grid(190.0, span, n)


def test_grid_rejects_nonuniform():
    with pytest.raises(InvalidArgument):
        FrequencyGrid(np.array([1.0, 2.0, 4.0]), np.array([1.0, 2.0, 3.0]))


def test_wavelength_frequency_oracle():
    assert wavelength_to_frequency(1570.0) == pytest.approx(299792.458 / 1570.0, rel=1e-15)
    assert round(wavelength_to_frequency(1570.0), 2) == 190.95
    assert round(wavelength_to_frequency(785.0), 2) == 381.90
    assert isinstance(wavelength_to_frequency(1570.0), float)
    with pytest.raises(InvalidArgument):
        wavelength_to_frequency(0.0)


@given(st.floats(100.0, 5000.0))
def test_wavelength_roundtrip(lam):
    assert frequency_to_wavelength(wavelength_to_frequency(lam)) == pytest.approx(lam, rel=1e-12)


def test_bandwidth_conversion_examples():
    assert bandwidth_nm_to_thz(3.6, 1570.0) == pytest.approx(0.43785, abs=1e-5)
    assert round(bandwidth_nm_to_thz(3.6, 1570.0), 3) == 0.438
    assert round(bandwidth_nm_to_thz(17.3, 1570.0), 2) == 2.10
    assert bandwidth_nm_to_thz(0.0, 1570.0) == 0.0


@given(st.floats(0.01, 50.0), st.floats(500.0, 2000.0))
def test_bandwidth_roundtrip(dl, lam):
    back = bandwidth_thz_to_nm(bandwidth_nm_to_thz(dl, lam), lam)
    assert back == pytest.approx(dl, rel=max(1e-12, (dl / lam) ** 2))


def test_normalize_examples():
    g = FrequencyGrid(np.linspace(0.0, 1.0, 2), np.linspace(0.0, 1.0, 2))
    n = normalize(JointSpectralAmplitude(g, np.ones((2, 2))))
    assert n.l2_measure() == pytest.approx(1.0, abs=1e-12)
    assert np.ptp(n.amp.real) == 0
    rng = np.random.default_rng(3)
    jsi = normalize(JointSpectralIntensity(make_grid(190, 3, 9), rng.random((9, 9))))
    assert jsi.inten.sum() * jsi.grid.cell_measure == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateInput):
        normalize(JointSpectralAmplitude(g, np.zeros((2, 2))))


@given(st.integers(0, 2**32 - 1), st.integers(2, 16))
def test_normalize_idempotent(seed, n):
    a = random_jsa(seed, n)
    np.testing.assert_allclose(normalize(a).amp, a.amp, atol=1e-12, rtol=0)


def test_intensity_and_magnitude():
    g = make_grid(190, 1, 2)
    a = JointSpectralAmplitude(g, np.array([[1 / np.sqrt(2), 0.5j], [np.exp(0.3j) * 0.2, 0.0]]))
    i = intensity_of(a).inten
    assert i[0, 0] == pytest.approx(0.5)
    assert i[1, 0] == pytest.approx(0.04)
    m = magnitude_jsa_from_jsi(JointSpectralIntensity(g, np.full((2, 2), 0.25)))
    assert m.is_real and np.all(m.amp.real == 0.5)


@given(st.integers(0, 2**32 - 1), st.integers(2, 16))
def test_magnitude_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    jsi = JointSpectralIntensity(make_grid(190, 2, n), rng.random((n, n)))
    np.testing.assert_allclose(intensity_of(magnitude_jsa_from_jsi(jsi)).inten, jsi.inten, atol=1e-12, rtol=0)


def test_gaussian_jsa_jsi_integrates_to_one():
    g = make_grid(190, 4, 64)
    n1, n2 = g.mesh()
    a = normalize(JointSpectralAmplitude(g, np.exp(-((n1 - 190) ** 2 + (n2 - 190) ** 2))))
    assert intensity_of(a).l1_measure() == pytest.approx(1.0, abs=1e-12)


def test_schmidt_separable_is_one():
    g = make_grid(190, 4, 48)
    phi = np.exp(-((g.nu1 - 190) ** 2))
    theta = np.exp(-((g.nu2 - 189.5) ** 2) / 0.3) * np.exp(1j * g.nu2)
    r = schmidt_decompose(normalize(JointSpectralAmplitude(g, np.outer(phi, theta))))
    assert r.schmidt_number == pytest.approx(1.0, abs=1e-9)
    assert r.purity == pytest.approx(1.0, abs=1e-9)


def test_schmidt_two_equal_modes():
    g = make_grid(190, 1, 4)
    amp = np.zeros((4, 4))
    amp[0, 0] = amp[1, 1] = 1.0
    r = schmidt_decompose(normalize(JointSpectralAmplitude(g, amp)))
    assert r.schmidt_number == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(r.coefficients, [2**-0.5, 2**-0.5], atol=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_schmidt_matches_gram_eigenvalues(seed, n):
    a = random_jsa(seed, n)
    r = schmidt_decompose(a)
    ref = gram_schmidt_coefficients(a.amp, a.grid.cell_measure)
    ref = ref[ref > 1e-10]
    np.testing.assert_allclose(r.coefficients, ref, atol=1e-9)
    assert r.schmidt_number >= 1.0 - 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.integers(1, 3))
def test_schmidt_rank_one_iff_k_one(seed, n, rank):
    rng = np.random.default_rng(seed)
    rank = min(rank, n)
    amp = sum(np.outer(rng.normal(size=n), rng.normal(size=n)) for _ in range(rank))
    k = schmidt_decompose(normalize(JointSpectralAmplitude(make_grid(190, 2, n), amp))).schmidt_number
    if rank == 1:
        assert k == pytest.approx(1.0, abs=1e-9)
    elif np.linalg.matrix_rank(amp, tol=1e-8) > 1:
        assert k > 1.0 + 1e-9


def test_marginal_separable_and_symmetric():
    g = make_grid(190, 4, 64)
    f1 = np.exp(-((g.nu1 - 190) ** 2))
    f2 = np.exp(-((g.nu2 - 190) ** 2) / 2)
    f2 = f2 / (f2.sum() * g.d_nu2)
    jsi = JointSpectralIntensity(g, np.outer(f1, f2))
    np.testing.assert_allclose(marginal(jsi, 1), f1, rtol=1e-12)
    sym = JointSpectralIntensity(g, np.outer(f1, f1))
    np.testing.assert_allclose(marginal(sym, 1), marginal(sym, 2), rtol=1e-12)
    assert marginal(jsi, 1).sum() * g.d_nu1 == pytest.approx(jsi.l1_measure(), rel=1e-12)
    with pytest.raises(InvalidArgument):
        marginal(jsi, 3)


def test_fwhm_examples():
    x = np.linspace(-10, 10, 4001)
    assert fwhm(x, np.exp(-0.5 * x**2)) == pytest.approx(2.0 * np.sqrt(2 * np.log(2)), abs=1e-4)
    box = (np.abs(x) <= 1.5).astype(float)
    assert abs(fwhm(x, box) - 3.0) <= x[1] - x[0]
    with pytest.raises(NotMeasurable):
        fwhm(x, x + 11)


def test_fwhm_outermost_crossings():
    x = np.linspace(-5, 5, 1001)
    y = np.exp(-((x - 2) ** 2) * 8) + np.exp(-((x + 2) ** 2) * 8)
    assert fwhm(x, y) > 4.0


def test_jsa_validation():
    g = make_grid(190, 1, 3)
    with pytest.raises(InvalidArgument):
        JointSpectralAmplitude(g, np.ones((3, 2)))
    with pytest.raises(InvalidArgument):
        JointSpectralIntensity(g, -np.ones((3, 3)))
    rect = FrequencyGrid(np.linspace(0, 1, 3), np.linspace(0, 1, 4))
    with pytest.raises(InvalidArgument):
        JointSpectralAmplitude(rect, np.ones((3, 4))).transposed()


def test_arrays_read_only():
    a = random_jsa(1, 4)
    with pytest.raises(ValueError):
        a.amp[0, 0] = 1.0


def test_matrix_roundtrip(tmp_path):
    a = random_jsa(7, 12)
    p = matrixio.write_matrix(tmp_path / "a.csv", a.amp, a.grid, "jsa", delta_t_ps="0.5")
    m, g, meta = matrixio.read_matrix(p)
    np.testing.assert_allclose(m, a.amp, rtol=1e-9, atol=0)
    assert g.same_as(a.grid)
    assert meta == {"kind": "jsa", "delta_t_ps": "0.5"}
    r = matrixio.write_matrix(tmp_path / "r.csv", np.abs(a.amp), a.grid, "jsi")
    m2, _, _ = matrixio.read_matrix(r)
    assert not np.iscomplexobj(m2)


def test_matrix_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,2\n3,4\n")
    with pytest.raises(InvalidArgument):
        matrixio.read_matrix(p)
