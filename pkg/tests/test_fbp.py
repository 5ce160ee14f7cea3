import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gptomo.fbp import FilterKind, fbp_reconstruct, filter_projection, frequency_response, padded_length, window
from gptomo.geometry import EllipsePhantom, GridSpec, ScanGeometry, Sinogram, analytic_sinogram
from gptomo.metrics import relative_error


@pytest.mark.parametrize("kind, at_nyquist", [
    ("ramlak", 1.0), ("shepplogan", 2 / np.pi), ("cosine", 0.0), ("hamming", 0.08), ("hann", 0.0)])
def test_window_values(kind, at_nyquist):
    assert window(kind, 0.0, 1.0) == pytest.approx(1.0)
    assert window(kind, 1.0, 1.0) == pytest.approx(at_nyquist, abs=1e-15)
    assert window(kind, 1.5, 1.0) == 0.0


@pytest.mark.parametrize("kind", list(FilterKind))
def test_dc_annihilated(kind):
    H = frequency_response(kind, 64, 0.1)
    assert H[0] == 0.0
    assert np.all(H >= 0)


@pytest.mark.parametrize("kind", list(FilterKind))
def test_zero_sinogram_gives_zero_image(kind):
    geo = ScanGeometry(1.0, 8, 16)
    sino = Sinogram.from_geometry(geo, np.zeros(geo.n))
    img = fbp_reconstruct(sino, GridSpec.square(16, 1.0), kind)
    assert np.all(img.values == 0)


def test_filter_aliases():
    assert FilterKind.parse("Ram-Lak") is FilterKind.RAMLAK
    assert FilterKind.parse("ramp") is FilterKind.RAMLAK
    assert FilterKind.parse("shepp_logan") is FilterKind.SHEPPLOGAN
    assert FilterKind.parse("hanning") is FilterKind.HANN
    with pytest.raises(ValueError):
        FilterKind.parse("butterworth")


def test_padded_length():
    assert padded_length(95) == 256
    assert padded_length(64) == 128
    assert padded_length(1) == 2


@settings(max_examples=30)
@given(n=st.integers(2, 100), a=st.floats(-10, 10), seed=st.integers(0, 100))
def test_filter_linear(n, a, seed):
    rng = np.random.default_rng(seed)
    p, q = rng.standard_normal(n), rng.standard_normal(n)
    lhs = filter_projection(a * p + q, "hamming", 0.5)
    rhs = a * filter_projection(p, "hamming", 0.5) + filter_projection(q, "hamming", 0.5)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + abs(a)))


def test_filter_spacing_validation():
    with pytest.raises(ValueError):
        filter_projection(np.ones(4), "ramlak", 0.0)


def test_dense_disk_reconstruction():
    geo = ScanGeometry(1.0, 180, 255)
    ph = EllipsePhantom.disk(0.5)
    grid = GridSpec.square(128, 1.0)
    img = fbp_reconstruct(analytic_sinogram(ph, geo), grid, "ramlak")
    assert relative_error(ph.rasterize(grid), img) <= 10.0
    # interior is close to the true value
    X1, X2 = grid.centers()
    inner = X1 ** 2 + X2 ** 2 < 0.3 ** 2
    assert np.abs(img.values[inner].mean() - 1.0) < 0.05


def test_full_turn_matches_half_turn():
    ph = EllipsePhantom.chest(1.0)
    grid = GridSpec.square(48, 1.0)
    half = fbp_reconstruct(analytic_sinogram(ph, ScanGeometry(1.0, 60, 101)), grid)
    full = fbp_reconstruct(analytic_sinogram(ph, ScanGeometry(1.0, 120, 101, 2 * np.pi)), grid)
    assert np.allclose(half.values, full.values, atol=1e-10)


def test_outside_disk_zero():
    geo = ScanGeometry(1.0, 20, 41)
    img = fbp_reconstruct(analytic_sinogram(EllipsePhantom.disk(0.5), geo), GridSpec.square(32, 1.2))
    X1, X2 = GridSpec.square(32, 1.2).centers()
    assert np.all(img.values[X1 ** 2 + X2 ** 2 > 1] == 0)


def test_smoothing_filters_reduce_noise():
    geo = ScanGeometry(1.0, 60, 101)
    rng = np.random.default_rng(0)
    sino = Sinogram.from_geometry(geo, rng.standard_normal(geo.n))
    grid = GridSpec.square(32, 1.0)
    energy = {k: np.linalg.norm(fbp_reconstruct(sino, grid, k).values) for k in FilterKind}
    assert energy[FilterKind.HANN] < energy[FilterKind.RAMLAK]
    assert energy[FilterKind.SHEPPLOGAN] < energy[FilterKind.RAMLAK]
