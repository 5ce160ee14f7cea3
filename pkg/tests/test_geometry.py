import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gptomo.geometry import (
    Ellipse,
    EllipsePhantom,
    GridSpec,
    ImageGrid,
    Ray,
    ScanGeometry,
    Sinogram,
    add_noise,
    analytic_sinogram,
    ellipse_chords,
    pixel_sinogram,
    ray_point,
)

angles = st.floats(0, 2 * np.pi, allow_nan=False)


def test_ray_point_examples():
    assert ray_point(Ray(0.0, 0.0), 0.7) == pytest.approx((0.0, 0.7))
    assert ray_point(Ray(np.pi / 2, 1.0), 0.0) == pytest.approx((0.0, 1.0), abs=1e-15)


@given(theta=angles, r=st.floats(-5, 5), s=st.floats(-5, 5))
def test_ray_point_lies_on_line(theta, r, s):
    x1, x2 = ray_point(Ray(theta, r), s)
    assert x1 * np.cos(theta) + x2 * np.sin(theta) == pytest.approx(r, abs=1e-12)


def test_geometry_layout():
    g = ScanGeometry(1.0, 9, 19)
    assert g.n == 171
    a = g.angles()
    assert a[0] == 0 and a[-1] < np.pi
    assert np.allclose(np.diff(a), np.pi / 9)
    r = g.offsets()
    assert np.allclose(np.diff(r), 2 / 19)
    assert np.all(np.abs(r) < 1) and np.isclose(r[9], 0)
    th, rr = g.ray_arrays()
    assert th.size == rr.size == 171
    assert np.all(th[:19] == 0)


@pytest.mark.parametrize("r, expected", [(0.0, 1.0), (0.3, 0.8), (0.6, 0.0)])
def test_centered_disk_chords(r, expected):
    disk = Ellipse(0, 0, 0.5, 0.5, 0, 1.0)
    for theta in (0.0, 0.4, 2.0):
        assert ellipse_chords(disk, theta, r) == pytest.approx(expected, abs=1e-14)


def test_analytic_sinogram_disk_values():
    sino = analytic_sinogram(EllipsePhantom.disk(0.5), ScanGeometry(1.0, 4, 21))
    expected = 2 * np.sqrt(np.maximum(0.25 - sino.r ** 2, 0))
    assert np.allclose(sino.y, expected, atol=1e-14)


def test_chord_matches_brute_force_sampling():
    e = Ellipse(0.1, -0.2, 0.5, 0.25, 0.7, 1.0)
    rng = np.random.default_rng(3)
    s = np.linspace(-2, 2, 400_001)
    for _ in range(20):
        th, r = rng.uniform(0, np.pi), rng.uniform(-0.6, 0.6)
        x1, x2 = ray_point(Ray(th, r), s)
        inside = EllipsePhantom((e,)).evaluate(x1, x2)
        assert ellipse_chords(e, th, r) == pytest.approx(inside.sum() * (s[1] - s[0]), abs=2e-5)


def test_linearity_of_analytic_projector():
    e1 = Ellipse(0.1, 0.2, 0.3, 0.2, 0.4, 1.0)
    e2 = Ellipse(-0.2, -0.1, 0.25, 0.4, -0.3, -0.5)
    g = ScanGeometry(1.0, 7, 31)
    both = analytic_sinogram(EllipsePhantom((e1, e2)), g).y
    split = analytic_sinogram(EllipsePhantom((e1,)), g).y + analytic_sinogram(EllipsePhantom((e2,)), g).y
    assert np.array_equal(both, split) or np.allclose(both, split, rtol=0, atol=1e-15)


def test_support_zero_outside_extent():
    ph = EllipsePhantom.chest(1.0)
    g = ScanGeometry(1.0, 12, 101)
    sino = analytic_sinogram(ph, g)
    assert np.all(sino.y[np.abs(sino.r) > ph.extent] == 0)


def test_disk_sinogram_depends_only_on_offset():
    sino = analytic_sinogram(EllipsePhantom.disk(0.4), ScanGeometry(1.0, 13, 41))
    _, _, table = sino.as_table()
    assert np.allclose(table, table[0], atol=1e-15)


def test_phantom_outside_disk_rejected():
    with pytest.raises(ValueError):
        analytic_sinogram(EllipsePhantom.disk(1.2), ScanGeometry(1.0, 3, 5))


def test_chest_phantom_is_normalised():
    img = EllipsePhantom.chest(32.0).rasterize(GridSpec.square(64, 32.0))
    assert img.values.max() == pytest.approx(1.0)
    assert img.values.min() == 0.0


def test_grid_orientation():
    g = GridSpec(4, 6, 3.0, 2.0)
    X1, X2 = g.centers()
    assert X1.shape == (4, 6)
    assert X1[0, 0] == pytest.approx(-2.5) and X1[0, -1] == pytest.approx(2.5)
    assert X2[0, 0] == pytest.approx(1.5) and X2[-1, 0] == pytest.approx(-1.5)


# pixel projector ---------------------------------------------------------------


def test_pixel_projector_zero_image():
    img = ImageGrid(np.zeros((32, 32)), 1.0, 1.0)
    assert np.all(pixel_sinogram(img, ScanGeometry(1.0, 5, 11)).y == 0)


def test_pixel_projector_linear():
    rng = np.random.default_rng(0)
    img = ImageGrid(rng.random((24, 24)), 1.0, 1.0)
    g = ScanGeometry(1.0, 5, 11)
    a = pixel_sinogram(img, g).y
    b = pixel_sinogram(img.scaled(2.5), g).y
    assert np.allclose(b, 2.5 * a, rtol=1e-13)


def test_pixel_projector_disk_center_ray():
    ph = EllipsePhantom.disk(0.5)
    grid = GridSpec.square(256, 1.0)
    g = ScanGeometry(1.0, 8, 9)
    sino = pixel_sinogram(ph.rasterize(grid), g)
    centre = sino.y[np.isclose(sino.r, 0)]
    assert np.all(np.abs(centre - 1.0) <= 2 * grid.dx1)


def test_pixel_projector_converges_to_analytic():
    ph = EllipsePhantom((Ellipse(0.05, -0.1, 0.55, 0.4, 0.3, 1.0),))
    g = ScanGeometry(1.0, 16, 63)
    exact = analytic_sinogram(ph, g).y
    errs = []
    for n in (64, 128, 256):
        approx = pixel_sinogram(ph.rasterize(GridSpec.square(n, 1.0)), g).y
        errs.append(np.mean(np.abs(approx - exact)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 1.4) and np.all(ratios < 2.9), (errs, ratios)


def test_pixel_projector_rotation_symmetry():
    ph = EllipsePhantom.disk(0.5)
    sino = pixel_sinogram(ph.rasterize(GridSpec.square(128, 1.0)), ScanGeometry(1.0, 9, 21))
    _, _, table = sino.as_table()
    assert np.max(np.ptp(table, axis=0)) < 4 * (2 / 128)


# noise -------------------------------------------------------------------------


def test_add_noise_zero_sigma_identity():
    sino = analytic_sinogram(EllipsePhantom.disk(0.5), ScanGeometry(1.0, 3, 9))
    out = add_noise(sino, 0.0, 1)
    assert np.array_equal(out.y, sino.y)


def test_add_noise_deterministic_and_recorded():
    sino = analytic_sinogram(EllipsePhantom.disk(0.5), ScanGeometry(1.0, 30, 101))
    sigma = np.sqrt(0.1)
    assert sigma == pytest.approx(0.3162, abs=1e-4)
    a, b = add_noise(sino, sigma, 7), add_noise(sino, sigma, 7)
    assert np.array_equal(a.y, b.y)
    assert a.noise_sigma == sigma
    resid = a.y - sino.y
    assert np.std(resid) == pytest.approx(sigma, rel=0.05)
    assert not np.array_equal(add_noise(sino, sigma, 8).y, a.y)


def test_add_noise_negative_rejected():
    sino = analytic_sinogram(EllipsePhantom.disk(0.5), ScanGeometry(1.0, 3, 9))
    with pytest.raises(ValueError):
        add_noise(sino, -0.1, 0)


@settings(max_examples=25)
@given(n_angles=st.integers(1, 12), n_rays=st.integers(2, 40))
def test_sinogram_table_roundtrip(n_angles, n_rays):
    g = ScanGeometry(2.0, n_angles, n_rays)
    y = np.arange(g.n, dtype=float)
    sino = Sinogram.from_geometry(g, y)
    angles, offsets, table = sino.as_table()
    assert np.allclose(angles, g.angles()) and np.allclose(offsets, g.offsets())
    assert np.array_equal(table.ravel(), y)


def test_sinogram_length_mismatch():
    with pytest.raises(ValueError):
        Sinogram([0.0, 1.0], [0.0], [1.0], 1.0)
