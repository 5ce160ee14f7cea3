"""
Parallel-beam scan geometry, ellipse phantoms and forward projectors.

Lines are parametrised by angle ``theta`` and signed offset ``r``::

    x1(s) = r cos(theta) - s sin(theta)
    x2(s) = r sin(theta) + s cos(theta)

and every line integral runs over the arc length window ``s in [-R, R]``
where ``R`` is the radius of the scan disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import map_coordinates


@dataclass(frozen=True)
class Ray:
    theta: float
    r: float


def ray_point(ray: Ray, s):
    """Point at arc length `s` along `ray` (broadcasts over array `s`)."""
    c, sn = np.cos(ray.theta), np.sin(ray.theta)
    return ray.r * c - s * sn, ray.r * sn + s * c


@dataclass(frozen=True)
class ScanGeometry:
    """Uniform parallel-beam scan over a disk of radius `R`.

    Angles are spaced uniformly over ``[0, angle_span)``. Ray offsets are the
    centres of `n_rays` equal cells partitioning ``[-R, R]``, so the spacing
    is ``2R / n_rays`` and an odd ray count always contains ``r = 0``.
    Measurements are ordered angle-major: all rays of the first angle, then
    the second angle and so on.
    """

    R: float
    n_angles: int
    n_rays: int
    angle_span: float = np.pi

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"disk radius must be positive, got {self.R}")
        if self.n_angles < 1 or self.n_rays < 1:
            raise ValueError("n_angles and n_rays must be positive")
        if self.angle_span <= 0:
            raise ValueError("angle_span must be positive")

    @property
    def n(self) -> int:
        return self.n_angles * self.n_rays

    @property
    def ray_spacing(self) -> float:
        return 2.0 * self.R / self.n_rays

    def angles(self) -> np.ndarray:
        return np.arange(self.n_angles) * (self.angle_span / self.n_angles)

    def offsets(self) -> np.ndarray:
        return -self.R + (np.arange(self.n_rays) + 0.5) * self.ray_spacing

    def ray_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened ``(theta, r)`` arrays of length ``n`` in angle-major order."""
        th, rr = np.meshgrid(self.angles(), self.offsets(), indexing="ij")
        return th.ravel(), rr.ravel()

    def rays(self) -> list[Ray]:
        return [Ray(float(t), float(r)) for t, r in zip(*self.ray_arrays())]


@dataclass(frozen=True)
class GridSpec:
    """Pixel grid of ``n1`` rows by ``n2`` columns covering ``[-L1, L1] x [-L2, L2]``.

    Row 0 is the top of the image (largest ``x2``); column 0 is the left
    edge (smallest ``x1``). Pixel values are sampled at pixel centres.
    """

    n1: int
    n2: int
    L1: float
    L2: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def dx1(self) -> float:
        return 2.0 * self.L1 / self.n2

    @property
    def dx2(self) -> float:
        return 2.0 * self.L2 / self.n1

    @property
    def pixel_area(self) -> float:
        return self.dx1 * self.dx2

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Column centres along ``x1`` and row centres along ``x2`` (top to bottom)."""
        x1 = -self.L1 + (np.arange(self.n2) + 0.5) * self.dx1
        x2 = self.L2 - (np.arange(self.n1) + 0.5) * self.dx2
        return x1, x2

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre coordinate arrays ``(X1, X2)`` of shape ``(n1, n2)``."""
        x1, x2 = self.axes()
        X1, X2 = np.meshgrid(x1, x2)
        return X1, X2

    @classmethod
    def square(cls, n: int, half_width: float) -> "GridSpec":
        return cls(n, n, half_width, half_width)


@dataclass(frozen=True)
class ImageGrid:
    values: np.ndarray
    L1: float
    L2: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("image values must be a 2-D array")
        object.__setattr__(self, "values", v)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.values.shape[0], self.values.shape[1], self.L1, self.L2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def scaled(self, c: float) -> "ImageGrid":
        return replace(self, values=c * self.values)


@dataclass(frozen=True)
class Ellipse:
    c1: float
    c2: float
    a: float
    b: float
    psi: float
    rho: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("ellipse semi-axes must be positive")

    @property
    def extent(self) -> float:
        """Distance from the origin to the farthest point of the ellipse."""
        # Support function maximised over directions; sampled densely, exact enough for a bound.
        t = np.linspace(0.0, 2.0 * np.pi, 721)
        c, s = np.cos(self.psi), np.sin(self.psi)
        px = self.c1 + self.a * np.cos(t) * c - self.b * np.sin(t) * s
        py = self.c2 + self.a * np.cos(t) * s + self.b * np.sin(t) * c
        return float(np.max(np.hypot(px, py)))


@dataclass(frozen=True)
class EllipsePhantom:
    """Sum of constant-valued ellipses; overlapping values add."""

    ellipses: tuple[Ellipse, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ellipses", tuple(self.ellipses))

    @property
    def extent(self) -> float:
        return max((e.extent for e in self.ellipses), default=0.0)

    def check_inside(self, R: float) -> None:
        if self.extent > R * (1 + 1e-12):
            raise ValueError(f"phantom extends to radius {self.extent:.6g}, outside the disk R={R}")

    def evaluate(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for e in self.ellipses:
            c, s = np.cos(e.psi), np.sin(e.psi)
            dx, dy = x1 - e.c1, x2 - e.c2
            u = (dx * c + dy * s) / e.a
            v = (-dx * s + dy * c) / e.b
            out += np.where(u * u + v * v <= 1.0, e.rho, 0.0)
        return out

    def rasterize(self, grid: GridSpec) -> ImageGrid:
        X1, X2 = grid.centers()
        return ImageGrid(self.evaluate(X1, X2), grid.L1, grid.L2)

    def scaled(self, factor: float) -> "EllipsePhantom":
        """Geometric scaling of every ellipse about the origin."""
        return EllipsePhantom(
            tuple(replace(e, c1=e.c1 * factor, c2=e.c2 * factor, a=e.a * factor, b=e.b * factor)
                  for e in self.ellipses)
        )

    @classmethod
    def disk(cls, radius: float, rho: float = 1.0) -> "EllipsePhantom":
        return cls((Ellipse(0.0, 0.0, radius, radius, 0.0, rho),))

    @classmethod
    def chest(cls, R: float = 1.0) -> "EllipsePhantom":
        """Chest-like slice inside radius `R` with intensities normalised to ``[0, 1]``.

        Soft tissue 0.45, lungs 0.10, heart 0.60, spine 1.0.
        """
        unit = (
            Ellipse(0.0, 0.0, 0.88, 0.66, 0.0, 0.45),
            Ellipse(-0.40, 0.06, 0.30, 0.44, 0.15, -0.35),
            Ellipse(0.40, 0.06, 0.30, 0.44, -0.15, -0.35),
            Ellipse(0.10, -0.10, 0.22, 0.18, 0.5, 0.15),
            Ellipse(0.0, -0.48, 0.10, 0.09, 0.0, 0.55),
        )
        return cls(unit).scaled(R)


@dataclass(frozen=True)
class Sinogram:
    """Measured line integrals ``y[i]`` along rays ``(theta[i], r[i])``.

    `noise_sigma` is the standard deviation of the additive noise when known,
    ``None`` otherwise.
    """

    theta: np.ndarray
    r: np.ndarray
    y: np.ndarray
    R: float
    noise_sigma: float | None = None

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).ravel()
        rr = np.asarray(self.r, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if not (th.size == rr.size == y.size):
            raise ValueError(f"theta, r and y lengths differ: {th.size}, {rr.size}, {y.size}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "r", rr)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    def rays(self) -> list[Ray]:
        return [Ray(float(t), float(r)) for t, r in zip(self.theta, self.r)]

    def with_values(self, y, noise_sigma=None) -> "Sinogram":
        return replace(self, y=np.asarray(y, dtype=float), noise_sigma=noise_sigma)

    def subset(self, idx) -> "Sinogram":
        idx = np.asarray(idx)
        return replace(self, theta=self.theta[idx], r=self.r[idx], y=self.y[idx])

    @classmethod
    def from_geometry(cls, geometry: ScanGeometry, y, noise_sigma=None) -> "Sinogram":
        th, rr = geometry.ray_arrays()
        return cls(th, rr, y, geometry.R, noise_sigma)

    def as_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reshape into ``(angles, offsets, values[n_angles, n_rays])``.

        Requires every angle to share the same sorted offset grid, which is
        the case for sinograms produced from a `ScanGeometry`.
        """
        angles = np.unique(self.theta)
        table, offsets = [], None
        for a in angles:
            sel = self.theta == a
            order = np.argsort(self.r[sel])
            r_a = self.r[sel][order]
            if offsets is None:
                offsets = r_a
            elif r_a.shape != offsets.shape or not np.allclose(r_a, offsets):
                raise ValueError("sinogram offsets differ between angles")
            table.append(self.y[sel][order])
        return angles, offsets, np.array(table)


def ellipse_chords(ellipse: Ellipse, theta, r) -> np.ndarray:
    """Chord lengths of lines ``(theta, r)`` through `ellipse`, zero on a miss."""
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    c, s = np.cos(ellipse.psi), np.sin(ellipse.psi)
    # line origin and direction, shifted and rotated into the ellipse frame, then scaled to the unit circle
    p1 = r * np.cos(theta) - ellipse.c1
    p2 = r * np.sin(theta) - ellipse.c2
    d1, d2 = -np.sin(theta), np.cos(theta)
    q1 = (p1 * c + p2 * s) / ellipse.a
    q2 = (-p1 * s + p2 * c) / ellipse.b
    v1 = (d1 * c + d2 * s) / ellipse.a
    v2 = (-d1 * s + d2 * c) / ellipse.b
    vv = v1 * v1 + v2 * v2
    qv = q1 * v1 + q2 * v2
    qq = q1 * q1 + q2 * q2
    disc = qv * qv - vv * (qq - 1.0)
    return np.where(disc > 0.0, 2.0 * np.sqrt(np.maximum(disc, 0.0)) / vv, 0.0)


def analytic_sinogram(phantom: EllipsePhantom, geometry: ScanGeometry) -> Sinogram:
    """Exact noise-free line integrals of `phantom` for every ray of `geometry`."""
    phantom.check_inside(geometry.R)
    th, rr = geometry.ray_arrays()
    y = np.zeros(th.size)
    for e in phantom.ellipses:
        y += e.rho * ellipse_chords(e, th, rr)
    return Sinogram(th, rr, y, geometry.R, 0.0)


def pixel_sinogram(image: ImageGrid, geometry: ScanGeometry, step: float | None = None) -> Sinogram:
    """Line integrals of a raster image by bilinear sampling along each ray.

    Samples are spaced `step` apart over ``s in [-R, R]`` (default: half the
    smaller pixel width) and accumulated with the trapezoid rule. Samples
    outside the image contribute zero.
    """
    spec = image.spec
    if spec.L1 < geometry.R or spec.L2 < geometry.R:
        raise ValueError("image extent must contain the scan disk")
    h = 0.5 * min(spec.dx1, spec.dx2) if step is None else float(step)
    n_steps = int(np.ceil(2.0 * geometry.R / h))
    s = np.linspace(-geometry.R, geometry.R, n_steps + 1)
    ds = s[1] - s[0]
    w = np.full(s.size, ds)
    w[0] = w[-1] = 0.5 * ds

    th, rr = geometry.ray_arrays()
    y = np.empty(th.size)
    # chunk over rays to bound memory
    chunk = max(1, 400_000 // s.size)
    for lo in range(0, th.size, chunk):
        t = th[lo:lo + chunk, None]
        x1 = rr[lo:lo + chunk, None] * np.cos(t) - s * np.sin(t)
        x2 = rr[lo:lo + chunk, None] * np.sin(t) + s * np.cos(t)
        col = (x1 + spec.L1) / spec.dx1 - 0.5
        row = (spec.L2 - x2) / spec.dx2 - 0.5
        vals = map_coordinates(image.values, [row.ravel(), col.ravel()], order=1,
                               mode="constant", cval=0.0).reshape(x1.shape)
        # map_coordinates extrapolates within half a pixel of the border; treat outside as zero
        outside = (col < -0.5) | (col > spec.n2 - 0.5) | (row < -0.5) | (row > spec.n1 - 0.5)
        vals[outside] = 0.0
        y[lo:lo + chunk] = vals @ w
    return Sinogram(th, rr, y, geometry.R, 0.0)


def add_noise(sinogram: Sinogram, sigma: float, seed: int) -> Sinogram:
    """Add iid ``N(0, sigma^2)`` noise drawn from a generator seeded with `seed`."""
    if sigma < 0:
        raise ValueError(f"noise sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return sinogram.with_values(sinogram.y.copy(), 0.0)
    rng = np.random.default_rng(seed)
    return sinogram.with_values(sinogram.y + rng.normal(0.0, sigma, sinogram.n), float(sigma))
