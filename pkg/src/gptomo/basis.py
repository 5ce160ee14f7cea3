"""
Laplace eigenbasis on a rectangle and its exact line integrals.

The Dirichlet eigenfunctions of ``-Laplacian`` on ``[-L1, L1] x [-L2, L2]``
are products of sines. Basis function ``k`` (0-based) carries the per-axis
wavenumber indices ``i1 = k % m1 + 1`` and ``i2 = k // m1 + 1``, i.e. the
first axis runs fastest.

Integrating a basis function along a ray splits, by the product-to-sum
identity, into two cosines of affine functions of the arc length, so the
integral has a closed form. Along ray ``(theta, r)`` the sine arguments are
``alpha s + beta`` and ``gamma s + delta`` with::

    alpha = -w1 sin(theta)    beta  = w1 (r cos(theta) + L1)
    gamma =  w2 cos(theta)    delta = w2 (r sin(theta) + L2)

and, writing ``A = alpha - gamma`` and ``B = alpha + gamma``::

    Phi = [cos(beta - delta) sin(A R) / A - cos(beta + delta) sin(B R) / B] / sqrt(L1 L2)

where ``sin(x R)/x`` is replaced by its limit ``R`` when ``|x| R`` is tiny.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .covariance import CovarianceSpec, spectral_density_radial
from .geometry import GridSpec, Ray, ScanGeometry, Sinogram

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class BasisSystem:
    L1: float
    L2: float
    m1: int
    m2: int

    def __post_init__(self):
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("rectangle half-widths must be positive")
        if self.m1 < 1 or self.m2 < 1:
            raise ValueError("basis counts must be positive")

    @classmethod
    def for_radius(cls, R: float, m1: int, m2: int | None = None, margin: float = 1.25) -> "BasisSystem":
        """Square rectangle of half-width ``margin * R`` around the scan disk."""
        return cls(margin * R, margin * R, m1, m1 if m2 is None else m2)

    @classmethod
    def with_total(cls, R: float, m: int, margin: float = 1.25) -> "BasisSystem":
        side = max(1, int(round(np.sqrt(m))))
        return cls.for_radius(R, side, side, margin)

    @property
    def m(self) -> int:
        return self.m1 * self.m2

    @property
    def i1(self) -> np.ndarray:
        return np.arange(self.m) % self.m1 + 1

    @property
    def i2(self) -> np.ndarray:
        return np.arange(self.m) // self.m1 + 1

    def index(self, i1: int, i2: int) -> int:
        if not (1 <= i1 <= self.m1 and 1 <= i2 <= self.m2):
            raise IndexError(f"axis indices ({i1}, {i2}) outside [1,{self.m1}]x[1,{self.m2}]")
        return (i1 - 1) + self.m1 * (i2 - 1)

    def unravel(self, k: int) -> tuple[int, int]:
        self._check(k)
        return k % self.m1 + 1, k // self.m1 + 1

    @property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.pi * self.i1 / (2 * self.L1), np.pi * self.i2 / (2 * self.L2)

    @property
    def eigenvalues(self) -> np.ndarray:
        w1, w2 = self.wavenumbers
        return w1 ** 2 + w2 ** 2

    def _check(self, k):
        if not 0 <= k < self.m:
            raise IndexError(f"basis index {k} outside [0, {self.m})")

    def evaluate(self, x1, x2) -> np.ndarray:
        """Basis matrix of shape ``(npoints, m)`` at the flattened points."""
        x1 = np.asarray(x1, dtype=float).ravel()
        x2 = np.asarray(x2, dtype=float).ravel()
        # per-axis tables, then outer products; avoids npoints * m sine evaluations
        k1 = np.arange(1, self.m1 + 1)
        k2 = np.arange(1, self.m2 + 1)
        s1 = np.sin(np.outer(x1 + self.L1, np.pi * k1 / (2 * self.L1)))
        s2 = np.sin(np.outer(x2 + self.L2, np.pi * k2 / (2 * self.L2)))
        out = (s1[:, None, :] * s2[:, :, None]).reshape(x1.size, self.m)
        return out / np.sqrt(self.L1 * self.L2)

    def evaluate_grid(self, grid: GridSpec) -> np.ndarray:
        X1, X2 = grid.centers()
        return self.evaluate(X1, X2)


def basis_eval(system: BasisSystem, k: int, x) -> float:
    """Value of basis function `k` (0-based) at point ``x = (x1, x2)``."""
    system._check(k)
    i1, i2 = system.unravel(k)
    w1 = np.pi * i1 / (2 * system.L1)
    w2 = np.pi * i2 / (2 * system.L2)
    return float(np.sin(w1 * (x[0] + system.L1)) * np.sin(w2 * (x[1] + system.L2))
                 / np.sqrt(system.L1 * system.L2))


def _sin_over(x, R):
    """``sin(x R) / x`` with the limit ``R`` below the degeneracy threshold."""
    small = np.abs(x) * R < DEGENERATE_TOL
    safe = np.where(small, 1.0, x)
    return np.where(small, R, np.sin(safe * R) / safe)


def phi_matrix(system: BasisSystem, theta, r, R: float) -> np.ndarray:
    """Line integrals of every basis function along every ray, shape ``(m, n)``."""
    if R > min(system.L1, system.L2) * (1 + 1e-12):
        raise ValueError(f"disk radius {R} exceeds the basis rectangle")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w1, w2 = system.wavenumbers
    w1, w2 = w1[:, None], w2[:, None]
    ct, st = np.cos(theta), np.sin(theta)
    alpha = -w1 * st
    beta = w1 * (r * ct + system.L1)
    gamma = w2 * ct
    delta = w2 * (r * st + system.L2)
    first = np.cos(beta - delta) * _sin_over(alpha - gamma, R)
    second = np.cos(beta + delta) * _sin_over(alpha + gamma, R)
    return (first - second) / np.sqrt(system.L1 * system.L2)


def phi_entry(system: BasisSystem, k: int, ray: Ray, R: float) -> float:
    system._check(k)
    return float(phi_matrix(system, ray.theta, ray.r, R)[k, 0])


@dataclass(frozen=True)
class ProjectedBasis:
    """Basis integrated along the measurement rays, plus spectral weights.

    ``Phi[k, j]`` is the integral of basis function `k` along ray `j`;
    ``Lambda[k]`` is the prior spectral density at ``sqrt(eigenvalue[k])``.
    """

    system: BasisSystem
    Phi: np.ndarray
    Lambda: np.ndarray
    spec: CovarianceSpec

    @property
    def m(self) -> int:
        return self.Phi.shape[0]

    @property
    def n(self) -> int:
        return self.Phi.shape[1]

    def with_spec(self, spec: CovarianceSpec) -> "ProjectedBasis":
        return ProjectedBasis(self.system, self.Phi, spectral_weights(self.system, spec), spec)

    def subset(self, idx) -> "ProjectedBasis":
        return ProjectedBasis(self.system, self.Phi[:, idx], self.Lambda, self.spec)


def spectral_weights(system: BasisSystem, spec: CovarianceSpec) -> np.ndarray:
    return spectral_density_radial(spec, np.sqrt(system.eigenvalues))


def assemble(system: BasisSystem, rays: ScanGeometry | Sinogram, spec: CovarianceSpec) -> ProjectedBasis:
    """Build ``Phi`` for the rays of a geometry or sinogram and ``Lambda`` for `spec`."""
    if isinstance(rays, ScanGeometry):
        theta, r = rays.ray_arrays()
    else:
        theta, r = rays.theta, rays.r
    Phi = phi_matrix(system, theta, r, rays.R)
    return ProjectedBasis(system, Phi, spectral_weights(system, spec), spec)


def save_matrix(path, a: np.ndarray) -> None:
    """Write a 2-D float matrix as two little-endian uint64 dims then row-major float64."""
    a = np.ascontiguousarray(a, dtype="<f8")
    if a.ndim != 2:
        raise ValueError("only 2-D matrices are supported")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", *a.shape))
        fh.write(a.tobytes())


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise ValueError(f"{path}: truncated matrix header")
    rows, cols = struct.unpack("<QQ", data[:16])
    if len(data) != 16 + 8 * rows * cols:
        raise ValueError(f"{path}: expected {rows}x{cols} float64 payload")
    return np.frombuffer(data, dtype="<f8", offset=16).reshape(rows, cols).astype(float)
