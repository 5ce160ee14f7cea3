"""Stationary priors for 2-D fields described by covariance and spectral density.

Four families are supported. The squared exponential and Matérn families
have proper covariance functions. The Tikhonov (white noise) and Laplacian
families only have spectral densities; their covariance kernels are
degenerate, which is fine for the Hilbert-space basis expansion since it
uses nothing but the spectral density.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, kv

DIM = 2


class Family(str, enum.Enum):
    SE = "se"
    MATERN = "matern"
    TIKHONOV = "tikhonov"
    LAPLACIAN = "laplacian"

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("-", "").replace("_", "")
        aliases = {"se": cls.SE, "squaredexponential": cls.SE, "rbf": cls.SE,
                   "matern": cls.MATERN, "tikhonov": cls.TIKHONOV, "whitenoise": cls.TIKHONOV,
                   "laplacian": cls.LAPLACIAN, "laplace": cls.LAPLACIAN}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown covariance family {name!r}") from None

    @property
    def has_length_scale(self) -> bool:
        return self in (Family.SE, Family.MATERN)


class DegenerateCovarianceError(ValueError):
    """Raised when a covariance value is requested for a spectral-only family."""


@dataclass(frozen=True)
class CovarianceSpec:
    family: Family
    sigma_f: float
    length_scale: float | None = None
    nu: float | None = None

    def __post_init__(self):
        fam = self.family if isinstance(self.family, Family) else Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        if not self.sigma_f > 0:
            raise ValueError(f"sigma_f must be positive, got {self.sigma_f}")
        if fam.has_length_scale:
            if self.length_scale is None or not self.length_scale > 0:
                raise ValueError(f"{fam.value} prior needs a positive length_scale")
        elif self.length_scale is not None:
            raise ValueError(f"{fam.value} prior takes no length_scale")
        if fam is Family.MATERN:
            if self.nu is None or not self.nu > 0:
                raise ValueError("matern prior needs a positive nu")
        elif self.nu is not None:
            raise ValueError(f"{fam.value} prior takes no nu")

    def with_params(self, sigma_f: float, length_scale: float | None = None) -> "CovarianceSpec":
        return replace(self, sigma_f=sigma_f,
                       length_scale=length_scale if self.family.has_length_scale else None)


def _radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.abs(x)
    if x.shape[-1] != DIM:
        raise ValueError(f"expected vectors with last axis {DIM}, got shape {x.shape}")
    return np.linalg.norm(x, axis=-1)


def covariance_radial(spec: CovarianceSpec, dist) -> np.ndarray:
    """Covariance as a function of the distance ``||x - x'||``."""
    d = np.asarray(dist, dtype=float)
    s2 = spec.sigma_f ** 2
    if spec.family is Family.SE:
        return s2 * np.exp(-0.5 * (d / spec.length_scale) ** 2)
    if spec.family is Family.MATERN:
        nu = spec.nu
        z = np.sqrt(2.0 * nu) * d / spec.length_scale
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            body = np.exp((1.0 - nu) * np.log(2.0) - gammaln(nu) + nu * np.log(z)) * kv(nu, z)
        return s2 * np.where(z > 0, np.nan_to_num(body, nan=1.0, posinf=1.0), 1.0)
    raise DegenerateCovarianceError(
        f"covariance undefined for the {spec.family.value} prior; use its spectral density")


def covariance(spec: CovarianceSpec, r) -> np.ndarray:
    """Covariance at displacement vector(s) `r` with trailing axis of length 2."""
    return covariance_radial(spec, _radius(r))


def spectral_density_radial(spec: CovarianceSpec, w) -> np.ndarray:
    """Spectral density as a function of the angular frequency norm ``||omega||``."""
    w = np.asarray(w, dtype=float)
    s2 = spec.sigma_f ** 2
    fam = spec.family
    if fam is Family.SE:
        ell = spec.length_scale
        return s2 * (2.0 * np.pi) ** (DIM / 2) * ell ** DIM * np.exp(-0.5 * (ell * w) ** 2)
    if fam is Family.MATERN:
        ell, nu = spec.length_scale, spec.nu
        a = nu + DIM / 2
        log_c = (DIM * np.log(2.0) + (DIM / 2) * np.log(np.pi) + gammaln(a)
                 + nu * np.log(2.0 * nu) - gammaln(nu) - 2.0 * nu * np.log(ell))
        return s2 * np.exp(log_c - a * np.log(2.0 * nu / ell ** 2 + w * w))
    if fam is Family.TIKHONOV:
        return np.full(w.shape, s2)
    if np.any(w == 0):
        raise ZeroDivisionError("laplacian spectral density is singular at omega = 0")
    return s2 / w ** 4


def spectral_density(spec: CovarianceSpec, omega) -> np.ndarray:
    """Spectral density at angular frequency vector(s) `omega` (trailing axis 2)."""
    return spectral_density_radial(spec, _radius(omega))
