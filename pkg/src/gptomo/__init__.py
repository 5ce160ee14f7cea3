"""Sparse-view x-ray tomography with reduced-rank Gaussian-process priors."""

from .basis import BasisSystem, ProjectedBasis, assemble, basis_eval, phi_entry, phi_matrix
from .covariance import CovarianceSpec, Family, covariance, spectral_density
from .geometry import (
    Ellipse,
    EllipsePhantom,
    GridSpec,
    ImageGrid,
    Ray,
    ScanGeometry,
    Sinogram,
    add_noise,
    analytic_sinogram,
    pixel_sinogram,
    ray_point,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSystem", "ProjectedBasis", "assemble", "basis_eval", "phi_entry", "phi_matrix",
    "CovarianceSpec", "Family", "covariance", "spectral_density",
    "Ellipse", "EllipsePhantom", "GridSpec", "ImageGrid", "Ray", "ScanGeometry", "Sinogram",
    "add_noise", "analytic_sinogram", "pixel_sinogram", "ray_point",
]
