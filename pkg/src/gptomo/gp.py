"""Reduced-rank GP inference from line-integral data.

With ``f(x) = sum_k w_k phi_k(x)`` and prior ``w ~ N(0, diag(Lambda))`` the
measurements are ``y = Phi^T w + noise``. Two algebraically equivalent
factorisations of the posterior are used:

``"weight"``
    Cholesky of the ``m x m`` matrix ``I + D Phi Phi^T D / sigma^2`` with
    ``D = sqrt(Lambda)``. This is ``Lambda^-1 + Phi Phi^T / sigma^2``
    symmetrically rescaled, so spectral weights that underflow to zero
    stay harmless.
``"data"``
    Cholesky of the ``n x n`` matrix ``Phi^T Lambda Phi + sigma^2 I``.

The weight form is used when ``m <= n`` and the data form otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .basis import BasisSystem, ProjectedBasis
from .geometry import GridSpec, ImageGrid

log = logging.getLogger(__name__)

JITTER = 1e-10
JITTER_RETRIES = 3
VARIANCE_FLOOR = -1e-10


class FactorizationError(np.linalg.LinAlgError):
    pass


def choose_form(m: int, n: int) -> str:
    return "weight" if m <= n else "data"


def cholesky(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor, retrying with escalating diagonal jitter.

    The first retry adds ``1e-10 * trace / size``; each further retry
    multiplies that by 10, up to three retries.
    """
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    size = a.shape[0]
    jitter = JITTER * np.trace(a) / size
    for attempt in range(JITTER_RETRIES):
        log.info("cholesky of %s failed; retrying with jitter %.3e", what, jitter)
        try:
            return np.linalg.cholesky(a + jitter * np.eye(size))
        except np.linalg.LinAlgError:
            jitter *= 10
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(a)
    raise FactorizationError(
        f"{what} ({size}x{size}) is not positive definite after {JITTER_RETRIES} jitter retries "
        f"(condition number {cond:.3e})")


@dataclass(frozen=True, eq=False)
class WeightPosterior:
    """Gaussian posterior over basis weights.

    ``mu_w`` is the posterior mean; `chol` is the lower Cholesky factor of
    the system named by `form` (see the module docstring).
    """

    mu_w: np.ndarray
    form: str
    chol: np.ndarray
    Lambda: np.ndarray
    Phi: np.ndarray
    sigma: float

    @property
    def m(self) -> int:
        return self.mu_w.size

    def _split(self, A):
        """Return ``(U, W)`` with ``A^T Sigma_w A = U^T U - W^T W`` (data form) or ``W^T W`` (weight form)."""
        d = np.sqrt(self.Lambda)
        U = d[:, None] * A
        if self.form == "weight":
            return None, solve_triangular(self.chol, U, lower=True)
        G = d[:, None] * self.Phi
        return U, solve_triangular(self.chol, G.T @ U, lower=True)

    def variance_of(self, A: np.ndarray) -> np.ndarray:
        """Diagonal of ``A^T Sigma_w A`` for an ``(m, p)`` matrix `A`."""
        U, W = self._split(np.asarray(A, dtype=float).reshape(self.m, -1))
        if U is None:
            var = np.sum(W * W, axis=0)
        else:
            var = np.sum(U * U, axis=0) - np.sum(W * W, axis=0)
        return np.where(var < 0, 0.0, var)

    def covariance_of(self, A: np.ndarray) -> np.ndarray:
        """Full ``A^T Sigma_w A`` for an ``(m, p)`` matrix `A`."""
        U, W = self._split(np.asarray(A, dtype=float).reshape(self.m, -1))
        cov = W.T @ W if U is None else U.T @ U - W.T @ W
        return 0.5 * (cov + cov.T)

    def weight_covariance(self) -> np.ndarray:
        return self.covariance_of(np.eye(self.m))


def fit_weights(basis: ProjectedBasis, y, sigma: float, form: str | None = None) -> WeightPosterior:
    """Posterior over basis weights given measurements `y` and noise SD `sigma`."""
    y = np.asarray(y, dtype=float).ravel()
    Phi, Lam = basis.Phi, basis.Lambda
    m, n = Phi.shape
    if y.size != n:
        raise ValueError(f"y has {y.size} entries but Phi has {n} columns")
    if not sigma > 0:
        raise ValueError(f"noise sigma must be positive, got {sigma}")
    form = form or choose_form(m, n)
    s2 = sigma * sigma
    d = np.sqrt(Lam)
    G = d[:, None] * Phi
    if form == "weight":
        B = G @ G.T / s2
        B[np.diag_indices(m)] += 1.0
        L = cholesky(B, "weight-space precision")
        mu = d * cho_solve((L, True), G @ y / s2)
    elif form == "data":
        C = G.T @ G
        C[np.diag_indices(n)] += s2
        L = cholesky(C, "data-space covariance")
        mu = d * (G @ cho_solve((L, True), y))
    else:
        raise ValueError(f"unknown form {form!r}")
    return WeightPosterior(mu, form, L, Lam, Phi, float(sigma))


def predict_measurements(weights: WeightPosterior, basis: ProjectedBasis | None = None) -> np.ndarray:
    """Noise-free reprojection ``Phi^T mu_w`` of the posterior mean."""
    Phi = weights.Phi if basis is None else basis.Phi
    return Phi.T @ weights.mu_w


@dataclass(frozen=True)
class PosteriorField:
    mean: ImageGrid
    variance: ImageGrid | None
    params: dict = field(default_factory=dict)
    m: int = 0


def predict_field(weights: WeightPosterior, system: BasisSystem, grid: GridSpec,
                  with_variance: bool = False, params: dict | None = None,
                  chunk: int = 4096) -> PosteriorField:
    """Posterior mean (and optionally pointwise variance) on the pixel centres of `grid`."""
    if grid.L1 > system.L1 * (1 + 1e-12) or grid.L2 > system.L2 * (1 + 1e-12):
        raise ValueError("reconstruction grid must lie inside the basis rectangle")
    X1, X2 = grid.centers()
    x1, x2 = X1.ravel(), X2.ravel()
    mean = np.empty(x1.size)
    var = np.empty(x1.size) if with_variance else None
    for lo in range(0, x1.size, chunk):
        B = system.evaluate(x1[lo:lo + chunk], x2[lo:lo + chunk])
        mean[lo:lo + chunk] = B @ weights.mu_w
        if with_variance:
            var[lo:lo + chunk] = weights.variance_of(B.T)
    mean_img = ImageGrid(mean.reshape(grid.shape), grid.L1, grid.L2)
    var_img = ImageGrid(var.reshape(grid.shape), grid.L1, grid.L2) if with_variance else None
    return PosteriorField(mean_img, var_img, dict(params or {}), system.m)


class MarginalLikelihood:
    """Log marginal likelihood ``log N(y | 0, Phi^T Lambda Phi + sigma^2 I)`` without the ``2 pi`` constant.

    Quantities that do not depend on the hyperparameters (``Phi Phi^T`` and
    ``Phi y`` for the weight form) are computed once, so repeated calls
    with new ``Lambda`` and ``sigma`` cost one Cholesky factorisation.
    """

    def __init__(self, Phi: np.ndarray, y, form: str | None = None):
        self.Phi = np.asarray(Phi, dtype=float)
        self.y = np.asarray(y, dtype=float).ravel()
        m, n = self.Phi.shape
        if self.y.size != n:
            raise ValueError(f"y has {self.y.size} entries but Phi has {n} columns")
        self.form = form or choose_form(m, n)
        self.yy = float(self.y @ self.y)
        if self.form == "weight":
            self.gram = self.Phi @ self.Phi.T
            self.Phi_y = self.Phi @ self.y

    @property
    def n(self) -> int:
        return self.y.size

    def __call__(self, Lambda, sigma: float) -> float:
        Lambda = np.asarray(Lambda, dtype=float)
        s2 = sigma * sigma
        d = np.sqrt(Lambda)
        if self.form == "weight":
            B = (d[:, None] * self.gram) * (d[None, :] / s2)
            B[np.diag_indices_from(B)] += 1.0
            L = cholesky(B, "weight-space precision")
            c = solve_triangular(L, d * self.Phi_y, lower=True)
            logdet = self.n * np.log(s2) + 2.0 * np.sum(np.log(np.diag(L)))
            quad = (self.yy - (c @ c) / s2) / s2
        else:
            G = d[:, None] * self.Phi
            C = G.T @ G
            C[np.diag_indices_from(C)] += s2
            L = cholesky(C, "data-space covariance")
            c = solve_triangular(L, self.y, lower=True)
            logdet = 2.0 * np.sum(np.log(np.diag(L)))
            quad = c @ c
        return float(-0.5 * logdet - 0.5 * quad)


def log_marginal_likelihood(Phi, Lambda, y, sigma: float, form: str | None = None) -> float:
    if not sigma > 0:
        raise ValueError(f"noise sigma must be positive, got {sigma}")
    return MarginalLikelihood(Phi, y, form)(Lambda, sigma)


def log_prior(sigma_f: float, length_scale: float | None, sigma: float) -> float:
    """Log density of the scale-invariant ``1/x`` priors on each hyperparameter."""
    out = -np.log(sigma_f) - np.log(sigma)
    if length_scale is not None:
        out -= np.log(length_scale)
    return float(out)


def log_marginal_posterior(basis: ProjectedBasis, y, sigma_f: float, length_scale: float | None,
                           sigma: float, form: str | None = None) -> float:
    """Unnormalised log posterior of ``(sigma_f, length_scale, sigma)``.

    `length_scale` is ignored (pass ``None``) for families without one.
    """
    if not length_scale_ok(basis, length_scale) or not sigma_f > 0 or not sigma > 0:
        raise ValueError("hyperparameters must be positive")
    spec = basis.spec.with_params(sigma_f, length_scale)
    ell = spec.length_scale
    Lam = basis.with_spec(spec).Lambda
    return log_marginal_likelihood(basis.Phi, Lam, y, sigma, form) + log_prior(sigma_f, ell, sigma)


def length_scale_ok(basis: ProjectedBasis, length_scale) -> bool:
    if not basis.spec.family.has_length_scale:
        return True
    return length_scale is not None and length_scale > 0
