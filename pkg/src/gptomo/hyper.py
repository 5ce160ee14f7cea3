"""
Hyperparameter estimation for the reduced-rank GP model.

* Random-walk Metropolis-Hastings over ``(sigma_f, length_scale, sigma)`` in
  log space. The ``1/x`` priors are flat in log space, so the sampled
  log-target is just the log marginal likelihood.
* The L-curve: residual norm against solution norm over a sweep of the
  noise level with the prior held fixed.
* Bayesian k-fold cross-validation over a parameter grid.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .basis import BasisSystem, ProjectedBasis, assemble
from .covariance import CovarianceSpec
from .geometry import GridSpec, ImageGrid, Sinogram
from .gp import (
    FactorizationError,
    MarginalLikelihood,
    PosteriorField,
    cholesky,
    fit_weights,
    log_prior,
    predict_field,
    predict_measurements,
)

log = logging.getLogger(__name__)

PARAM_NAMES = ("sigma_f", "length_scale", "sigma")


class HyperProblem:
    """Measurements plus the ``Phi`` matrix, which stays fixed while hyperparameters vary.

    `basis.spec` fixes the prior family (and ``nu`` for Matérn); its own
    ``sigma_f`` and ``length_scale`` are only defaults.
    """

    def __init__(self, basis: ProjectedBasis, y, R: float):
        self.basis = basis
        self.y = np.asarray(y, dtype=float).ravel()
        self.R = float(R)
        self._lik = MarginalLikelihood(basis.Phi, self.y)

    @classmethod
    def from_sinogram(cls, sinogram: Sinogram, system: BasisSystem, spec: CovarianceSpec) -> "HyperProblem":
        return cls(assemble(system, sinogram, spec), sinogram.y, sinogram.R)

    @property
    def family(self):
        return self.basis.spec.family

    @property
    def has_length_scale(self) -> bool:
        return self.family.has_length_scale

    @property
    def n(self) -> int:
        return self.y.size

    def active(self) -> tuple[int, ...]:
        """Indices into ``PARAM_NAMES`` of the parameters this family samples."""
        return (0, 1, 2) if self.has_length_scale else (0, 2)

    def basis_for(self, sigma_f: float, length_scale: float | None) -> ProjectedBasis:
        return self.basis.with_spec(self.basis.spec.with_params(sigma_f, length_scale))

    def log_likelihood(self, sigma_f: float, length_scale: float | None, sigma: float) -> float:
        return self._lik(self.basis_for(sigma_f, length_scale).Lambda, sigma)

    def log_posterior(self, sigma_f, length_scale, sigma) -> float:
        ell = length_scale if self.has_length_scale else None
        return self.log_likelihood(sigma_f, ell, sigma) + log_prior(sigma_f, ell, sigma)

    def unpack(self, log_params) -> tuple[float, float | None, float]:
        p = np.exp(np.asarray(log_params, dtype=float))
        if self.has_length_scale:
            return float(p[0]), float(p[1]), float(p[2])
        return float(p[0]), None, float(p[1])

    def log_target(self, log_params) -> float:
        """Log density of the log-parameters; ``-inf`` when the evaluation breaks down."""
        try:
            val = self.log_likelihood(*self.unpack(log_params))
        except (FactorizationError, FloatingPointError, ValueError):
            return -np.inf
        return val if np.isfinite(val) else -np.inf

    def initial_guess(self) -> tuple[float, float | None, float]:
        sd = float(np.std(self.y))
        sd = sd if sd > 0 else 1.0
        return sd, (self.R / 5 if self.has_length_scale else None), 0.1 * sd


def metropolis(log_target, x0, n_steps: int, scales, rng: np.random.Generator):
    """Random-walk Metropolis with independent Gaussian proposals.

    Returns ``(states, log_densities, accepted)`` holding the state after
    each of the `n_steps` proposals.
    """
    x = np.array(x0, dtype=float)
    scales = np.asarray(scales, dtype=float)
    lp = float(log_target(x))
    if not np.isfinite(lp):
        raise ValueError(f"initial state {x0} has non-finite log density {lp}")
    states = np.empty((n_steps, x.size))
    lps = np.empty(n_steps)
    accepted = np.zeros(n_steps, dtype=bool)
    for t in range(n_steps):
        prop = x + scales * rng.standard_normal(x.size)
        lp_prop = float(log_target(prop))
        if np.log(rng.random()) < lp_prop - lp:
            x, lp = prop, lp_prop
            accepted[t] = True
        states[t] = x
        lps[t] = lp
    return states, lps, accepted


@dataclass
class ChainTrace:
    """One row per MH iteration. ``length_scale`` is NaN for families without one.

    `logpost` is the log-space target (log marginal likelihood) at the
    stored state.
    """

    sigma_f: np.ndarray
    length_scale: np.ndarray
    sigma: np.ndarray
    logpost: np.ndarray
    accepted: np.ndarray
    burn_in: int = 0
    proposal_scales: tuple = (0.1, 0.1, 0.1)
    seed: int | None = None

    def __len__(self) -> int:
        return self.sigma.size

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self) else float("nan")

    def params(self) -> np.ndarray:
        return np.column_stack([self.sigma_f, self.length_scale, self.sigma])

    def retained(self, thin: int = 1) -> np.ndarray:
        """Post-burn-in parameter rows, keeping every `thin`-th."""
        if thin < 1:
            raise ValueError("thin must be >= 1")
        return self.params()[self.burn_in::thin]


def mh_sample(problem: HyperProblem, n_samples: int = 5000, burn_in: int = 1000,
              proposal_scales=(0.1, 0.1, 0.1), seed: int = 0, init=None) -> ChainTrace:
    """Sample the hyperparameter posterior of `problem`.

    `n_samples` counts every iteration including the `burn_in` ones that
    estimates later discard. `init` defaults to `HyperProblem.initial_guess`.
    For families without a length scale the middle proposal scale and
    initial value are ignored.
    """
    if not n_samples > burn_in >= 0:
        raise ValueError("need n_samples > burn_in >= 0")
    scales = np.asarray(proposal_scales, dtype=float)
    if scales.shape != (3,) or np.any(scales <= 0):
        raise ValueError("proposal_scales must be three positive numbers")
    sf, ell, sg = init if init is not None else problem.initial_guess()
    full = np.array([sf, ell if ell is not None else np.nan, sg], dtype=float)
    act = list(problem.active())
    if not np.all(full[act] > 0):
        raise ValueError(f"initial hyperparameters must be positive, got {tuple(full[act])}")
    x0 = np.log(full[act])
    rng = np.random.default_rng(seed)
    try:
        states, lps, acc = metropolis(problem.log_target, x0, n_samples, scales[act], rng)
    except ValueError as exc:
        raise ValueError(f"cannot start chain: {exc}") from None
    vals = np.full((n_samples, 3), np.nan)
    vals[:, act] = np.exp(states)
    log.info("MH finished: %d iterations, acceptance %.3f", n_samples, acc.mean())
    return ChainTrace(vals[:, 0], vals[:, 1], vals[:, 2], lps, acc, burn_in,
                      tuple(float(s) for s in scales), seed)


@dataclass(frozen=True)
class Estimate:
    mean: dict
    sd: dict

    def as_tuple(self) -> tuple:
        return tuple(self.mean[k] for k in PARAM_NAMES)


def chain_estimate(trace: ChainTrace, thin: int = 1) -> Estimate:
    """Posterior mean and standard deviation of each parameter after burn-in."""
    rows = trace.retained(thin)
    if rows.shape[0] == 0:
        raise ValueError("trace has no samples after burn-in")
    ddof = 1 if rows.shape[0] > 1 else 0
    mean, sd = {}, {}
    for j, name in enumerate(PARAM_NAMES):
        col = rows[:, j]
        if np.all(np.isnan(col)):
            mean[name] = sd[name] = None
        else:
            mean[name] = float(np.mean(col))
            sd[name] = float(np.std(col, ddof=ddof))
    return Estimate(mean, sd)


def integrated_autocorr_time(x) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window (c = 5)."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 2 or not np.any(x):
        return 1.0
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n) >= 5.0 * tau
    m = int(np.argmax(window)) if np.any(window) else n - 1
    return float(max(tau[m], 1.0))


# L-curve ---------------------------------------------------------------------


@dataclass(frozen=True)
class LCurvePoint:
    sigma: float
    residual_norm: float
    solution_norm: float


@dataclass(frozen=True)
class LCurve:
    points: list
    corner_index: int | None

    @property
    def corner_sigma(self) -> float | None:
        return None if self.corner_index is None else self.points[self.corner_index].sigma


def default_norm_grid(system: BasisSystem) -> GridSpec:
    """Grid over the whole basis rectangle fine enough that the pixel sum of squares equals the weight norm."""
    return GridSpec(2 * system.m2, 2 * system.m1, system.L1, system.L2)


def _menger_curvature(p0, p1, p2) -> float:
    a = np.linalg.norm(p1 - p0)
    b = np.linalg.norm(p2 - p1)
    c = np.linalg.norm(p2 - p0)
    if a * b * c == 0:
        return 0.0
    cross = (p1[0] - p0[0]) * (p2[1] - p1[1]) - (p1[1] - p0[1]) * (p2[0] - p1[0])
    return 2.0 * cross / (a * b * c)


def lcurve_corner(residual_norms, solution_norms) -> int | None:
    """Index of maximum signed curvature of the log-log polyline, ``None`` below 3 points."""
    if len(residual_norms) < 3:
        return None
    pts = np.column_stack([np.log(np.maximum(residual_norms, 1e-300)),
                           np.log(np.maximum(solution_norms, 1e-300))])
    kappa = [_menger_curvature(pts[i - 1], pts[i], pts[i + 1]) for i in range(1, len(pts) - 1)]
    return int(np.argmax(kappa)) + 1


def l_curve(problem: HyperProblem, sigma_grid, sigma_f: float, length_scale: float | None = None,
            grid: GridSpec | None = None) -> LCurve:
    """Sweep the noise level with the prior fixed at ``(sigma_f, length_scale)``.

    The solution norm is the discrete L2 norm of the mean image on `grid`
    (default: the full basis rectangle, see `default_norm_grid`).
    """
    sig = np.asarray(sigma_grid, dtype=float)
    if np.any(sig <= 0) or np.any(np.diff(sig) < 0):
        raise ValueError("sigma grid must be positive and ascending")
    basis = problem.basis_for(sigma_f, length_scale)
    system = basis.system
    grid = grid or default_norm_grid(system)
    B = system.evaluate_grid(grid)
    points = []
    for s in sig:
        w = fit_weights(basis, problem.y, s)
        res = float(np.linalg.norm(predict_measurements(w) - problem.y))
        sol = float(np.linalg.norm(B @ w.mu_w) * np.sqrt(grid.pixel_area))
        points.append(LCurvePoint(float(s), res, sol))
    corner = lcurve_corner([p.residual_norm for p in points], [p.solution_norm for p in points])
    return LCurve(points, corner)


# cross-validation ------------------------------------------------------------


@dataclass(frozen=True)
class CVResult:
    params: tuple
    score: float
    k: int
    seed: int


@dataclass(frozen=True)
class CVReport:
    results: list
    best_index: int

    @property
    def best(self) -> CVResult:
        return self.results[self.best_index]


def make_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"cannot split {n} measurements into {k} nonempty folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def make_grid(sigma_f_values, length_scale_values, sigma_values) -> list[tuple]:
    """Cartesian product; pass ``[None]`` for length scales of ℓ-free families."""
    return list(itertools.product(sigma_f_values, length_scale_values, sigma_values))


def gaussian_logpdf(x, mean, cov) -> float:
    L = cholesky(cov, "predictive covariance")
    z = np.linalg.solve(L, x - mean) if L.shape[0] else np.zeros(0)
    return float(-0.5 * (z @ z) - np.sum(np.log(np.diag(L))) - 0.5 * x.size * np.log(2 * np.pi))


def cv_score(problem: HyperProblem, params, folds) -> float:
    """Sum over folds of the log predictive density of the held-out measurements."""
    sigma_f, ell, sigma = params
    basis = problem.basis_for(sigma_f, ell if problem.has_length_scale else None)
    n = problem.n
    total = 0.0
    for test in folds:
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        w = fit_weights(basis.subset(train), problem.y[train], sigma)
        Phi_t = basis.Phi[:, test]
        cov = w.covariance_of(Phi_t)
        cov[np.diag_indices_from(cov)] += sigma * sigma
        total += gaussian_logpdf(problem.y[test], Phi_t.T @ w.mu_w, cov)
    return total


def cross_validate(problem: HyperProblem, param_grid, k: int = 10, seed: int = 0) -> CVReport:
    """Score every ``(sigma_f, length_scale, sigma)`` in `param_grid` by k-fold CV.

    The best point maximises the score; ties go to the smaller ``sigma``,
    then to the earlier grid entry.
    """
    grid = [tuple(p) for p in param_grid]
    if not grid:
        raise ValueError("parameter grid is empty")
    folds = make_folds(problem.n, k, seed)
    results = []
    for p in grid:
        try:
            score = cv_score(problem, p, folds)
        except FactorizationError:
            score = -np.inf
        results.append(CVResult(p, score, k, seed))
    best = min(range(len(grid)), key=lambda i: (-results[i].score, grid[i][2], i))
    return CVReport(results, best)


# reconstruction --------------------------------------------------------------


def reconstruct(problem: HyperProblem, params, grid: GridSpec, with_variance: bool = False):
    """Plug-in posterior field at fixed ``(sigma_f, length_scale, sigma)``."""
    sigma_f, ell, sigma = params
    ell = ell if problem.has_length_scale else None
    basis = problem.basis_for(sigma_f, ell)
    w = fit_weights(basis, problem.y, sigma)
    return predict_field(w, basis.system, grid, with_variance,
                         params={"sigma_f": sigma_f, "length_scale": ell, "sigma": sigma})


def reconstruct_averaged(problem: HyperProblem, trace: ChainTrace, grid: GridSpec, thin: int = 100,
                         with_variance: bool = False):
    """Average the posterior field over thinned post-burn-in MH samples.

    The variance combines the per-sample variances with the spread of the
    per-sample means (law of total variance).
    """
    rows = trace.retained(thin)
    if rows.shape[0] == 0:
        raise ValueError("trace has no samples after burn-in")
    means, variances = [], []
    for sf, ell, sg in rows:
        fld = reconstruct(problem, (sf, None if np.isnan(ell) else ell, sg), grid, with_variance)
        means.append(fld.mean.values)
        if with_variance:
            variances.append(fld.variance.values)
    means = np.array(means)
    mean = means.mean(axis=0)
    var = None
    if with_variance:
        var = np.mean(variances, axis=0) + means.var(axis=0)
    return PosteriorField(ImageGrid(mean, grid.L1, grid.L2),
                          None if var is None else ImageGrid(var, grid.L1, grid.L2),
                          {"averaged_samples": int(rows.shape[0])}, problem.basis.m)
