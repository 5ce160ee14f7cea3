"""L-curve and k-fold CV sweeps for the Tikhonov prior on the desk-scale data.

Prints the L-curve table with its corner and the CV grid with the selected
point. No MH run is needed, so this finishes in well under a minute.
"""

import argparse

import numpy as np

from gptomo.basis import BasisSystem
from gptomo.covariance import CovarianceSpec
from gptomo.experiment import ReplicaConfig, prepare
from gptomo.hyper import HyperProblem, cross_validate, l_curve, make_grid


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sigma-f", type=float, default=0.5)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    cfg = ReplicaConfig()
    data = prepare(cfg)
    system = BasisSystem.for_radius(cfg.R, cfg.m1, cfg.m2)
    prob = HyperProblem.from_sinogram(data.sinogram, system, CovarianceSpec("tikhonov", args.sigma_f))

    curve = l_curve(prob, np.geomspace(0.1, 10, 20), args.sigma_f)
    print(f"{'sigma':>10s} {'residual':>12s} {'solution':>12s}")
    for i, pt in enumerate(curve.points):
        mark = "  <- corner" if i == curve.corner_index else ""
        print(f"{pt.sigma:10.4g} {pt.residual_norm:12.5g} {pt.solution_norm:12.5g}{mark}")

    grid = make_grid(args.sigma_f * np.array([0.25, 0.5, 1.0, 2.0, 4.0]), [None], np.geomspace(0.1, 1.0, 5))
    rep = cross_validate(prob, grid, args.folds, args.seed)
    print(f"\n{'sigma_f':>10s} {'sigma':>10s} {'cv score':>12s}")
    for i, r in enumerate(rep.results):
        mark = "  <- best" if i == rep.best_index else ""
        print(f"{r.params[0]:10.4g} {r.params[2]:10.4g} {r.score:12.6g}{mark}")
    print(f"\ntrue noise sigma {cfg.noise_sigma:.4f}")


if __name__ == "__main__":
    main()
