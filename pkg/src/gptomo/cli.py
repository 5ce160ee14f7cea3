"""Command-line interface.

Exit status is 0 on success, 2 for usage errors and malformed input files,
and 1 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .basis import BasisSystem
from .fbp import FilterKind, fbp_reconstruct
from .geometry import (
    EllipsePhantom,
    GridSpec,
    ScanGeometry,
    add_noise,
    analytic_sinogram,
    pixel_sinogram,
)
from .gp import FactorizationError
from .hyper import (
    HyperProblem,
    chain_estimate,
    cross_validate,
    integrated_autocorr_time,
    l_curve,
    make_grid,
    mh_sample,
    reconstruct,
    reconstruct_averaged,
)
from .metrics import evaluate

log = logging.getLogger("gptomo")


class UsageError(Exception):
    pass


def _grid(args, R: float) -> GridSpec:
    half = args.half_width if args.half_width is not None else R
    return GridSpec.square(args.n, half)


def _float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


# subcommands -----------------------------------------------------------------


def cmd_phantom(args) -> int:
    if args.desc:
        ph = io.read_phantom(args.desc)
    elif args.kind == "disk":
        ph = EllipsePhantom.disk(0.5 * args.R)
    else:
        ph = EllipsePhantom.chest(args.R)
    ph.check_inside(args.R)
    if args.out_desc:
        io.write_phantom(args.out_desc, ph)
    if args.out_image:
        io.write_image(args.out_image, ph.rasterize(_grid(args, args.R)))
    return 0


def cmd_project(args) -> int:
    span = np.deg2rad(args.span)
    geo = ScanGeometry(args.R, args.angles, args.rays, span)
    if args.phantom:
        sino = analytic_sinogram(io.read_phantom(args.phantom), geo)
    else:
        sino = pixel_sinogram(io.read_image(args.image), geo)
    if args.noise_sigma:
        sino = add_noise(sino, args.noise_sigma, args.seed)
    io.write_sinogram(args.out, sino)
    return 0


def cmd_fbp(args) -> int:
    sino = io.read_sinogram(args.sinogram)
    img = fbp_reconstruct(sino, _grid(args, sino.R), args.filter)
    io.write_image(args.out, img)
    return 0


def cmd_gp(args) -> int:
    sino = io.read_sinogram(args.sinogram)
    cfg = io.read_config(args.prior) if args.prior else {}
    spec, sigma_cfg = io.prior_from_config(cfg, args.prior or "<defaults>")
    system = BasisSystem.for_radius(sino.R, args.m1, args.m2, margin=args.margin)
    problem = HyperProblem.from_sinogram(sino, system, spec)
    grid = _grid(args, sino.R)
    ell = spec.length_scale
    sigma = sigma_cfg if sigma_cfg is not None else sino.noise_sigma
    field = None

    if args.hyper == "fixed":
        if sigma is None:
            raise UsageError("--hyper fixed needs sigma= in the prior config")
        params = (spec.sigma_f, ell, sigma)
    elif args.hyper == "mh":
        if args.samples <= args.burn_in:
            raise UsageError("--samples must exceed --burn-in")
        scales = _float_list(args.proposal_scales, "--proposal-scales")
        if len(scales) != 3:
            raise UsageError("--proposal-scales needs three values")
        trace = mh_sample(problem, args.samples, args.burn_in, scales, args.seed)
        if args.trace_out:
            io.write_trace(args.trace_out, trace)
        est = chain_estimate(trace)
        params = est.as_tuple()
        print(_estimate_line(est, trace.acceptance_rate))
        if args.average_thin:
            field = reconstruct_averaged(problem, trace, grid, args.average_thin, args.variance)
    elif args.hyper == "lcurve":
        sig_grid = (_float_list(cfg["sigma_grid"], "sigma_grid") if "sigma_grid" in cfg
                    else np.geomspace(0.1, 10.0, 20))
        curve = l_curve(problem, sig_grid, spec.sigma_f, ell)
        if args.lcurve_out:
            io.write_lcurve(args.lcurve_out, curve)
        if curve.corner_sigma is None:
            raise UsageError("L-curve needs at least three sigma values for a corner")
        params = (spec.sigma_f, ell, curve.corner_sigma)
        print(f"L-curve corner sigma={curve.corner_sigma:.6g}")
    else:
        sf_grid = (_float_list(cfg["sigma_f_grid"], "sigma_f_grid") if "sigma_f_grid" in cfg
                   else spec.sigma_f * np.array([0.25, 0.5, 1.0, 2.0, 4.0]))
        if spec.family.has_length_scale:
            ell_grid = (_float_list(cfg["length_scale_grid"], "length_scale_grid")
                        if "length_scale_grid" in cfg else ell * np.array([0.5, 1.0, 2.0]))
        else:
            ell_grid = [None]
        sg_grid = (_float_list(cfg["sigma_grid"], "sigma_grid") if "sigma_grid" in cfg
                   else np.geomspace(0.1, 1.0, 5))
        report = cross_validate(problem, make_grid(sf_grid, ell_grid, sg_grid), args.folds, args.seed)
        if args.cv_out:
            io.write_cv(args.cv_out, report)
        params = report.best.params
        print(f"CV best sigma_f={params[0]:.6g} l={params[1]} sigma={params[2]:.6g} "
              f"score={report.best.score:.6g}")

    if field is None:
        field = reconstruct(problem, params, grid, args.variance)
    io.write_image(args.out_mean, field.mean)
    if args.variance:
        if not args.out_var:
            raise UsageError("--variance needs --out-var")
        io.write_image(args.out_var, field.variance)
    if args.prior_out:
        io.write_config(args.prior_out, io.prior_to_config(spec.with_params(params[0], params[1]), params[2]))
    return 0


def _estimate_line(est, acc) -> str:
    parts = []
    for name in ("sigma_f", "length_scale", "sigma"):
        if est.mean[name] is not None:
            parts.append(f"{name}={est.mean[name]:.6g} (sd {est.sd[name]:.3g})")
    return " ".join(parts) + f" acceptance={acc:.3f}"


def cmd_metrics(args) -> int:
    truth, rec = io.read_image(args.truth), io.read_image(args.reconstruction)
    if truth.shape != rec.shape:
        raise UsageError(f"image shapes differ: {truth.shape} vs {rec.shape}")
    for line in evaluate(truth, rec, args.peakval).lines():
        print(line)
    return 0


def cmd_trace(args) -> int:
    trace = io.read_trace(args.trace)
    if args.burn_in is not None:
        trace.burn_in = args.burn_in
    est = chain_estimate(trace)
    print(f"iterations={len(trace)} burn_in={trace.burn_in} retained={len(trace) - trace.burn_in}")
    print(_estimate_line(est, trace.acceptance_rate))
    kept = trace.retained()
    taus = [integrated_autocorr_time(kept[:, j]) for j in range(3) if not np.all(np.isnan(kept[:, j]))]
    print("autocorrelation_time=" + " ".join(f"{t:.1f}" for t in taus))
    return 0


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gptomo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_opts(sp):
        sp.add_argument("--n", type=int, default=64, help="pixels per side of the output image")
        sp.add_argument("--half-width", type=float, default=None,
                        help="image half-width (default: disk radius)")

    sp = sub.add_parser("phantom", help="write a phantom description and raster")
    sp.add_argument("--kind", choices=("chest", "disk"), default="chest")
    sp.add_argument("--desc", help="read ellipses from this description file instead")
    sp.add_argument("--R", type=float, default=32.0)
    sp.add_argument("--out-desc")
    sp.add_argument("--out-image")
    grid_opts(sp)
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("project", help="compute a (noisy) sinogram")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--phantom", help="ellipse description file (exact projector)")
    src.add_argument("--image", help="image file (pixel projector)")
    sp.add_argument("--R", type=float, default=32.0)
    sp.add_argument("--angles", type=int, default=9)
    sp.add_argument("--rays", type=int, default=95)
    sp.add_argument("--span", type=float, choices=(180.0, 360.0), default=180.0,
                    help="angular range in degrees")
    sp.add_argument("--noise-sigma", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("fbp", help="filtered backprojection")
    sp.add_argument("sinogram")
    sp.add_argument("--filter", type=FilterKind.parse, default=FilterKind.RAMLAK,
                    metavar="{" + "|".join(k.value for k in FilterKind) + "}")
    sp.add_argument("--out", required=True)
    grid_opts(sp)
    sp.set_defaults(func=cmd_fbp)

    sp = sub.add_parser("gp", help="reduced-rank GP reconstruction")
    sp.add_argument("sinogram")
    sp.add_argument("--prior", help="key=value prior config (family, sigma_f, length_scale, nu, sigma)")
    sp.add_argument("--hyper", choices=("mh", "fixed", "lcurve", "cv"), default="mh")
    sp.add_argument("--m1", type=int, default=32)
    sp.add_argument("--m2", type=int, default=None)
    sp.add_argument("--margin", type=float, default=1.25, help="basis half-width as a multiple of R")
    sp.add_argument("--samples", type=int, default=5000)
    sp.add_argument("--burn-in", type=int, default=1000)
    sp.add_argument("--proposal-scales", default="0.1,0.1,0.1")
    sp.add_argument("--average-thin", type=int, default=0,
                    help="average fields over every k-th retained MH sample instead of plug-in")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--variance", action="store_true", help="also compute the variance image")
    sp.add_argument("--out-mean", required=True)
    sp.add_argument("--out-var")
    sp.add_argument("--trace-out")
    sp.add_argument("--lcurve-out")
    sp.add_argument("--cv-out")
    sp.add_argument("--prior-out", help="write the selected hyperparameters as a config file")
    grid_opts(sp)
    sp.set_defaults(func=cmd_gp)

    sp = sub.add_parser("metrics", help="relative error and PSNR of a reconstruction")
    sp.add_argument("truth")
    sp.add_argument("reconstruction")
    sp.add_argument("--peakval", type=float, default=None)
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("trace", help="summarise an MH trace file")
    sp.add_argument("trace")
    sp.add_argument("--burn-in", type=int, default=None)
    sp.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "m2", 0) is None:
        args.m2 = args.m1
    try:
        return args.func(args)
    except (UsageError, io.FormatError, FileNotFoundError) as exc:
        print(f"gptomo {args.command}: {exc}", file=sys.stderr)
        return 2
    except (FactorizationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"gptomo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"gptomo {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
