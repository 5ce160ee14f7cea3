"""Plain-text file formats.

All formats are whitespace-delimited; blank lines and lines starting with
``#`` are ignored on reading. Floats are written with 17 significant
digits so every value round-trips exactly.

phantom     one ellipse per line: ``c1 c2 a b psi rho``
sinogram    header ``n R``, then n lines ``theta r y``
image       header ``N1 N2 L1 L2``, then N1 rows of N2 values, top row first
trace       header ``iter sigma_f l sigma logpost accepted``, one row per iteration
config      ``key=value`` lines
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .covariance import CovarianceSpec, Family
from .geometry import Ellipse, EllipsePhantom, ImageGrid, Sinogram
from .hyper import CVReport, ChainTrace, LCurve

FMT = "%.17g"
TRACE_HEADER = "iter sigma_f l sigma logpost accepted"


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, lineno: int | None, msg: str):
        where = f"{path}" if lineno is None else f"{path}:{lineno}"
        super().__init__(f"{where}: {msg}")


def _fmt(x) -> str:
    return FMT % x


def _data_lines(path):
    """Yield ``(lineno, stripped_line)`` for data lines."""
    text = Path(path).read_text()
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield i, line


def _comments(path) -> dict:
    """``# key=value`` comment metadata."""
    meta = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line.startswith("#") and "=" in line:
            k, v = line[1:].split("=", 1)
            meta[k.strip()] = v.strip()
    return meta


def _floats(path, lineno, line, count=None):
    parts = line.split()
    if count is not None and len(parts) != count:
        raise FormatError(path, lineno, f"expected {count} values, found {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None


# phantom ---------------------------------------------------------------------


def write_phantom(path, phantom: EllipsePhantom) -> None:
    lines = ["# c1 c2 a b psi rho"]
    for e in phantom.ellipses:
        lines.append(" ".join(_fmt(v) for v in (e.c1, e.c2, e.a, e.b, e.psi, e.rho)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_phantom(path) -> EllipsePhantom:
    ellipses = []
    for lineno, line in _data_lines(path):
        vals = _floats(path, lineno, line, 6)
        try:
            ellipses.append(Ellipse(*vals))
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    return EllipsePhantom(tuple(ellipses))


# sinogram --------------------------------------------------------------------


def write_sinogram(path, sino: Sinogram) -> None:
    lines = []
    if sino.noise_sigma is not None:
        lines.append(f"# noise_sigma={_fmt(sino.noise_sigma)}")
    lines.append(f"{sino.n} {_fmt(sino.R)}")
    lines += [f"{_fmt(t)} {_fmt(r)} {_fmt(y)}" for t, r, y in zip(sino.theta, sino.r, sino.y)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_sinogram(path) -> Sinogram:
    rows = list(_data_lines(path))
    if not rows:
        raise FormatError(path, None, "empty sinogram file")
    lineno, head = rows[0]
    parts = head.split()
    if len(parts) != 2:
        raise FormatError(path, lineno, "header must be 'n R'")
    try:
        n, R = int(parts[0]), float(parts[1])
    except ValueError as exc:
        raise FormatError(path, lineno, f"bad header: {exc}") from None
    if len(rows) - 1 != n:
        raise FormatError(path, lineno, f"header announces {n} rays but file has {len(rows) - 1}")
    data = np.array([_floats(path, i, l, 3) for i, l in rows[1:]]).reshape(n, 3)
    meta = _comments(path)
    sig = float(meta["noise_sigma"]) if "noise_sigma" in meta else None
    return Sinogram(data[:, 0], data[:, 1], data[:, 2], R, sig)


# image -----------------------------------------------------------------------


def write_image(path, img: ImageGrid) -> None:
    n1, n2 = img.shape
    lines = [f"{n1} {n2} {_fmt(img.L1)} {_fmt(img.L2)}"]
    lines += [" ".join(_fmt(v) for v in row) for row in img.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_image(path) -> ImageGrid:
    rows = list(_data_lines(path))
    if not rows:
        raise FormatError(path, None, "empty image file")
    lineno, head = rows[0]
    parts = head.split()
    if len(parts) != 4:
        raise FormatError(path, lineno, "header must be 'N1 N2 L1 L2'")
    try:
        n1, n2 = int(parts[0]), int(parts[1])
        L1, L2 = float(parts[2]), float(parts[3])
    except ValueError as exc:
        raise FormatError(path, lineno, f"bad header: {exc}") from None
    if len(rows) - 1 != n1:
        raise FormatError(path, lineno, f"header announces {n1} rows but file has {len(rows) - 1}")
    vals = np.array([_floats(path, i, l, n2) for i, l in rows[1:]])
    return ImageGrid(vals, L1, L2)


# trace -----------------------------------------------------------------------


def write_trace(path, trace: ChainTrace) -> None:
    scales = " ".join(_fmt(s) for s in trace.proposal_scales)
    lines = [f"# burn_in={trace.burn_in}", f"# proposal_scales={scales}",
             f"# seed={trace.seed}", TRACE_HEADER]
    for it, sf, ell, sg, lp, acc in zip(trace.iterations, trace.sigma_f, trace.length_scale,
                                        trace.sigma, trace.logpost, trace.accepted):
        lines.append(f"{it} {_fmt(sf)} {_fmt(ell)} {_fmt(sg)} {_fmt(lp)} {int(acc)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> ChainTrace:
    rows = list(_data_lines(path))
    if not rows or rows[0][1].split() != TRACE_HEADER.split():
        raise FormatError(path, rows[0][0] if rows else None, f"expected header '{TRACE_HEADER}'")
    data = np.array([_floats(path, i, l, 6) for i, l in rows[1:]]).reshape(-1, 6)
    meta = _comments(path)
    try:
        burn_in = int(meta.get("burn_in", 0))
        scales = tuple(float(s) for s in meta.get("proposal_scales", "0.1 0.1 0.1").split())
        seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
    except ValueError as exc:
        raise FormatError(path, None, f"bad metadata: {exc}") from None
    return ChainTrace(data[:, 1], data[:, 2], data[:, 3], data[:, 4], data[:, 5].astype(bool),
                      burn_in, scales, seed)


# config ----------------------------------------------------------------------


def read_config(path) -> dict:
    cfg = {}
    for lineno, line in _data_lines(path):
        if "=" not in line:
            raise FormatError(path, lineno, "expected key=value")
        k, v = line.split("=", 1)
        k, v = k.strip(), v.strip()
        if not k:
            raise FormatError(path, lineno, "empty key")
        cfg[k] = v
    return cfg


def write_config(path, cfg: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in cfg.items()))


def _opt_float(cfg, key, path):
    if key not in cfg:
        return None
    try:
        return float(cfg[key])
    except ValueError:
        raise FormatError(path, None, f"{key} must be a number, got {cfg[key]!r}") from None


def prior_from_config(cfg: dict, path="<config>") -> tuple[CovarianceSpec, float | None]:
    """Build the prior and the optional fixed noise level ``sigma`` from a config mapping."""
    try:
        fam = Family.parse(cfg.get("family", "matern"))
    except ValueError as exc:
        raise FormatError(path, None, str(exc)) from None
    sigma_f = _opt_float(cfg, "sigma_f", path)
    sigma_f = 1.0 if sigma_f is None else sigma_f
    ell = _opt_float(cfg, "length_scale", path)
    nu = _opt_float(cfg, "nu", path)
    if fam.has_length_scale and ell is None:
        ell = 1.0
    if not fam.has_length_scale:
        ell = None
    if fam is Family.MATERN and nu is None:
        nu = 1.0
    if fam is not Family.MATERN:
        nu = None
    try:
        spec = CovarianceSpec(fam, sigma_f, ell, nu)
    except ValueError as exc:
        raise FormatError(path, None, str(exc)) from None
    return spec, _opt_float(cfg, "sigma", path)


def prior_to_config(spec: CovarianceSpec, sigma: float | None = None) -> dict:
    cfg = {"family": spec.family.value, "sigma_f": _fmt(spec.sigma_f)}
    if spec.length_scale is not None:
        cfg["length_scale"] = _fmt(spec.length_scale)
    if spec.nu is not None:
        cfg["nu"] = _fmt(spec.nu)
    if sigma is not None:
        cfg["sigma"] = _fmt(sigma)
    return cfg


# sweeps ----------------------------------------------------------------------


def write_lcurve(path, curve: LCurve) -> None:
    lines = [f"# corner_index={curve.corner_index}", "sigma residual_norm solution_norm"]
    lines += [f"{_fmt(p.sigma)} {_fmt(p.residual_norm)} {_fmt(p.solution_norm)}" for p in curve.points]
    Path(path).write_text("\n".join(lines) + "\n")


def write_cv(path, report: CVReport) -> None:
    lines = [f"# best_index={report.best_index}", f"# k={report.best.k}",
             f"# seed={report.best.seed}", "sigma_f l sigma score"]
    for r in report.results:
        sf, ell, sg = r.params
        lines.append(" ".join(_fmt(v) for v in (sf, np.nan if ell is None else ell, sg, r.score)))
    Path(path).write_text("\n".join(lines) + "\n")
