"""Filtered backprojection for parallel-beam sinograms."""

from __future__ import annotations

import enum

import numpy as np

from .geometry import GridSpec, ImageGrid, Sinogram


class FilterKind(str, enum.Enum):
    RAMLAK = "ramlak"
    SHEPPLOGAN = "shepplogan"
    COSINE = "cosine"
    HAMMING = "hamming"
    HANN = "hann"

    @classmethod
    def parse(cls, name) -> "FilterKind":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "").replace("_", "").replace(" ", "")
        if key in ("ramp", "ram-lak"):
            key = "ramlak"
        if key == "hanning":
            key = "hann"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown filter {name!r}; choose from "
                             f"{', '.join(k.value for k in cls)}") from None


def window(kind: FilterKind, omega, omega_nyquist: float) -> np.ndarray:
    """Apodisation window over ``|omega| <= omega_nyquist``; zero beyond it."""
    kind = FilterKind.parse(kind)
    w = np.abs(np.asarray(omega, dtype=float))
    x = w / omega_nyquist
    if kind is FilterKind.RAMLAK:
        out = np.ones_like(x)
    elif kind is FilterKind.SHEPPLOGAN:
        out = np.sinc(x / 2)  # numpy sinc is sin(pi t)/(pi t)
    elif kind is FilterKind.COSINE:
        out = np.cos(0.5 * np.pi * x)
    elif kind is FilterKind.HAMMING:
        out = 0.54 + 0.46 * np.cos(np.pi * x)
    else:
        out = 0.5 * (1.0 + np.cos(np.pi * x))
    return np.where(x <= 1.0, out, 0.0)


def frequency_response(kind, n_pad: int, spacing: float) -> np.ndarray:
    omega = 2.0 * np.pi * np.fft.fftfreq(n_pad, d=spacing)
    return np.abs(omega) * window(kind, omega, np.pi / spacing)


def padded_length(n: int) -> int:
    return 1 << max(1, int(np.ceil(np.log2(2 * n))))


def filter_projection(projection, kind, spacing: float) -> np.ndarray:
    """Ramp-filter one projection (or the last axis of a stack of them).

    The data are zero-padded to the next power of two at least twice their
    length, multiplied by ``|omega| * window(omega)`` in the frequency
    domain, transformed back and truncated.
    """
    if not spacing > 0:
        raise ValueError("ray spacing must be positive")
    p = np.asarray(projection, dtype=float)
    n = p.shape[-1]
    n_pad = padded_length(n)
    H = frequency_response(kind, n_pad, spacing)
    spec = np.fft.fft(p, n=n_pad, axis=-1) * H
    return np.real(np.fft.ifft(spec, axis=-1))[..., :n]


def fbp_reconstruct(sinogram: Sinogram, grid: GridSpec, kind="ramlak") -> ImageGrid:
    """Reconstruct on `grid` by filtering each projection and backprojecting with linear interpolation.

    Angles must be uniformly spaced over a half or a full turn. Pixels
    outside the scan disk are set to zero.
    """
    angles, offsets, table = sinogram.as_table()
    if angles.size < 1:
        raise ValueError("sinogram has no projections")
    if offsets.size < 2:
        raise ValueError("need at least two rays per projection")
    spacing = float(np.mean(np.diff(offsets)))
    filtered = filter_projection(table, kind, spacing)

    X1, X2 = grid.centers()
    img = np.zeros(grid.shape)
    for th, q in zip(angles, filtered):
        t = X1 * np.cos(th) + X2 * np.sin(th)
        img += np.interp(t, offsets, q, left=0.0, right=0.0)
    # f = (1/2pi) int_0^pi q dtheta = (1/4pi) int_0^2pi q dtheta; both give 1/(2 n_angles) per angle
    img /= 2.0 * angles.size
    img[X1 ** 2 + X2 ** 2 > sinogram.R ** 2] = 0.0
    return ImageGrid(img, grid.L1, grid.L2)
