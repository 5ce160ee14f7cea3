"""Figures of merit for reconstructions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _values(img) -> np.ndarray:
    return np.asarray(getattr(img, "values", img), dtype=float)


def relative_error(f_true, f_rec) -> float:
    """Relative L2 error in percent."""
    a, b = _values(f_true), _values(f_rec)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    ref = np.linalg.norm(a)
    if ref == 0:
        raise ValueError("relative error undefined for an all-zero ground truth")
    return float(100.0 * np.linalg.norm(a - b) / ref)


def psnr(f_true, f_rec, peakval: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images.

    `peakval` defaults to the maximum of `f_true`.
    """
    a, b = _values(f_true), _values(f_rec)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    peak = float(np.max(a)) if peakval is None else float(peakval)
    if not peak > 0:
        raise ValueError("peakval must be positive")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


@dataclass(frozen=True)
class Metrics:
    relative_error: float
    psnr: float
    peakval: float
    peak_convention: str

    def lines(self) -> list[str]:
        ps = "inf" if np.isinf(self.psnr) else f"{self.psnr:.4f}"
        return [f"RE={self.relative_error:.4f}%", f"PSNR={ps} dB",
                f"peakval={self.peakval:.17g} ({self.peak_convention})"]


def evaluate(f_true, f_rec, peakval: float | None = None) -> Metrics:
    convention = "max(f_true)" if peakval is None else "user"
    peak = float(np.max(_values(f_true))) if peakval is None else float(peakval)
    return Metrics(relative_error(f_true, f_rec), psnr(f_true, f_rec, peak), peak, convention)
