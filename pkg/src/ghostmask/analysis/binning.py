"""Variance retained when patterns are binned to a coarser grid."""
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, DimensionError
from ..patterns import bin as bin_image


@dataclass
class BinningReport:
    factor: int
    spatial_ratio: float
    fourier_ratio: float
    truncation_ratio: float

    @property
    def oracle_error(self):
        return abs(self.fourier_ratio - self.spatial_ratio) / self.spatial_ratio

    @property
    def truncation_error(self):
        return abs(self.truncation_ratio - self.spatial_ratio) / self.spatial_ratio

    def to_csv(self, path, label=""):
        from ..io import write_table

        return write_table(path, {"factor": [self.factor], "spatial_ratio": [self.spatial_ratio],
                                  "fourier_ratio": [self.fourier_ratio],
                                  "truncation_ratio": [self.truncation_ratio]},
                           f"binning factor={self.factor} {label}")


def _check(image, factor):
    a = np.asarray(image, dtype=float)
    if a.ndim != 2 or factor < 1 or a.shape[0] % factor or a.shape[1] % factor:
        raise DimensionError(f"shape {a.shape} is not divisible by {factor}")
    if a.var() == 0:
        raise DegenerateInputError("constant image has no variance to bin")
    return a


def spatial_ratio(image, factor=2):
    """``var(bin(x)) / var(x)`` computed on pixels."""
    a = _check(image, factor)
    return float(bin_image(a, factor).var() / a.var())


def _box_response(n, factor):
    """DFT of a ``factor``-wide forward box average along one axis."""
    e = np.exp(2j * np.pi * np.fft.fftfreq(n))
    return sum(e**d for d in range(factor)) / factor


def fourier_ratio(image, factor=2):
    """Same ratio from DFT coefficients alone.

    The box-filtered spectrum is folded onto the coarse grid, so each
    retained coefficient collects its aliases. Parseval on both grids then
    gives the variances.
    """
    a = _check(image, factor)
    h, w = a.shape
    X = np.fft.fft2(a - a.mean())
    Y = X * _box_response(h, factor)[:, None] * _box_response(w, factor)[None, :]
    m, n = h // factor, w // factor
    B = Y.reshape(factor, m, factor, n).sum(axis=(0, 2)) / factor**2
    B[0, 0] = 0.0
    var_binned = (np.abs(B) ** 2).sum() / (m * n) ** 2
    var_full = (np.abs(X) ** 2).sum() / (h * w) ** 2
    return float(var_binned / var_full)


def truncation_ratio(image, factor=2):
    """Fraction of non-DC spectral energy inside the central ``1/factor`` band.

    This ideal low-pass picture ignores the box shape and aliasing.
    """
    a = _check(image, factor)
    F = np.abs(np.fft.fft2(a - a.mean())) ** 2
    ky = np.abs(np.fft.fftfreq(a.shape[0]))[:, None]
    kx = np.abs(np.fft.fftfreq(a.shape[1]))[None, :]
    keep = (ky < 0.5 / factor) & (kx < 0.5 / factor)
    return float(F[keep].sum() / F.sum())


def binning_report(image, factor=2):
    return BinningReport(factor, spatial_ratio(image, factor), fourier_ratio(image, factor),
                         truncation_ratio(image, factor))
