"""Fourier ring correlation and radially summed power spectra."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, ParameterError


def ring_index(shape):
    """Integer radial frequency index (cycles per field) of each DFT bin."""
    h, w = shape
    fy = np.fft.fftfreq(h) * h
    fx = np.fft.fftfreq(w) * w
    return np.rint(np.hypot(fy[:, None], fx[None, :])).astype(int)


def n_rings(shape):
    return min(shape) // 2


@dataclass
class FrcCurve:
    k: np.ndarray
    frc: np.ndarray
    n_k: np.ndarray
    two_sigma: np.ndarray
    one_bit: np.ndarray
    empty: np.ndarray = field(default=None)

    def to_csv(self, path, label=""):
        from ..io import write_table

        return write_table(path, {"k": self.k, "frc": self.frc, "n_k": self.n_k,
                                  "two_sigma": self.two_sigma, "one_bit": self.one_bit},
                           f"frc {label} two_sigma_res={frc_resolution(self, 'two_sigma'):.6g} "
                           f"one_bit_res={frc_resolution(self, 'one_bit'):.6g}", gnuplot=True)


def thresholds(n_k):
    n = np.asarray(n_k, dtype=float)
    two_sigma = 2.0 / np.sqrt(n / 2.0)
    one_bit = (0.5 + 2.4142 / np.sqrt(n)) / (1.5 + 1.4142 / np.sqrt(n))
    return two_sigma, one_bit


def _ring_sums(values, idx, nr):
    return np.bincount(idx.ravel(), weights=values.ravel(), minlength=nr + 1)[: nr + 1]


def frc(img_a, img_b):
    """Correlation of two images over unit-width frequency rings 1..N/2."""
    a = np.asarray(img_a, dtype=float)
    b = np.asarray(img_b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError("FRC needs images of equal shape")
    return frc_from_spectra(np.fft.fft2(a), np.fft.fft2(b))


def frc_from_spectra(Fa, Fb):
    shape = Fa.shape
    idx = ring_index(shape)
    nr = n_rings(shape)
    idx = np.where(idx > nr, nr + 1, idx)
    cross = np.bincount(idx.ravel(), (Fa * np.conj(Fb)).real.ravel(), nr + 2)[1:nr + 1]
    ea = np.bincount(idx.ravel(), (np.abs(Fa) ** 2).ravel(), nr + 2)[1:nr + 1]
    eb = np.bincount(idx.ravel(), (np.abs(Fb) ** 2).ravel(), nr + 2)[1:nr + 1]
    n_k = np.bincount(idx.ravel(), minlength=nr + 2)[1:nr + 1]
    den = np.sqrt(ea * eb)
    empty = den == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        curve = np.where(empty, 0.0, cross / np.where(empty, 1.0, den))
    k = np.arange(1, nr + 1) / min(shape)
    ts, ob = thresholds(n_k)
    return FrcCurve(k, curve, n_k, ts, ob, empty)


def average_curves(curves):
    """Mean FRC over several curves with identical rings."""
    c0 = curves[0]
    mean = np.mean([c.frc for c in curves], axis=0)
    return FrcCurve(c0.k, mean, c0.n_k, c0.two_sigma, c0.one_bit, np.all([c.empty for c in curves], axis=0))


def frc_crossing(curve, threshold="two_sigma", persist=2):
    """Frequency (cycles/px) where the curve drops below the threshold, or
    ``None`` if it never does.

    A drop counts only if the curve stays below for ``persist`` consecutive
    rings (or until the last ring). Single-ring dips at zeros of the object
    spectrum are thereby skipped. The crossing is linearly interpolated
    between ring centres.
    """
    if threshold not in ("two_sigma", "one_bit"):
        raise ParameterError(f"unknown threshold {threshold!r}")
    if persist < 1:
        raise ParameterError("persist must be >= 1")
    thr = getattr(curve, threshold)
    d = curve.frc - thr
    # Low rings hold few samples and their thresholds can exceed 1, so the
    # search starts at the first ring that clears the threshold.
    above = np.flatnonzero(d >= 0)
    if above.size == 0:
        return float(curve.k[0])
    for i in range(above[0] + 1, len(d)):
        if np.all(d[i:i + persist] < 0):
            k0, k1 = curve.k[i - 1], curve.k[i]
            return float(k0 + (k1 - k0) * d[i - 1] / (d[i - 1] - d[i]))
    return None


def frc_resolution(curve, threshold="two_sigma", persist=2):
    """Resolution in px, ``1 / k_cross``; 2 px (Nyquist) when never crossed."""
    k = frc_crossing(curve, threshold, persist)
    return 2.0 if k is None else 1.0 / k


@dataclass
class Spectrum:
    k: np.ndarray
    power: np.ndarray
    scale: float
    size: int

    @property
    def step_size(self):
        """Half-wavelength step-size axis ``N / (2k)`` in px."""
        return self.size / (2.0 * self.k)

    def to_csv(self, path, label=""):
        from ..io import write_table

        return write_table(path, {"step_size": self.step_size, "power": self.power, "k": self.k},
                           f"power_spectrum {label} scale={self.scale:.6g}", gnuplot=True)


def ring_power(image):
    """Unnormalized ring sums of |DFT|^2 over every nonzero ring (corners
    included) for one image or a stack."""
    a = np.asarray(image, dtype=float)
    F = np.abs(np.fft.fft2(a)) ** 2
    idx = ring_index(a.shape[-2:]).ravel()
    nr = idx.max()
    if F.ndim == 2:
        return np.bincount(idx, F.ravel(), nr + 1)[1:]
    return np.array([np.bincount(idx, f.ravel(), nr + 1)[1:] for f in F])


def smooth_ring_power(image):
    """Ring sums with lattice jitter removed: ring mean times ``2 pi k``.

    Unit rings on a square grid hold irregular pixel counts, which makes raw
    sums jagged. Scaling the mean by the continuous ring length keeps the
    radial delta-ring weighting without that jitter.
    """
    a = np.asarray(image, dtype=float)
    counts = np.bincount(ring_index(a.shape[-2:]).ravel())[1:]
    k = np.arange(1, counts.size + 1)
    return ring_power(a) / counts * (2 * np.pi * k)


def power_spectrum(image):
    """Ring-summed power spectrum, DC excluded, scaled to a maximum of 1."""
    a = np.asarray(image, dtype=float)
    p = ring_power(a)
    if p.ndim > 1:
        p = p.mean(axis=0)
    top = p.max()
    scale = 1.0 / top if top > 0 else 0.0
    n = min(a.shape[-2:])
    return Spectrum(np.arange(1, len(p) + 1, dtype=float), p * scale, scale, n)
