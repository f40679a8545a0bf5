"""Slow reference implementations used as test oracles.

Each one is written from the defining formula with explicit loops and
shares no code with the package.
"""
import math

import numpy as np


def legendre(p):
    """Legendre symbol C_i for i = 0..p-1 by enumerating squares mod p."""
    squares = {(k * k) % p for k in range(1, p)}
    return [0 if i == 0 else (1 if i in squares else -1) for i in range(p)]


def mura_tile(p):
    c = legendre(p)
    tile = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if i == 0:
                tile[i, j] = 0
            elif j == 0:
                tile[i, j] = 1
            elif c[i] * c[j] == 1:
                tile[i, j] = 1
    return tile


def dft2(a):
    """Explicit DFT matrix product (no FFT)."""
    h, w = a.shape
    Fy = np.exp(-2j * np.pi * np.outer(np.arange(h), np.arange(h)) / h)
    Fx = np.exp(-2j * np.pi * np.outer(np.arange(w), np.arange(w)) / w)
    return Fy @ a @ Fx.T


def frc_loops(a, b):
    """FRC over unit rings 1..N/2 by visiting every frequency bin."""
    n = a.shape[0]
    Fa, Fb = dft2(a), dft2(b)
    nr = n // 2
    num = np.zeros(nr + 1)
    da = np.zeros(nr + 1)
    db = np.zeros(nr + 1)
    for u in range(n):
        for v in range(n):
            ku = u if u <= n // 2 else u - n
            kv = v if v <= n // 2 else v - n
            r = int(round(math.hypot(ku, kv)))
            if 1 <= r <= nr:
                num[r] += (Fa[u, v] * np.conj(Fb[u, v])).real
                da[r] += abs(Fa[u, v]) ** 2
                db[r] += abs(Fb[u, v]) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        return (num / np.sqrt(da * db))[1:]


def kaczmarz_rows(A, b, sweeps, relaxation, orders):
    """Row-by-row Kaczmarz with an explicit list of per-sweep row orders."""
    x = np.zeros(A.shape[1])
    for s in range(sweeps):
        for i in orders[s]:
            n = A[i] @ A[i]
            if n > 0:
                x = x + relaxation * (b[i] - A[i] @ x) / n * A[i]
    return x


def adjoint_sum(patterns, buckets, mean_corrected=True):
    """Mean-corrected adjoint as the explicit sum over j."""
    J = len(patterns)
    mean_p = sum(patterns) / J
    mean_b = sum(buckets) / J
    out = np.zeros_like(patterns[0], dtype=float)
    for j in range(J):
        p = patterns[j] - mean_p if mean_corrected else patterns[j]
        out += p * (buckets[j] - mean_b)
    return out


def forward_gradient_sq(img):
    """Sum of squared forward differences; the last row/column repeats the
    neighbouring difference."""
    h, w = img.shape
    total = 0.0
    for y in range(h):
        for x in range(w):
            xa = x if x < w - 1 else w - 2
            ya = y if y < h - 1 else h - 2
            gx = img[y, xa + 1] - img[y, xa]
            gy = img[ya + 1, x] - img[ya, x]
            total += gx * gx + gy * gy
    return total


def autocorrelation_fwhm(mask):
    """FWHM of the central peak of the periodic autocorrelation of the
    mean-removed mask, by direct summation over shifts along x."""
    a = mask - mask.mean()
    h, w = a.shape
    lags = range(-6, 7)
    prof = np.array([np.sum(a * np.roll(a, d, axis=1)) for d in lags])
    prof = prof / prof[6]
    # half-max crossings on each side by linear interpolation
    right = next(i for i in range(6, 13) if prof[i] < 0.5)
    xr = (right - 1) + (prof[right - 1] - 0.5) / (prof[right - 1] - prof[right])
    return 2 * (xr - 6)


def bilinear_sample(img, x, y, fill):
    """Value at real position (x, y) with ``fill`` outside the image."""
    h, w = img.shape

    def at(yy, xx):
        return img[yy, xx] if 0 <= yy < h and 0 <= xx < w else fill

    x0, y0 = math.floor(x), math.floor(y)
    fx, fy = x - x0, y - y0
    return ((1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1))
            + fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1)))


def shift_loops(img, dx, dy, fill=0.5):
    h, w = img.shape
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = bilinear_sample(img, x - dx, y - dy, fill)
    return out


def block_mean(img, f):
    h, w = img.shape
    out = np.zeros((h // f, w // f))
    for i in range(h // f):
        for j in range(w // f):
            out[i, j] = sum(img[i * f + a, j * f + b] for a in range(f) for b in range(f)) / (f * f)
    return out
