"""Master-mask synthesis and translated pattern sets.

A master mask is a large transmission field in [0, 1]. Illumination
patterns are FOV-sized windows cut from it at grid offsets
``x_j = s_x * (j % M)``, ``y_j = s_y * (j // M)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _seed
from .errors import DimensionError, ParameterError, RangeError

KINDS = ("gaussian", "uniform", "binary", "fractal", "mura")

# Blur widths that give binarized masks autocorrelation FWHMs of ~2.6 px
# (medium features) and ~4.8 px (large features).
MEDIUM_BINARY_BLUR = 1.1
LARGE_BINARY_BLUR = 2.05


def is_prime(n):
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class MaskKind:
    """Mask family plus optional post-operations.

    ``blur`` is the Gaussian kernel width in pixels; ``binarize`` is either
    ``"median"`` or an explicit threshold.
    """

    name: str
    mu: float = 0.5
    sigma: float = 0.5
    alpha: float = 1.0
    beta: float = 0.01
    p: int | None = None
    blur: float | None = None
    binarize: str | float | None = None

    def __post_init__(self):
        if self.name not in KINDS:
            raise ParameterError(f"unknown mask kind {self.name!r}")
        if self.name == "gaussian" and not self.sigma > 0:
            raise ParameterError("gaussian kind requires sigma > 0")
        if self.name == "fractal" and not (self.alpha > 0 and self.beta > 0):
            raise ParameterError("fractal kind requires alpha > 0 and beta > 0")
        if self.name == "mura" and (self.p is None or not is_prime(self.p)):
            raise ParameterError(f"mura kind requires a prime p, got {self.p}")
        if self.blur is not None and not self.blur > 0:
            raise ParameterError("blur sigma must be > 0")
        if isinstance(self.binarize, str) and self.binarize != "median":
            raise ParameterError(f"unknown binarize policy {self.binarize!r}")

    @classmethod
    def gaussian(cls, mu=0.5, sigma=0.5, **post):
        return cls("gaussian", mu=mu, sigma=sigma, **post)

    @classmethod
    def uniform(cls, **post):
        return cls("uniform", **post)

    @classmethod
    def binary(cls, **post):
        return cls("binary", **post)

    @classmethod
    def fractal(cls, alpha=1.0, beta=0.01, **post):
        post.setdefault("binarize", "median")
        return cls("fractal", alpha=alpha, beta=beta, **post)

    @classmethod
    def mura(cls, p):
        return cls("mura", p=p)

    def params(self):
        """Generation parameters relevant to this kind, as a flat dict."""
        out = {}
        if self.name == "gaussian":
            out.update(mu=self.mu, sigma=self.sigma)
        elif self.name == "fractal":
            out.update(alpha=self.alpha, beta=self.beta)
        elif self.name == "mura":
            out.update(p=self.p)
        if self.blur is not None:
            out["blur"] = self.blur
        if self.binarize is not None:
            out["binarize"] = self.binarize
        return out


PRESETS = {
    "ura": MaskKind.mura(47),
    "gaussian": MaskKind.gaussian(),
    "blurred_gaussian": MaskKind.gaussian(blur=1.0),
    "uniform": MaskKind.uniform(),
    "binary": MaskKind.binary(),
    "medium_binary": MaskKind.binary(blur=MEDIUM_BINARY_BLUR, binarize="median"),
    "large_binary": MaskKind.binary(blur=LARGE_BINARY_BLUR, binarize="median"),
    "fractal": MaskKind.fractal(1.0, 0.01),
}


def preset(name):
    """Named mask family used throughout the experiments."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class MasterMask:
    values: np.ndarray
    kind: MaskKind
    seed: int = 0
    periodic: bool = False

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def params(self):
        return self.kind.params()

    def descriptor(self):
        return {"kind": self.kind.name, "params": self.params, "seed": self.seed,
                "dims": (self.width, self.height)}


@dataclass(frozen=True)
class GridSpec:
    """Scanning grid: ``count`` windows of ``fov_w`` x ``fov_h`` on ``columns`` columns."""

    fov_w: int
    fov_h: int
    count: int
    stride_x: int = 1
    stride_y: int = 1
    columns: int | None = None

    def __post_init__(self):
        if self.fov_w < 1 or self.fov_h < 1 or self.count < 1:
            raise DimensionError("grid dimensions and count must be >= 1")
        if self.columns is not None and self.columns < 1:
            raise DimensionError("columns must be >= 1")

    @classmethod
    def square(cls, fov, count=None, stride=1, columns=None):
        count = fov * fov if count is None else count
        return cls(fov, fov, count, stride, stride, columns or fov)

    @property
    def ncols(self):
        return self.columns if self.columns is not None else self.fov_w

    def offsets(self):
        j = np.arange(self.count)
        return np.stack([self.stride_x * (j % self.ncols), self.stride_y * (j // self.ncols)], axis=1)

    def required_master(self):
        """Smallest (width, height) master that holds every window."""
        off = self.offsets()
        return int(off[:, 0].max()) + self.fov_w, int(off[:, 1].max()) + self.fov_h


@dataclass
class PatternSet:
    """Ordered illumination patterns, shape ``(J, fov_h, fov_w)``."""

    patterns: np.ndarray
    offsets: np.ndarray | None = None
    source: dict | str = "unique"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.patterns = np.asarray(self.patterns, dtype=float)
        if self.patterns.ndim != 3:
            raise DimensionError("patterns must be a (J, h, w) array")
        if self.offsets is None:
            self.offsets = np.zeros((len(self.patterns), 2), dtype=int)
        self.offsets = np.asarray(self.offsets)
        if len(self.offsets) != len(self.patterns):
            raise DimensionError("offsets and patterns differ in length")

    def __len__(self):
        return self.patterns.shape[0]

    @property
    def shape(self):
        return self.patterns.shape[1:]

    @cached_property
    def mean_pattern(self):
        return self.patterns.mean(axis=0)

    def matrix(self):
        """Pattern matrix with one flattened pattern per row."""
        return self.patterns.reshape(len(self), -1)

    def centered(self):
        """Mean-corrected pattern matrix (rows ``A_j - <A>``)."""
        return self.matrix() - self.mean_pattern.ravel()

    def subset(self, index):
        index = np.arange(len(self))[index]
        return PatternSet(self.patterns[index], self.offsets[index], self.source, dict(self.meta))

    def with_patterns(self, patterns, **meta):
        merged = dict(self.meta)
        merged.update(meta)
        return PatternSet(patterns, self.offsets.copy(), self.source, merged)

    @classmethod
    def concat(cls, *sets):
        return cls(np.concatenate([s.patterns for s in sets]),
                   np.concatenate([s.offsets for s in sets]), sets[0].source, dict(sets[0].meta))


def gaussian_blur(image, sigma):
    """Periodic convolution with the sampled, wrapped kernel
    ``exp(-(x^2+y^2)/(2 sigma^2)) / (2 pi sigma^2)``."""
    if not sigma > 0:
        raise ParameterError("blur sigma must be > 0")
    h, w = image.shape
    dy = np.minimum(np.arange(h), h - np.arange(h))[:, None]
    dx = np.minimum(np.arange(w), w - np.arange(w))[None, :]
    kernel = np.exp(-(dx**2 + dy**2) / (2 * sigma**2)) / (2 * np.pi * sigma**2)
    return np.real(np.fft.ifft2(np.fft.fft2(image) * np.fft.fft2(kernel)))


def fractal_filter(image, alpha, beta):
    """Fourier-domain power-law filter ``gamma / (|k|^alpha + beta)``.

    ``|k|`` is the radial frequency in cycles/pixel and ``gamma = beta`` so
    that the filter peaks at 1 (at DC).
    """
    h, w = image.shape
    ky = np.fft.fftfreq(h)[:, None]
    kx = np.fft.fftfreq(w)[None, :]
    kr = np.sqrt(kx**2 + ky**2)
    H = beta / (kr**alpha + beta)
    return np.real(np.fft.ifft2(np.fft.fft2(image) * H))


def binarize(image, policy="median"):
    """Threshold to {0, 1}; the median policy gives ~50 % coverage."""
    thresh = np.median(image) if policy == "median" else float(policy)
    return (image > thresh).astype(float)


def gen_master(kind, width, height, seed=0):
    """Generate a master mask of the given family.

    Args:
        kind: a :class:`MaskKind` (or preset name).
        width, height: master size in pixels.
        seed: integer seed; identical inputs give bit-identical output.
    """
    if isinstance(kind, str):
        kind = preset(kind)
    width, height = int(width), int(height)
    if width < 1 or height < 1:
        raise DimensionError("master dimensions must be >= 1")
    if kind.name == "mura":
        return gen_mura(kind.p)
    gen = _seed.rng(seed, "master")
    shape = (height, width)
    if kind.name == "gaussian":
        values = np.clip(gen.normal(kind.mu, kind.sigma, shape), 0.0, 1.0)
    elif kind.name == "uniform":
        values = gen.random(shape)
    else:
        values = (gen.random(shape) < 0.5).astype(float)
        if kind.name == "fractal":
            values = fractal_filter(values, kind.alpha, kind.beta)
    if kind.blur is not None:
        values = np.clip(gaussian_blur(values, kind.blur), 0.0, 1.0)
    if kind.binarize is not None:
        values = binarize(values, kind.binarize)
    return MasterMask(values, kind, seed)


def legendre_symbols(p):
    """C_i = +1 for quadratic residues mod p, -1 otherwise, C_0 = 0."""
    residues = {(i * i) % p for i in range(1, p)}
    c = np.array([1 if i in residues else -1 for i in range(p)])
    c[0] = 0
    return c


def mura_tile(p):
    """p x p modified uniformly redundant array."""
    if not is_prime(p):
        raise ParameterError(f"MURA order must be prime, got {p}")
    c = legendre_symbols(p)
    tile = (np.outer(c, c) == 1).astype(float)
    tile[1:, 0] = 1.0
    tile[0, :] = 0.0
    return tile


def gen_mura(p):
    """MURA master: the p x p tile repeated to (2p-1) x (2p-1).

    Every cyclic shift of the tile appears as a contiguous p x p window.
    """
    tile = mura_tile(p)
    values = np.tile(tile, (2, 2))[: 2 * p - 1, : 2 * p - 1]
    return MasterMask(values, MaskKind.mura(p), seed=0, periodic=True)


def extract_pattern_set(master, grid):
    """Cut ``grid.count`` windows from ``master``.

    Periodic (MURA) masters wrap offsets modulo the tile period; any other
    master raises :class:`RangeError` if a window leaves the mask.
    """
    off = grid.offsets()
    values = master.values
    if master.periodic:
        period = master.kind.p
        if grid.fov_w > period or grid.fov_h > period:
            raise RangeError("FOV larger than the MURA period")
        off = off % period
    need_w = int(off[:, 0].max()) + grid.fov_w
    need_h = int(off[:, 1].max()) + grid.fov_h
    if need_w > master.width or need_h > master.height:
        raise RangeError(f"grid needs a {need_w}x{need_h} master, have {master.width}x{master.height}")
    windows = sliding_window_view(values, (grid.fov_h, grid.fov_w))
    patterns = windows[off[:, 1], off[:, 0]].copy()
    source = master.descriptor()
    source["stride"] = (grid.stride_x, grid.stride_y)
    return PatternSet(patterns, grid.offsets(), source)


def unique_pattern_set(kind, fov_w, fov_h, count, seed=0):
    """J independent FOV-sized masters, one derived seed per index."""
    if isinstance(kind, str):
        kind = preset(kind)
    if kind.name == "mura":
        raise ParameterError("unique sets are defined for random kinds only")
    patterns = np.empty((count, fov_h, fov_w))
    for j in range(count):
        patterns[j] = gen_master(kind, fov_w, fov_h, _seed.derive_seed(seed, "unique", j)).values
    source = {"kind": kind.name, "params": kind.params(), "seed": seed, "unique": True}
    return PatternSet(patterns, None, source)


def complement(pset):
    """Negative patterns ``1 - A_j`` in the same order."""
    out = pset.with_patterns(1.0 - pset.patterns, complement=True)
    return out


def bin(data, factor):
    """Average ``factor`` x ``factor`` blocks of an image, stack, mask or set."""
    factor = int(factor)
    if factor < 1:
        raise ParameterError("bin factor must be >= 1")
    if isinstance(data, PatternSet):
        out = PatternSet(_bin_array(data.patterns, factor), data.offsets.copy(), data.source, dict(data.meta))
        out.meta["scale"] = data.meta.get("scale", 1) * factor
        return out
    if isinstance(data, MasterMask):
        return replace(data, values=_bin_array(data.values, factor), periodic=False)
    return _bin_array(np.asarray(data, dtype=float), factor)


def _prime_factors(n):
    out, f = [], 2
    while n > 1:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    return out


def _bin_array(a, factor):
    h, w = a.shape[-2:]
    if h % factor or w % factor:
        raise DimensionError(f"dims {h}x{w} not divisible by {factor}")
    # Binning by prime factors in turn makes bin(bin(x, a), b) == bin(x, a*b)
    # hold bit-for-bit.
    for f in _prime_factors(factor):
        a = _bin_once(a, f)
    return a


def _bin_once(a, factor):
    h, w = a.shape[-2:]
    lead = a.shape[:-2]
    blocks = a.reshape(*lead, h // factor, factor, w // factor, factor)
    return blocks.mean(axis=(-3, -1))
