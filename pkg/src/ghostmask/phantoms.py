"""Test objects: resolution star, random circles and simple shapes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _seed
from .errors import DimensionError, ParameterError

PHANTOM_KINDS = ("siemens_star", "random_circle", "disk", "delta", "constant", "from_file")


@dataclass(frozen=True)
class PhantomSpec:
    """Object description. Binary kinds map 0/1 to ``lo``/``hi``.

    ``radius`` is the disk radius for ``disk`` and the optional outer
    radius for ``siemens_star``.
    """

    kind: str
    width: int = 47
    height: int = 47
    lo: float = 0.0
    hi: float = 1.0
    seed: int = 0
    spokes: int = 16
    r_min: float = 2.0
    r_max: float | None = None
    count: int = 1
    center: tuple | None = None
    radius: float | None = None
    x: int | None = None
    y: int | None = None
    value: float = 1.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ParameterError(f"unknown phantom kind {self.kind!r}")
        if self.width < 1 or self.height < 1:
            raise DimensionError("phantom dims must be >= 1")
        if not (0 <= self.lo <= 1 and 0 <= self.hi <= 1):
            raise ParameterError("transmission levels must lie in [0, 1]")
        if not 0 <= self.value <= 1:
            raise ParameterError("constant value must lie in [0, 1]")
        if self.r_max is not None and self.r_min > self.r_max:
            raise ParameterError("r_min must not exceed r_max")
        if self.spokes < 1 or self.count < 0:
            raise ParameterError("spokes must be >= 1 and count >= 0")


def _levels(mask, lo, hi):
    return np.where(mask, hi, lo).astype(float)


def _grid(h, w):
    y = np.arange(h)[:, None] - (h - 1) / 2
    x = np.arange(w)[None, :] - (w - 1) / 2
    return y, x


def siemens_star(width, height, spokes=16, lo=0.0, hi=1.0, radius=None):
    """``spokes`` bright sectors alternating with dark ones about the centre.

    With ``radius`` the star is cut to a disk and the outside is ``lo``.
    """
    y, x = _grid(height, width)
    theta = np.arctan2(y, x) % (2 * np.pi)
    sector = np.floor(theta / (np.pi / spokes)).astype(int)
    mask = sector % 2 == 0
    if radius is not None:
        mask &= x**2 + y**2 <= radius**2
    return _levels(mask, lo, hi)


def disk(width, height, center=None, radius=None, lo=0.0, hi=1.0):
    cx, cy = ((width - 1) / 2, (height - 1) / 2) if center is None else center
    r = min(width, height) / 4 if radius is None else radius
    y = np.arange(height)[:, None]
    x = np.arange(width)[None, :]
    return _levels((x - cx) ** 2 + (y - cy) ** 2 <= r**2, lo, hi)


def draw_circle(width, height, r_min=2.0, r_max=None, gen=None):
    """Radius ``U(r_min, r_max)`` and a centre keeping the disk inside."""
    r_max = min(width, height) / 4 if r_max is None else r_max
    r = gen.uniform(r_min, r_max)
    cx = gen.uniform(r, width - 1 - r) if width - 1 > 2 * r else (width - 1) / 2
    cy = gen.uniform(r, height - 1 - r) if height - 1 > 2 * r else (height - 1) / 2
    return (cx, cy), r


def random_circles(width, height, count=1, r_min=2.0, r_max=None, lo=0.0, hi=1.0, seed=0):
    gen = _seed.rng(seed, "phantom")
    mask = np.zeros((height, width), bool)
    for _ in range(count):
        c, r = draw_circle(width, height, r_min, r_max, gen)
        mask |= disk(width, height, c, r, 0.0, 1.0) > 0
    return _levels(mask, lo, hi)


def make_phantom(spec):
    """Render a :class:`PhantomSpec` to a transmission image."""
    w, h = spec.width, spec.height
    if spec.kind == "siemens_star":
        return siemens_star(w, h, spec.spokes, spec.lo, spec.hi, spec.radius)
    if spec.kind == "random_circle":
        return random_circles(w, h, spec.count, spec.r_min, spec.r_max, spec.lo, spec.hi, spec.seed)
    if spec.kind == "disk":
        return disk(w, h, spec.center, spec.radius, spec.lo, spec.hi)
    if spec.kind == "delta":
        img = np.full((h, w), spec.lo)
        x = w // 2 if spec.x is None else spec.x
        y = h // 2 if spec.y is None else spec.y
        if not (0 <= x < w and 0 <= y < h):
            raise DimensionError("delta position outside the image")
        img[y, x] = spec.hi
        return img
    if spec.kind == "constant":
        return np.full((h, w), float(spec.value))
    from .io import read_pgm

    img, _ = read_pgm(spec.path)
    if img.shape != (h, w):
        raise DimensionError(f"{spec.path} is {img.shape[1]}x{img.shape[0]}, expected {w}x{h}")
    return img
