"""Bucket acquisition under ideal and degraded conditions.

The ideal bucket for pattern ``A_j`` and object ``t`` is ``sum(A_j * t)``.
Degradations layered on top: slow multiplicative flux drift, slow additive
background, a jittering Gaussian beam profile, Poisson shot noise at a
given photon flux, Gaussian per-measurement noise, pattern misalignment and
fabrication defects of binary masks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import _seed
from .errors import DimensionError, ParameterError, PreconditionError
from .patterns import MasterMask, PatternSet, gaussian_blur


@dataclass(frozen=True)
class BeamModel:
    """Gaussian beam of width ``sigma_profile`` px whose centre jitters by
    ``N(0, jitter_sigma^2)`` px per axis per measurement."""

    sigma_profile: float
    jitter_sigma: float = 0.0


@dataclass(frozen=True)
class AcquisitionModel:
    flux: float = math.inf
    per_measurement_sigma: float = 0.0
    flux_drift_rel_sigma: float = 0.0
    background_rel_sigma: float = 0.0
    background_level: float = 0.0
    beam: BeamModel | None = None
    recording: str = "prerecorded"
    pairing: str = "single"
    pair_layout: str = "adjacent"
    characterization_noise: bool = False
    drift_window: int | None = None

    def __post_init__(self):
        if not self.flux > 0:
            raise ParameterError("flux must be > 0")
        for name in ("per_measurement_sigma", "flux_drift_rel_sigma", "background_rel_sigma"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.recording not in ("prerecorded", "simultaneous"):
            raise ParameterError(f"unknown recording mode {self.recording!r}")
        if self.pairing not in ("single", "pos_neg_pairs"):
            raise ParameterError(f"unknown pairing {self.pairing!r}")
        if self.pair_layout not in ("adjacent", "separated"):
            raise ParameterError(f"unknown pair layout {self.pair_layout!r}")

    @property
    def noiseless(self):
        return math.isinf(self.flux) and self.per_measurement_sigma == 0


@dataclass
class MeasurementRecord:
    """Buckets plus the patterns the reconstructor believes were used.

    ``true_drift`` has columns (flux_factor, background, beam_dx, beam_dy).
    For pos/neg acquisitions the record is in acquisition order; use
    :meth:`split_pairs` to recover the two halves.
    """

    buckets: np.ndarray
    recorded_patterns: PatternSet
    true_drift: np.ndarray
    seed: int = 0
    flux: float = math.inf
    pairing: str = "single"
    pair_layout: str = "adjacent"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.buckets)
        if len(self.recorded_patterns) != n or len(self.true_drift) != n:
            raise DimensionError("buckets, patterns and drift must share length J")

    def __len__(self):
        return len(self.buckets)

    @property
    def normalized_buckets(self):
        """Buckets in transmission units (photon counts divided by flux)."""
        return self.buckets if math.isinf(self.flux) else self.buckets / self.flux

    def split_pairs(self):
        """Return ``(pos_set, neg_set, b_pos, b_neg)`` for a pos/neg record."""
        if self.pairing != "pos_neg_pairs":
            raise PreconditionError("record was not acquired with pos/neg pairs")
        n = len(self) // 2
        if self.pair_layout == "adjacent":
            ipos, ineg = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
        else:
            ipos, ineg = np.arange(n), np.arange(n, 2 * n)
        pats = self.recorded_patterns
        return pats.subset(ipos), pats.subset(ineg), self.buckets[ipos], self.buckets[ineg]


@dataclass(frozen=True)
class MisalignmentModel:
    sigma_x: float
    sigma_y: float | None = None
    boundary_fill: float = 0.5

    def __post_init__(self):
        if self.sigma_x < 0 or (self.sigma_y is not None and self.sigma_y < 0):
            raise ParameterError("misalignment sigmas must be >= 0")


@dataclass(frozen=True)
class FabricationModel:
    t_max: float = 0.85
    t_min: float = 0.05
    center_boost: float = 0.08
    slow_variation_rel_sigma: float = 0.02
    profile_sigma: float | None = None
    variation_length: float | None = None

    def __post_init__(self):
        if not 0 <= self.t_min < self.t_max <= 1:
            raise ParameterError("need 0 <= t_min < t_max <= 1")
        if self.slow_variation_rel_sigma < 0:
            raise ParameterError("slow_variation_rel_sigma must be >= 0")


def _check_object(pset, obj):
    obj = np.asarray(obj, dtype=float)
    if obj.shape != pset.shape:
        raise DimensionError(f"object {obj.shape} does not match patterns {pset.shape}")
    return obj


def drift_series(J, rel_sigma, seed=0, window=None):
    """Slowly varying multiplicative factors with mean 1 and std ``rel_sigma``.

    White Gaussian noise is smoothed with a moving average of
    ``max(5, J // 20)`` samples, then shifted and scaled exactly.
    """
    if rel_sigma < 0:
        raise ParameterError("rel_sigma must be >= 0")
    if rel_sigma == 0 or J < 2:
        return np.ones(J)
    return 1.0 + rel_sigma * smooth_noise(J, seed, window)


def smooth_noise(J, seed=0, window=None):
    """Zero-mean, unit-std, slowly varying series of length J."""
    window = max(5, J // 20) if window is None else int(window)
    gen = _seed.rng(seed, "drift")
    pad = window
    white = gen.standard_normal(J + 2 * pad)
    z = uniform_filter1d(white, size=window, mode="nearest")[pad:pad + J]
    z = z - z.mean()
    std = z.std()
    return z / std if std > 0 else z


def beam_profile(shape, sigma_profile, dx=0.0, dy=0.0):
    h, w = shape
    y = np.arange(h)[:, None] - (h - 1) / 2 - dy
    x = np.arange(w)[None, :] - (w - 1) / 2 - dx
    return np.exp(-(x**2 + y**2) / (2 * sigma_profile**2))


def measure(pset, obj, acq=None, seed=0):
    """Simulate one bucket per pattern (or per pattern and its negative).

    Returns a :class:`MeasurementRecord`. With finite ``acq.flux`` buckets are
    photon counts ``Poisson(flux * B_j)``; noiseless buckets are in
    transmission units.
    """
    acq = acq or AcquisitionModel()
    t = _check_object(pset, obj)
    base = pset.patterns
    if acq.pairing == "pos_neg_pairs":
        neg = 1.0 - base
        if acq.pair_layout == "adjacent":
            inter = np.empty((2 * len(base),) + base.shape[1:])
            inter[0::2], inter[1::2] = base, neg
            offsets = np.repeat(pset.offsets, 2, axis=0)
        else:
            inter = np.concatenate([base, neg])
            offsets = np.concatenate([pset.offsets, pset.offsets])
        base = inter
    else:
        offsets = pset.offsets
    n_meas = len(base)

    # Pairs measured adjacently share one time slot of the drift processes.
    if acq.pairing == "pos_neg_pairs" and acq.pair_layout == "adjacent":
        n_slots, slot = n_meas // 2, np.arange(n_meas) // 2
    else:
        n_slots, slot = n_meas, np.arange(n_meas)
    flux_factor = drift_series(n_slots, acq.flux_drift_rel_sigma, _seed.derive_seed(seed, "flux"),
                               acq.drift_window)[slot]
    bg_noise = np.zeros(n_slots)
    if acq.background_rel_sigma > 0 and n_slots > 1:
        bg_noise = smooth_noise(n_slots, _seed.derive_seed(seed, "background"), acq.drift_window)
    beam_d = np.zeros((n_slots, 2))
    if acq.beam is not None and acq.beam.jitter_sigma > 0:
        beam_d = _seed.rng(seed, "beam").normal(0.0, acq.beam.jitter_sigma, (n_slots, 2))
    beam_d = beam_d[slot]

    illum = base * flux_factor[:, None, None]
    if acq.beam is not None:
        for j in range(n_meas):
            illum[j] *= beam_profile(pset.shape, acq.beam.sigma_profile, *beam_d[j])
    ideal = np.einsum("jyx,yx->j", illum, t)
    mean_ideal = np.einsum("jyx,yx->j", base, t).mean()
    background = mean_ideal * (acq.background_level + acq.background_rel_sigma * bg_noise[slot])
    ideal = ideal + background

    if math.isinf(acq.flux):
        buckets = ideal.copy()
    else:
        buckets = np.empty(n_meas)
        for a, b, gen in _seed.chunked(seed, "poisson", n_meas):
            buckets[a:b] = gen.poisson(acq.flux * np.clip(ideal[a:b], 0, None))
    if acq.per_measurement_sigma > 0:
        for a, b, gen in _seed.chunked(seed, "readout", n_meas):
            buckets[a:b] += gen.normal(0.0, acq.per_measurement_sigma, b - a)

    recorded = illum if acq.recording == "simultaneous" else base.copy()
    if acq.characterization_noise and not math.isinf(acq.flux):
        for a, b, gen in _seed.chunked(seed, "characterize", n_meas):
            recorded[a:b] = gen.poisson(acq.flux * np.clip(recorded[a:b], 0, None)) / acq.flux
    rec_set = PatternSet(recorded, offsets, pset.source, dict(pset.meta))
    drift = np.column_stack([flux_factor, background, beam_d])
    return MeasurementRecord(buckets, rec_set, drift, seed, acq.flux, acq.pairing, acq.pair_layout)


def shift_pattern(pattern, dx, dy, fill=0.5):
    """Translate a pattern by (dx, dy) px with bilinear interpolation.

    Output pixel (y, x) samples the input at (y - dy, x - dx); samples
    outside the pattern take ``fill``.
    """
    h, w = pattern.shape
    m = int(math.ceil(max(abs(dx), abs(dy)))) + 1
    padded = np.full((h + 2 * m, w + 2 * m), float(fill))
    padded[m:m + h, m:m + w] = pattern
    ix, iy = math.floor(-dx), math.floor(-dy)
    fx, fy = -dx - ix, -dy - iy
    y0, x0 = m + iy, m + ix

    def win(oy, ox):
        return padded[y0 + oy:y0 + oy + h, x0 + ox:x0 + ox + w]

    return ((1 - fy) * ((1 - fx) * win(0, 0) + fx * win(0, 1))
            + fy * ((1 - fx) * win(1, 0) + fx * win(1, 1)))


def shift_stack(patterns, shifts, fill=0.5):
    """Bilinear shift of every pattern in a (J, h, w) stack by its own
    (dx, dy); equivalent to :func:`shift_pattern` applied per pattern."""
    pats = np.asarray(patterns, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    J, h, w = pats.shape
    m = int(math.ceil(np.abs(shifts).max(initial=0.0))) + 1
    padded = np.full((J, h + 2 * m, w + 2 * m), float(fill))
    padded[:, m:m + h, m:m + w] = pats
    ix = np.floor(-shifts[:, 0]).astype(int)
    iy = np.floor(-shifts[:, 1]).astype(int)
    fx = (-shifts[:, 0] - ix)[:, None, None]
    fy = (-shifts[:, 1] - iy)[:, None, None]
    out = np.empty_like(pats)
    # Integer offsets take few distinct values; slice each group at once.
    keys = iy * (4 * m + 1) + ix
    for key in np.unique(keys):
        sel = np.flatnonzero(keys == key)
        y0, x0 = m + iy[sel[0]], m + ix[sel[0]]
        sub = padded[sel]
        a, b = sub[:, y0:y0 + h, x0:x0 + w], sub[:, y0:y0 + h, x0 + 1:x0 + 1 + w]
        c, d = sub[:, y0 + 1:y0 + 1 + h, x0:x0 + w], sub[:, y0 + 1:y0 + 1 + h, x0 + 1:x0 + 1 + w]
        gx, gy = fx[sel], fy[sel]
        out[sel] = (1 - gy) * ((1 - gx) * a + gx * b) + gy * ((1 - gx) * c + gx * d)
    return out


def perturb_alignment(pset, model, seed=0, shifts=None):
    """Shift every pattern by an independent random (dx, dy).

    ``shifts`` (J x 2 array of (dx, dy)) overrides the random draw.
    """
    sy = model.sigma_x if model.sigma_y is None else model.sigma_y
    J = len(pset)
    if shifts is None:
        if model.sigma_x == 0 and sy == 0:
            return pset.with_patterns(pset.patterns.copy())
        gen = _seed.rng(seed, "misalign")
        shifts = np.column_stack([gen.normal(0, model.sigma_x, J), gen.normal(0, sy, J)])
    shifts = np.asarray(shifts, dtype=float)
    out = shift_stack(pset.patterns, shifts, model.boundary_fill)
    return pset.with_patterns(out, shifts=shifts)


def set_border(pset, width=2, value=0.5):
    """Copy of the set with a ``width``-pixel frame fixed at ``value``."""
    p = pset.patterns.copy()
    if width > 0:
        p[:, :width, :] = value
        p[:, -width:, :] = value
        p[:, :, :width] = value
        p[:, :, -width:] = value
    return pset.with_patterns(p)


def apply_fabrication(master, fab, seed=0):
    """Transmission of a fabricated binary mask.

    Binary 1/0 map to ``t_max``/``t_min``; a broad Gaussian radial profile
    raises transmission by ``center_boost`` at the centre relative to the
    edge midpoints; a smooth random field adds slow relative variation.
    """
    values = master.values
    if not np.all((values == 0) | (values == 1)):
        raise PreconditionError("fabrication model needs a binary master")
    h, w = values.shape
    t = fab.t_min + (fab.t_max - fab.t_min) * values
    if fab.center_boost:
        t = t * radial_boost(h, w, fab.center_boost, fab.profile_sigma)
    if fab.slow_variation_rel_sigma > 0:
        length = fab.variation_length or max(h, w) / 8
        gen = _seed.rng(seed, "fabrication")
        z = gaussian_blur(gen.standard_normal((h, w)), length)
        z = (z - z.mean()) / z.std()
        t = t * (1.0 + fab.slow_variation_rel_sigma * z)
    t = np.clip(t, 0.0, 1.0)
    return replace(master, values=t, kind=replace(master.kind, binarize=None))


def radial_boost(h, w, boost, sigma=None):
    """Gaussian radial profile equal to 1 + boost at the centre and 1 at the
    centre of the nearest edge pixel, distance ``(min(h, w) - 1) / 2``."""
    ref = max((min(h, w) - 1) / 2, 0.5)
    sigma = ref if sigma is None else sigma
    y = np.arange(h)[:, None] - (h - 1) / 2
    x = np.arange(w)[None, :] - (w - 1) / 2
    g = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    g_ref = math.exp(-ref**2 / (2 * sigma**2))
    return 1.0 + boost * (g - g_ref) / (1.0 - g_ref)
