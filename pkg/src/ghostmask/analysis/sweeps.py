"""Monte Carlo sweeps: resolution versus flux, and dose fractionation."""
import math

import numpy as np

from .. import _seed
from ..errors import ParameterError
from ..patterns import GridSpec, MasterMask, extract_pattern_set
from ..phantoms import random_circles
from ..recon import SolverConfig, reconstruct
from .frc import average_curves, frc, frc_resolution
from .metrics import rmse


def circle_phantoms(shape, n, seed=0, r_min=2.0, r_max=None, lo=0.0, hi=1.0):
    """Stack of ``n`` single-circle phantoms with per-index seeds."""
    h, w = shape
    return np.array([random_circles(w, h, 1, r_min, r_max, lo, hi, _seed.derive_seed(seed, "circle", i))
                     for i in range(n)])


def poisson_buckets(ideal, flux, seed, stage="shot"):
    """``Poisson(flux * B) / flux`` column by column, one stream per column."""
    if math.isinf(flux):
        return ideal.copy()
    out = np.empty_like(ideal)
    for c in range(ideal.shape[1]):
        out[:, c] = _seed.rng(seed, stage, c).poisson(flux * np.clip(ideal[:, c], 0, None)) / flux
    return out


def gaussian_buckets(shape, sigma, seed, stage="readout"):
    out = np.empty(shape)
    for c in range(shape[1]):
        out[:, c] = _seed.rng(seed, stage, c).normal(0.0, sigma, shape[0])
    return out


def noise_resolution_sweep(pset, fluxes, n_phantoms=100, solvers=None, seed=0, threshold="one_bit",
                           r_min=2.0, r_max=None):
    """Resolution (px) per flux and solver from FRC curves averaged over
    random-circle phantoms.

    Returns a list of dicts with keys ``flux``, ``solver``, ``resolution``.
    """
    if n_phantoms < 1:
        raise ParameterError("n_phantoms must be >= 1")
    solvers = solvers or {"adjoint": SolverConfig("adjoint_mean_corrected"),
                          "kaczmarz": SolverConfig("kaczmarz", sweeps=4, relaxation=0.5)}
    truth = circle_phantoms(pset.shape, n_phantoms, seed, r_min, r_max)
    ideal = pset.matrix() @ truth.reshape(n_phantoms, -1).T
    rows = []
    for fi, flux in enumerate(fluxes):
        b = poisson_buckets(ideal, float(flux), _seed.derive_seed(seed, "flux", fi))
        for name, cfg in solvers.items():
            rec = reconstruct(pset, b, cfg).values.reshape(truth.shape)
            curves = [frc(r, t) for r, t in zip(rec, truth)]
            rows.append({"flux": float(flux), "solver": name,
                         "resolution": frc_resolution(average_curves(curves), threshold)})
    return rows


def _patterns_for(source, J, stride=1, fov=None):
    if isinstance(source, MasterMask):
        if fov is None:
            raise ParameterError("fov is required when sweeping a master mask")
        cols = (source.width - fov) // stride + 1
        if source.periodic:
            cols = fov
        return extract_pattern_set(source, GridSpec(fov, fov, int(J), stride, stride, cols))
    if J > len(source):
        raise ParameterError(f"J={J} exceeds the {len(source)} available patterns")
    return source.subset(slice(0, int(J)))


def dose_sweep(source, obj, total_dose, J_values, per_measurement_sigma=0.0, seed=0, trials=10,
               solver=None, stride=1):
    """RMSE decomposition when a fixed dose is split over J measurements.

    ``source`` is a pattern set (its first J patterns are used) or a master
    mask scanned with ``stride``. Each measurement receives
    ``total_dose / J`` photons per pixel; per-measurement Gaussian noise has
    standard deviation ``per_measurement_sigma`` photons. The artifact,
    shot-noise and per-measurement components are estimated from separate
    noiseless, Poisson-only and Gaussian-only runs.

    Returns a list of dicts with keys ``J``, ``flux``, ``rmse_total``,
    ``rmse_0``, ``rmse_p``, ``rmse_m`` and ``rmse_quadrature``.
    """
    if not total_dose > 0:
        raise ParameterError("total_dose must be > 0")
    solver = solver or SolverConfig("adjoint_mean_corrected", normalize=True)
    obj = np.asarray(obj, dtype=float)
    rows = []
    for i, J in enumerate(J_values):
        pset = _patterns_for(source, J, stride, obj.shape[0])
        flux = total_dose / J
        ideal = pset.matrix() @ obj.ravel()
        base = reconstruct(pset, ideal, solver).values
        r0 = rmse(base, obj)
        B = np.repeat(ideal[:, None], trials, axis=1)
        s = _seed.derive_seed(seed, "dose", i)
        shot = poisson_buckets(B, flux, s)
        read = gaussian_buckets(B.shape, per_measurement_sigma, s) / flux if per_measurement_sigma > 0 \
            else np.zeros_like(B)

        def mean_sq(b):
            imgs = reconstruct(pset, b, solver).values.reshape(trials, *obj.shape)
            return float(np.mean([rmse(im, obj) ** 2 for im in imgs]))

        tot2 = mean_sq(shot + read)
        p2 = max(mean_sq(shot) - r0**2, 0.0)
        m2 = max(mean_sq(B + read) - r0**2, 0.0)
        rows.append({"J": int(J), "flux": flux, "rmse_total": math.sqrt(tot2), "rmse_0": r0,
                     "rmse_p": math.sqrt(p2), "rmse_m": math.sqrt(m2),
                     "rmse_quadrature": math.sqrt(r0**2 + p2 + m2)})
    return rows
