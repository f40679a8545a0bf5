"""End-to-end experiment pipelines built from the library pieces.

Each pipeline is a pure function of its arguments and returns an
:class:`ExperimentResult` holding row tables, images and a summary. Writing
files is left to the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _seed
from .analysis.metrics import gradient_norm, nmse
from .analysis.sweeps import dose_sweep, noise_resolution_sweep
from .errors import ParameterError
from .forward import (AcquisitionModel, FabricationModel, MisalignmentModel, apply_fabrication, measure,
                      perturb_alignment, set_border)
from .patterns import GridSpec, bin as bin_data, extract_pattern_set, gen_master, gen_mura, preset, \
    unique_pattern_set
from .phantoms import PhantomSpec, make_phantom
from .recon import SolverConfig, reconstruct, recon_differential

MISALIGN_FAMILIES = ("gaussian", "blurred_gaussian", "binary", "medium_binary", "large_binary")
NOISE_FAMILIES = ("ura", "gaussian", "blurred_gaussian", "binary", "medium_binary")


@dataclass
class ExperimentResult:
    name: str
    tables: dict = field(default_factory=dict)
    images: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def default_object(fov=47):
    """Resolution star clipped to a disk that stays clear of the border."""
    return make_phantom(PhantomSpec("siemens_star", fov, fov, radius=(fov - 5) / 2))


def _kaczmarz(relaxation=0.5, order_seed=0):
    return SolverConfig("kaczmarz", sweeps=4, relaxation=relaxation, order_seed=order_seed)


def _mean_std(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def family_set(name, fov=47, count=None, seed=0, unique=False, stride=1):
    """Pattern set of a named family.

    URA sets are all cyclic shifts of the MURA tile. Random families are
    scanned from a master with ``stride`` or, with ``unique``, drawn as
    independent FOV-sized masks.
    """
    count = fov * fov if count is None else int(count)
    if name == "ura":
        return extract_pattern_set(gen_mura(fov), GridSpec.square(fov, count))
    if unique:
        return unique_pattern_set(preset(name), fov, fov, count, seed)
    grid = GridSpec.square(fov, count, stride)
    w, h = grid.required_master()
    return extract_pattern_set(gen_master(preset(name), w, h, seed), grid)


def misalignment_experiment(families=MISALIGN_FAMILIES, sigmas=(0.25, 0.5, 1.0), trials=100, seed=0,
                            obj=None, solver=None, count=2209, border=2, per_axis_scale=1 / math.sqrt(2)):
    """NMSE of reconstructions from misaligned patterns.

    Buckets come from the true patterns and reconstruction uses shifted
    ones. Each trial draws fresh shifts and a fresh sweep order. ``sigma``
    is the standard deviation of the 2-D displacement, so each axis gets
    ``sigma * per_axis_scale``.
    """
    obj = default_object() if obj is None else np.asarray(obj, dtype=float)
    fov = obj.shape[0]
    rows, grads = [], []
    for fi, fam in enumerate(families):
        ps = family_set(fam, fov, count, _seed.derive_seed(seed, "misalign-set", fi), unique=fam != "ura")
        if border:
            ps = set_border(ps, border, 0.5)
        g = gradient_norm(ps)
        grads.append({"family": fam, "gradient_norm": g})
        b = measure(ps, obj).buckets
        for si, sigma in enumerate(sigmas):
            model = MisalignmentModel(sigma * per_axis_scale)
            errs = []
            for t in range(trials):
                shifted = perturb_alignment(ps, model, _seed.derive_seed(seed, "misalign", fi, si, t))
                cfg = solver or _kaczmarz(0.5, t)
                errs.append(nmse(reconstruct(shifted, b, cfg).values, obj))
            m, s = _mean_std(errs)
            rows.append({"family": fam, "sigma": float(sigma), "nmse_mean": m, "nmse_std": s,
                         "trials": trials, "gradient_norm": g})
    return ExperimentResult("misalign", {"misalign": rows, "gradient": grads},
                            summary={"families": list(families), "sigmas": list(sigmas), "trials": trials})


def flux_experiment(count=6903, flux=1000.0, drifts=(0.01, 0.0), trials=10, seed=0, obj=None, solver=None,
                    family="binary", drift_window=None):
    """Unique patterns versus positive/negative pairs under flux drift.

    Schemes: ``unique_J`` (``count`` patterns), ``unique_2J`` (``2 count``
    patterns, the same number of exposures as the pairs),
    ``pairs_adjacent`` and ``pairs_separated``. Pair runs reconstruct from
    difference buckets.
    """
    obj = default_object() if obj is None else np.asarray(obj, dtype=float)
    fov = obj.shape[0]
    big = unique_pattern_set(preset(family), fov, fov, 2 * count, _seed.derive_seed(seed, "flux-set"))
    half = big.subset(slice(0, count))
    rows = []
    for drift in drifts:
        res = {"unique_J": [], "unique_2J": [], "pairs_adjacent": [], "pairs_separated": []}
        for t in range(trials):
            cfg = solver or _kaczmarz(0.5, t)
            ms = _seed.derive_seed(seed, "flux", t)
            acq = AcquisitionModel(flux=flux, flux_drift_rel_sigma=drift, drift_window=drift_window)
            for name, ps in (("unique_J", half), ("unique_2J", big)):
                r = measure(ps, obj, acq, ms)
                res[name].append(nmse(reconstruct(r.recorded_patterns, r.normalized_buckets, cfg).values, obj))
            for layout in ("adjacent", "separated"):
                a = AcquisitionModel(flux=flux, flux_drift_rel_sigma=drift, pairing="pos_neg_pairs",
                                     pair_layout=layout, drift_window=drift_window)
                r = measure(half, obj, a, ms)
                pos, neg, bp, bn = r.split_pairs()
                img = recon_differential(pos, neg, bp / r.flux, bn / r.flux, cfg)
                res["pairs_" + layout].append(nmse(img.values, obj))
        for name, v in res.items():
            m, s = _mean_std(v)
            rows.append({"drift": float(drift), "scheme": name, "nmse_mean": m, "nmse_std": s, "trials": trials})
    return ExperimentResult("flux", {"flux": rows},
                            summary={"count": count, "flux": flux, "family": family, "trials": trials})


def fabrication_experiment(fab=None, flux=math.inf, trials=3, seed=0, obj=None, solver=None, random_count=4418):
    """Defect-free, characterized and assumed-ideal reconstructions.

    The MURA master is the periodic tile. The random binary master is large
    enough for ``random_count`` stride-1 patterns. Defect seeds and
    measurement seeds vary per trial.
    """
    fab = fab or FabricationModel()
    obj = default_object() if obj is None else np.asarray(obj, dtype=float)
    fov = obj.shape[0]
    acq = AcquisitionModel(flux=flux)
    rows, images = [], {}
    for mask in ("mura", "random_binary"):
        vals = {"defect_free": [], "characterized": [], "assumed_ideal": []}
        for t in range(trials):
            if mask == "mura":
                master, grid = gen_mura(fov), GridSpec.square(fov)
            else:
                grid = GridSpec.square(fov, random_count)
                w, h = grid.required_master()
                master = gen_master(preset("binary"), w, h, _seed.derive_seed(seed, "fab-master", t))
            ideal = extract_pattern_set(master, grid)
            real = extract_pattern_set(apply_fabrication(master, fab, _seed.derive_seed(seed, "fab", t)), grid)
            ms = _seed.derive_seed(seed, "fab-measure", t)
            cfg = solver or _kaczmarz(0.5, t)
            b_ideal = measure(ideal, obj, acq, ms).normalized_buckets
            b_real = measure(real, obj, acq, ms).normalized_buckets
            for key, ps, b in (("defect_free", ideal, b_ideal), ("characterized", real, b_real),
                               ("assumed_ideal", ideal, b_real)):
                img = reconstruct(ps, b, cfg).values
                vals[key].append(nmse(img, obj))
                if t == 0:
                    images[f"{mask}_{key}"] = img
        row = {"mask": mask}
        for key, v in vals.items():
            row[f"nmse_{key}"] = _mean_std(v)[0]
        row["trials"] = trials
        rows.append(row)
    return ExperimentResult("fabrication", {"fabrication": rows}, images,
                            {"t_max": fab.t_max, "t_min": fab.t_min, "flux": flux, "trials": trials})


def departure_flux(fluxes, resolutions, full=2.0, tol=0.05):
    """Largest flux at which resolution is worse than ``full`` by more than ``tol``.

    Returns ``inf`` when even the highest flux misses full resolution and 0
    when no tested flux does.
    """
    order = np.argsort(fluxes)[::-1]
    f = np.asarray(fluxes, dtype=float)[order]
    r = np.asarray(resolutions, dtype=float)[order]
    bad = r > full + tol
    if bad[0]:
        return math.inf
    idx = np.flatnonzero(bad)
    return float(f[idx[0]]) if idx.size else 0.0


def noise_experiment(families=NOISE_FAMILIES, fluxes=None, n_phantoms=50, seeds=(0, 1, 2), solver=None, fov=47):
    """Resolution versus flux per family, with departure thresholds.

    Random families are scanned from fresh masters per seed. Resolution is
    the one-bit FRC crossing of curves averaged over circle phantoms. The
    default flux grid starts with a noiseless point, so a family that never
    reaches full resolution (departure ``inf``) is told apart from one that
    loses it just above the highest finite flux.
    """
    fluxes = [math.inf] + list(10 ** np.arange(3.5, 0.4, -0.25)) if fluxes is None else list(fluxes)
    solvers = {"kaczmarz": solver or _kaczmarz(0.5)}
    rows, deps = [], []
    for fi, fam in enumerate(families):
        res = np.zeros(len(fluxes))
        for s in seeds:
            ps = family_set(fam, fov, seed=_seed.derive_seed(s, "noise-set", fi))
            out = noise_resolution_sweep(ps, fluxes, n_phantoms, solvers, seed=s)
            res += np.array([r["resolution"] for r in out]) / len(seeds)
        for f, r in zip(fluxes, res):
            rows.append({"family": fam, "flux": float(f), "resolution": float(r)})
        deps.append({"family": fam, "departure_flux": departure_flux(fluxes, res)})
    return ExperimentResult("noise", {"noise": rows, "departure": deps},
                            summary={"n_phantoms": n_phantoms, "seeds": list(seeds)})


def dose_experiment(total_dose=1e5, J_values=(256, 512, 1024, 2048, 4096, 8192, 16384), sigmas=(0.0, 300.0),
                    trials=10, seed=0, obj=None, solver=None, family="binary"):
    """Dose fractionation tables for each per-measurement noise level."""
    obj = default_object() if obj is None else np.asarray(obj, dtype=float)
    fov = obj.shape[0]
    ps = unique_pattern_set(preset(family), fov, fov, max(J_values), _seed.derive_seed(seed, "dose-set"))
    rows = []
    for sm in sigmas:
        for r in dose_sweep(ps, obj, total_dose, J_values, sm, _seed.derive_seed(seed, "dose-run"), trials, solver):
            rows.append(dict(r, sigma_m=float(sm)))
    return ExperimentResult("dose", {"dose": rows}, summary={"total_dose": total_dose, "trials": trials})


def multiscale_stages(J_values, factors):
    """Validate aligned stage lists: budgets increase, factors shrink."""
    J_values, factors = [int(j) for j in J_values], [int(f) for f in factors]
    if len(J_values) != len(factors) or not J_values:
        raise ParameterError("multiscale J_values and factors must have equal nonzero length")
    if any(b <= a for a, b in zip(J_values, J_values[1:])):
        raise ParameterError("multiscale J_values must increase")
    if any(b > a for a, b in zip(factors, factors[1:])) or min(factors) < 1:
        raise ParameterError("multiscale factors must be positive and non-increasing")
    return list(zip(J_values, factors))


def multiscale_experiment(pset, obj, J_values, factors, acq=None, seed=0, solver=None):
    """Staged reconstruction at coarse scales from the first J buckets.

    Buckets are acquired once at full resolution. Stage ``(J, f)`` bins the
    first ``J`` patterns by ``f``. ``nmse`` compares the stage image to the
    binned object; ``nmse_full`` compares its pixel-replicated upsampling to
    the full-resolution object, so lost detail counts as error.
    """
    stages = multiscale_stages(J_values, factors)
    obj = np.asarray(obj, dtype=float)
    if stages[-1][0] > len(pset):
        raise ParameterError(f"last stage needs {stages[-1][0]} patterns, set has {len(pset)}")
    for _, f in stages:
        if obj.shape[0] % f or obj.shape[1] % f:
            raise ParameterError(f"factor {f} does not divide the {obj.shape[1]}x{obj.shape[0]} field")
    acq = acq or AcquisitionModel()
    solver = solver or SolverConfig("kaczmarz", sweeps=4, relaxation=0.25)
    used = pset.subset(slice(0, stages[-1][0]))
    b = measure(used, obj, acq, seed).normalized_buckets
    rows, images = [], {}
    for J, f in stages:
        ps = used.subset(slice(0, J))
        coarse = bin_data(ps, f) if f > 1 else ps
        truth = bin_data(obj, f) if f > 1 else obj
        img = reconstruct(coarse, b[:J], solver).values
        images[f"stage_J{J}_bin{f}"] = img
        up = np.kron(img, np.ones((f, f))) if f > 1 else img
        rows.append({"J": J, "factor": f, "nmse": nmse(img, truth), "nmse_full": nmse(up, obj)})
    return ExperimentResult("multiscale", {"multiscale": rows}, images,
                            {"flux": acq.flux, "solver": solver.describe()})


__all__ = [
    "ExperimentResult", "default_object", "departure_flux", "dose_experiment", "fabrication_experiment",
    "family_set", "flux_experiment", "misalignment_experiment", "multiscale_experiment", "multiscale_stages",
    "noise_experiment",
]
