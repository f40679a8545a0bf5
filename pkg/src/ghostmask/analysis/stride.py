"""Three estimators of a good scanning stride for a master mask."""
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..forward import AcquisitionModel, measure
from ..patterns import GridSpec, extract_pattern_set
from ..recon import SolverConfig, reconstruct
from .frc import smooth_ring_power
from .metrics import nmse
from .svd import svd_metrics

STRIDE_METHODS = ("power_spectrum", "mse", "stable_rank")


@dataclass
class StrideCurve:
    strides: np.ndarray
    score: np.ndarray
    method: str
    recommended: int

    def to_csv(self, path, label=""):
        from ..io import write_table

        return write_table(path, {"stride": self.strides, "score": self.score},
                           f"stride method={self.method} {label} recommended={self.recommended}",
                           gnuplot=True)


def fov_windows(master, fov):
    """All disjoint fov x fov tiles of the master, row-major."""
    v = master.values
    ny, nx = v.shape[0] // fov, v.shape[1] // fov
    tiles = v[: ny * fov, : nx * fov].reshape(ny, fov, nx, fov).swapaxes(1, 2)
    return tiles.reshape(-1, fov, fov)


def spectrum_scores(master, fov, strides):
    """Window-averaged smoothed ring power interpolated at ``k = fov / (2 s)``.

    Scores are scaled so the largest ring power is 1.
    """
    p = smooth_ring_power(fov_windows(master, fov)).mean(axis=0)
    p = p / p.max()
    k = np.arange(1, len(p) + 1)
    return np.interp(fov / (2.0 * np.asarray(strides, dtype=float)), k, p)


def _first_within(score, target, rel, larger_is_better):
    if larger_is_better:
        ok = score >= target - rel * abs(target)
    else:
        ok = score <= target + rel * abs(target)
    return int(np.flatnonzero(ok)[0])


def _scores(master, fov, strides, method, obj, solver, seed, count, acq):
    if method == "power_spectrum":
        return spectrum_scores(master, fov, strides)
    score = np.empty(len(strides))
    for i, s in enumerate(strides):
        pset = extract_pattern_set(master, GridSpec.square(fov, count, int(s)))
        if method == "mse":
            rec = measure(pset, obj, acq or AcquisitionModel(), seed)
            score[i] = nmse(reconstruct(rec.recorded_patterns, rec.normalized_buckets, solver).values, obj)
        else:
            score[i] = svd_metrics(pset).stable_rank
    return score


def stride_scan(master, fov, strides, method="power_spectrum", obj=None, solver=None, seed=0,
                count=None, acq=None):
    """Score each stride with one of three methods.

    ``power_spectrum`` recommends the spectral peak; ``mse`` the first stride
    whose adjoint NMSE is within 5% of the best; ``stable_rank`` the first
    stride within 2% of the highest stable rank. Ties go to the smaller
    stride, which needs less mask. ``master`` may be a sequence of masters,
    in which case their score curves are averaged before choosing.
    """
    if method not in STRIDE_METHODS:
        raise ParameterError(f"unknown stride method {method!r}")
    strides = np.asarray(sorted(set(int(s) for s in strides)))
    if strides.size == 0 or strides[0] < 1:
        raise ParameterError("strides must be positive integers")
    if method == "mse" and obj is None:
        raise ParameterError("the mse stride method needs an object")
    masters = list(master) if isinstance(master, (list, tuple)) else [master]
    if not masters:
        raise ParameterError("no masters given")
    solver = solver or SolverConfig("adjoint_mean_corrected")
    score = np.mean([_scores(m, fov, strides, method, obj, solver, seed, count, acq) for m in masters], axis=0)
    if method == "power_spectrum":
        best = int(np.argmax(score))
    elif method == "mse":
        best = _first_within(score, score.min(), 0.05, False)
    else:
        best = _first_within(score, score.max(), 0.02, True)
    return StrideCurve(strides, score, method, int(strides[best]))
