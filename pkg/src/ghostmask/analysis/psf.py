"""Point spread function of a measure-and-reconstruct pipeline."""
from dataclasses import dataclass, field

import numpy as np

from .. import _seed
from ..errors import GhostMaskError, ParameterError
from ..forward import AcquisitionModel, measure
from ..recon import SolverConfig, reconstruct


@dataclass
class PsfResult:
    psf: np.ndarray
    fwhm_x: float
    fwhm_y: float
    method: dict = field(default_factory=dict)
    sample_points: int = 0

    @property
    def fwhm(self):
        return 0.5 * (self.fwhm_x + self.fwhm_y)

    @property
    def center(self):
        h, w = self.psf.shape
        return h // 2, w // 2

    def to_csv(self, path):
        from ..io import write_table

        h, w = self.psf.shape
        yy, xx = np.mgrid[:h, :w]
        cy, cx = self.center
        return write_table(path, {"dx": (xx - cx).ravel(), "dy": (yy - cy).ravel(), "psf": self.psf.ravel()},
                           f"psf method={self.method} points={self.sample_points} "
                           f"fwhm_x={self.fwhm_x:.6g} fwhm_y={self.fwhm_y:.6g} fwhm={self.fwhm:.6g}")


def profile_fwhm(profile, center):
    """Full width at half maximum around ``center`` by linear interpolation
    of the half-maximum crossings on either side."""
    p = np.asarray(profile, dtype=float)
    peak = p[center]
    if peak <= 0:
        return float("nan")
    half = peak / 2

    def crossing(direction):
        i = center
        while 0 <= i + direction < len(p):
            j = i + direction
            if p[j] < half:
                return i + direction * (p[i] - half) / (p[i] - p[j])
            i = j
        return float(i)

    return float(crossing(1) - crossing(-1))


def fwhm_2d(psf, center=None):
    h, w = psf.shape
    cy, cx = (h // 2, w // 2) if center is None else center
    return profile_fwhm(psf[cy, :], cx), profile_fwhm(psf[:, cx], cy)


def sample_pixels(shape, sample_points=None):
    """All pixels, or a uniformly strided subsample of ``sample_points``."""
    n = shape[0] * shape[1]
    if sample_points is None or sample_points >= n:
        return np.arange(n)
    if sample_points < 1:
        raise ParameterError("sample_points must be >= 1")
    return np.unique(np.linspace(0, n - 1, sample_points).round().astype(int))


def compute_psf(pset, acq=None, solver=None, sample_points=None, seed=0, batch=512):
    """Average centred impulse response.

    Each sampled pixel is imaged as a delta object, reconstructed, rolled so
    the impulse location sits at the central bin and accumulated. Noiseless
    acquisitions use the pattern columns directly as bucket vectors and
    reconstruct whole batches at once.
    """
    acq = acq or AcquisitionModel()
    solver = solver or SolverConfig("adjoint_mean_corrected")
    h, w = pset.shape
    if sample_points is not None and sample_points > h * w:
        raise ParameterError("sample_points exceeds the number of pixels")
    pts = sample_pixels((h, w), sample_points)
    cy, cx = h // 2, w // 2
    acc = np.zeros((h, w))
    simple = acq.noiseless and acq.flux_drift_rel_sigma == 0 and acq.background_rel_sigma == 0 \
        and acq.beam is None and acq.pairing == "single"
    A = pset.matrix()
    for start in range(0, len(pts), batch):
        chunk = pts[start:start + batch]
        try:
            if simple:
                imgs = reconstruct(pset, A[:, chunk], solver).values
            else:
                imgs = []
                for p in chunk:
                    obj = np.zeros((h, w))
                    obj.flat[p] = 1.0
                    rec = measure(pset, obj, acq, _seed.derive_seed(seed, "psf", int(p)))
                    imgs.append(reconstruct(rec.recorded_patterns, rec.normalized_buckets, solver).values)
                imgs = np.array(imgs)
        except GhostMaskError as exc:
            raise type(exc)(f"PSF point {int(chunk[0])}: {exc}") from exc
        imgs = imgs.reshape(len(chunk), h, w)
        for img, p in zip(imgs, chunk):
            y, x = divmod(int(p), w)
            acc += np.roll(img, (cy - y, cx - x), axis=(0, 1))
    psf = acc / len(pts)
    fx, fy = fwhm_2d(psf, (cy, cx))
    return PsfResult(psf, fx, fy, solver.describe(), len(pts))
