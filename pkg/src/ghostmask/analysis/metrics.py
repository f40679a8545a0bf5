"""Image error metrics and the relative gradient magnitude of a pattern set."""
import numpy as np

from ..errors import DegenerateInputError, DimensionError, ParameterError


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def zscore(a):
    s = a.std()
    if s == 0:
        raise DegenerateInputError("image has zero variance")
    return (a - a.mean()) / s


def rmse(a, b):
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def nmse(a, b):
    """Mean squared difference after standardizing both images."""
    a, b = _pair(a, b)
    return float(np.mean((zscore(a) - zscore(b)) ** 2))


def image_error(a, b, metric="nmse"):
    if metric == "nmse":
        return nmse(a, b)
    if metric == "rmse":
        return rmse(a, b)
    raise ParameterError(f"unknown metric {metric!r}")


def forward_gradient(images):
    """Forward differences along the last two axes; the final row/column
    repeats the one-sided difference of its neighbour."""
    a = np.asarray(images, dtype=float)
    gx = np.empty_like(a)
    gy = np.empty_like(a)
    gx[..., :, :-1] = np.diff(a, axis=-1)
    gx[..., :, -1] = gx[..., :, -2] if a.shape[-1] > 1 else 0.0
    gy[..., :-1, :] = np.diff(a, axis=-2)
    gy[..., -1, :] = gy[..., -2, :] if a.shape[-2] > 1 else 0.0
    return gx, gy


def gradient_norm(pset):
    """``||grad A|| / ||A~||`` over the whole set."""
    gx, gy = forward_gradient(pset.patterns)
    num = np.sqrt(np.sum(gx**2) + np.sum(gy**2))
    den = np.sqrt(np.sum(pset.centered() ** 2))  # plain sum: BLAS dot varies with thread count
    if den == 0 or num == 0:
        raise DegenerateInputError("pattern set has no variation")
    return float(num / den)
