"""Ghost-image reconstruction from patterns and bucket values.

All solvers accept either a single bucket vector of length J or a (J, m)
block of bucket vectors, in which case m images are recovered at once
(used for point-spread-function batches).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import _seed
from .errors import DegenerateInputError, DimensionError, PairingError, ParameterError, SizeError
from .patterns import PatternSet

METHODS = ("adjoint_raw", "adjoint_mean_corrected", "dgi", "kaczmarz", "landweber", "pinv")
DENSE_CAP = 25_000_000


@dataclass(frozen=True)
class SolverConfig:
    """Reconstruction method plus hyperparameters.

    ``relaxation`` is the Kaczmarz relaxation parameter. ``restore_mean``
    shifts mean-corrected solutions so their image mean equals the
    bucket-derived mean transmission. ``normalize`` rescales adjoint images
    into transmission units.
    """

    method: str = "kaczmarz"
    sweeps: int = 4
    relaxation: float = 1.0
    order_seed: int = 0
    iters: int = 10
    step: float | None = None
    tolerance: float = 1e-10
    restore_mean: bool = False
    normalize: bool = False
    block: int | None = None
    cap: int = DENSE_CAP

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0 < self.relaxation <= 1:
            raise ParameterError("relaxation must lie in (0, 1]")
        if self.sweeps < 0 or self.iters < 0:
            raise ParameterError("sweeps and iters must be >= 0")
        if self.tolerance < 0:
            raise ParameterError("tolerance must be >= 0")

    def describe(self):
        d = {"method": self.method}
        if self.method == "kaczmarz":
            d.update(sweeps=self.sweeps, relaxation=self.relaxation, order_seed=self.order_seed)
        elif self.method == "landweber":
            d.update(iters=self.iters, step=self.step)
        elif self.method == "pinv":
            d.update(tolerance=self.tolerance)
        return d


@dataclass
class ReconImage:
    values: np.ndarray
    method: dict = field(default_factory=dict)
    scale: int = 1

    @property
    def shape(self):
        return self.values.shape


def _buckets(pset, buckets):
    b = np.asarray(buckets, dtype=float)
    if b.shape[0] != len(pset):
        raise DimensionError(f"{b.shape[0]} buckets for {len(pset)} patterns")
    return b


def _as_images(pset, x):
    """Reshape (n,) or (n, m) solution vectors to (h, w) or (m, h, w)."""
    h, w = pset.shape
    if x.ndim == 1:
        return x.reshape(h, w)
    return x.T.reshape(-1, h, w)


def _scale(pset):
    return pset.meta.get("scale", 1)


def _dgi_mean(pset, b):
    total = pset.patterns.sum()
    if total <= 0:
        raise DegenerateInputError("patterns carry no transmission")
    return b.sum(axis=0) / total


def _restore(x, mu):
    return x - x.mean(axis=0) + mu


def recon_adjoint(pset, buckets, variant="mean_corrected", normalize=False):
    """Correlation (adjoint) image.

    ``raw`` computes ``sum_j A_j (b_j - <b>)``; ``mean_corrected`` computes
    ``A~^T b~``. The two agree up to rounding. With ``normalize`` the image
    is divided by ``J * var(A)`` and its mean set to the bucket-derived
    mean transmission.
    """
    b = _buckets(pset, buckets)
    bc = b - b.mean(axis=0)
    if variant == "raw":
        x = pset.matrix().T @ bc
    elif variant == "mean_corrected":
        x = pset.centered().T @ bc
    else:
        raise ParameterError(f"unknown adjoint variant {variant!r}")
    if normalize:
        var = pset.centered().var()
        if var == 0:
            raise DegenerateInputError("patterns have zero variance")
        x = _restore(x / (len(pset) * var), _dgi_mean(pset, b))
    return ReconImage(_as_images(pset, x), {"method": f"adjoint_{variant}", "normalize": normalize},
                      _scale(pset))


def recon_dgi(pset, buckets):
    """One unit-step Landweber iteration from the constant mean estimate."""
    b = _buckets(pset, buckets)
    A = pset.matrix()
    mu = _dgi_mean(pset, b)
    S = A.sum(axis=1)
    resid = b - np.multiply.outer(S, mu) if b.ndim > 1 else b - mu * S
    x = mu + A.T @ resid
    return ReconImage(_as_images(pset, x), {"method": "dgi", "mu": mu}, _scale(pset))


def kaczmarz(A, b, sweeps=4, relaxation=1.0, order_seed=0, x0=None, block=None, callback=None):
    """Randomized Kaczmarz sweeps for ``A x = b``.

    Each sweep visits every row once in a fresh random order and applies
    ``x += relaxation * (b_i - a_i.x) / |a_i|^2 * a_i``. Rows are processed in
    blocks: the sequential updates inside a block are reproduced exactly by
    one lower-triangular solve against the block Gram matrix, so results
    match the row-by-row loop to rounding.

    Args:
        A: (J, n) system matrix.
        b: (J,) or (J, m) right-hand sides.
        sweeps: Number of full passes over the rows.
        relaxation: Step scale in (0, 1].
        order_seed: Seed for the per-sweep row permutations.
        x0: Initial estimate, zero by default.
        block: Rows per block; chosen from the number of right-hand sides
            when omitted.
        callback: Called as ``callback(sweep, x)`` after every sweep.

    Returns:
        ``(x, skipped)`` where ``skipped`` counts zero-norm rows ignored.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    B = b[:, None] if single else b
    n = A.shape[1]
    x = np.zeros((n, B.shape[1])) if x0 is None else np.array(x0, dtype=float).reshape(n, -1).copy()
    norms = np.einsum("ij,ij->i", A, A)
    live = np.flatnonzero(norms > 0)
    skipped = len(A) - len(live)
    if block is None:
        block = 32 if B.shape[1] < 16 else 256
    gen = _seed.rng(order_seed, "kaczmarz")
    for s in range(sweeps):
        order = live[gen.permutation(len(live))]
        for start in range(0, len(order), block):
            rows = order[start:start + block]
            Ab = A[rows]
            G = Ab @ Ab.T
            M = np.tril(G, -1)
            M[np.diag_indices_from(M)] = norms[rows] / relaxation
            z = solve_triangular(M, B[rows] - Ab @ x, lower=True, check_finite=False)
            x += Ab.T @ z
        if callback is not None:
            callback(s, x[:, 0] if single else x)
    return (x[:, 0] if single else x), skipped


def recon_kaczmarz(pset, buckets, sweeps=4, relaxation=1.0, order_seed=0, initial=None,
                   restore_mean=False, block=None):
    """Kaczmarz solve of the mean-corrected system ``A~ t = b~``.

    The output is in mean-corrected units unless ``restore_mean`` is set,
    which shifts the image mean to the bucket-derived mean transmission.
    """
    b = _buckets(pset, buckets)
    bc = b - b.mean(axis=0)
    x0 = None if initial is None else np.asarray(initial, dtype=float).reshape(-1)
    if x0 is not None and bc.ndim > 1:
        x0 = np.repeat(x0[:, None], bc.shape[1], axis=1)
    x, skipped = kaczmarz(pset.centered(), bc, sweeps, relaxation, order_seed, x0, block)
    if restore_mean:
        x = _restore(x, _dgi_mean(pset, b))
    meta = {"method": "kaczmarz", "sweeps": sweeps, "relaxation": relaxation,
            "order_seed": order_seed, "skipped_rows": skipped}
    return ReconImage(_as_images(pset, x), meta, _scale(pset))


def spectral_norm(A, iters=50, seed=0):
    """Largest singular value by power iteration on ``A^T A``."""
    v = _seed.rng(seed, "power").standard_normal(A.shape[1])
    s = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        s = np.sqrt(nw)
    return s


def landweber(A, b, iters=10, step=None, x0=None):
    """Landweber iteration ``x += step * A^T (b - A x)``; step defaults to
    ``1 / sigma_1^2``."""
    b = np.asarray(b, dtype=float)
    if step is None:
        s1 = spectral_norm(A)
        if s1 == 0:
            raise DegenerateInputError("zero system matrix")
        step = 1.0 / s1**2
    shape = (A.shape[1],) + b.shape[1:]
    x = np.zeros(shape) if x0 is None else np.broadcast_to(np.asarray(x0, dtype=float), shape).copy()
    for _ in range(iters):
        x += step * (A.T @ (b - A @ x))
    return x


def recon_landweber(pset, buckets, iters=10, step=None, initial=None, mean_corrected=True,
                    restore_mean=False):
    b = _buckets(pset, buckets)
    if mean_corrected:
        A, rhs = pset.centered(), b - b.mean(axis=0)
    else:
        A, rhs = pset.matrix(), b
    x0 = None if initial is None else np.asarray(initial, dtype=float).reshape(-1)
    if x0 is not None and rhs.ndim > 1:
        x0 = x0[:, None]
    x = landweber(A, rhs, iters, step, x0)
    if restore_mean:
        x = _restore(x, _dgi_mean(pset, b))
    return ReconImage(_as_images(pset, x), {"method": "landweber", "iters": iters, "step": step},
                      _scale(pset))


def pinv_solve(A, b, tolerance=1e-10, cap=DENSE_CAP):
    """Minimum-norm least-squares solution with singular values below
    ``tolerance * sigma_1`` discarded."""
    if A.size > cap:
        raise SizeError(f"{A.shape[0]}x{A.shape[1]} system exceeds the dense cap of {cap} "
                        "elements; use the kaczmarz solver")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((A.shape[1],) + np.shape(b)[1:])
    keep = s > tolerance * s[0]
    Ub, sb, Vb = U[:, keep], s[keep], Vt[keep]
    c = Ub.T @ b
    c = c / (sb[:, None] if c.ndim > 1 else sb)
    return Vb.T @ c


def recon_pinv(pset, buckets, tolerance=1e-10, restore_mean=False, cap=DENSE_CAP):
    b = _buckets(pset, buckets)
    x = pinv_solve(pset.centered(), b - b.mean(axis=0), tolerance, cap)
    if restore_mean:
        x = _restore(x, _dgi_mean(pset, b))
    return ReconImage(_as_images(pset, x), {"method": "pinv", "tolerance": tolerance}, _scale(pset))


def reconstruct(pset, buckets, cfg=None):
    """Dispatch to the solver named in ``cfg``."""
    cfg = cfg or SolverConfig()
    if cfg.method == "adjoint_raw":
        return recon_adjoint(pset, buckets, "raw", cfg.normalize)
    if cfg.method == "adjoint_mean_corrected":
        return recon_adjoint(pset, buckets, "mean_corrected", cfg.normalize)
    if cfg.method == "dgi":
        return recon_dgi(pset, buckets)
    if cfg.method == "kaczmarz":
        return recon_kaczmarz(pset, buckets, cfg.sweeps, cfg.relaxation, cfg.order_seed,
                              restore_mean=cfg.restore_mean, block=cfg.block)
    if cfg.method == "landweber":
        return recon_landweber(pset, buckets, cfg.iters, cfg.step, restore_mean=cfg.restore_mean)
    return recon_pinv(pset, buckets, cfg.tolerance, cfg.restore_mean, cfg.cap)


def difference_set(pos, neg, atol=1e-9):
    """Difference patterns ``A+ - A-`` after checking the pairing."""
    if len(pos) != len(neg) or pos.shape != neg.shape:
        raise PairingError("positive and negative sets differ in size")
    if not np.allclose(pos.patterns + neg.patterns, 1.0, atol=atol):
        raise PairingError("negative patterns are not complements of the positive patterns")
    return PatternSet(pos.patterns - neg.patterns, pos.offsets, pos.source,
                      dict(pos.meta, differential=True))


def recon_differential(pos, neg, b_pos, b_neg, inner=None, check=True):
    """Solve with difference buckets ``b+ - b-`` against ``A+ - A-``.

    With ``check=False`` the complement test is skipped, which allows
    recorded (drifted or noisy) pattern pairs.
    """
    if check:
        diff = difference_set(pos, neg)
    else:
        if len(pos) != len(neg):
            raise PairingError("positive and negative sets differ in size")
        diff = PatternSet(pos.patterns - neg.patterns, pos.offsets, pos.source, dict(pos.meta))
    d = np.asarray(b_pos, dtype=float) - np.asarray(b_neg, dtype=float)
    out = reconstruct(diff, d, inner)
    out.method = dict(out.method, differential=True)
    return out
