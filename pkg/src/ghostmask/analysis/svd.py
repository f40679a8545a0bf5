"""Singular-value summaries of mean-corrected pattern matrices."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svdvals

from ..errors import SizeError
from ..recon import DENSE_CAP


@dataclass
class SvdReport:
    singular_values: np.ndarray
    stable_rank: float
    condition_number: float
    numerical_rank: int
    rank_tolerance: float = 1e-10

    @property
    def normalized(self):
        s = self.singular_values
        return s / s[0] if s.size and s[0] > 0 else s

    def to_csv(self, path, label=""):
        from ..io import write_table

        idx = np.arange(1, len(self.singular_values) + 1)
        return write_table(path, {"index": idx, "sigma": self.singular_values, "sigma_norm": self.normalized},
                           f"svd {label} stable_rank={self.stable_rank:.6g} "
                           f"condition_number={self.condition_number:.6g} numerical_rank={self.numerical_rank}",
                           gnuplot=True)


def stable_rank(s):
    s = np.asarray(s, dtype=float)
    return float(np.sum(s**2) / s[0] ** 2) if s.size and s[0] > 0 else 0.0


def svd_report(matrix, rank_tolerance=1e-10, cap=DENSE_CAP):
    """Singular values, stable rank and condition number of a matrix."""
    M = np.asarray(matrix, dtype=float)
    if M.size > cap:
        raise SizeError(f"{M.shape[0]}x{M.shape[1]} matrix exceeds dense cap {cap}")
    s = svdvals(M, check_finite=False)
    n = min(M.shape)
    cond = float(s[0] / s[n - 1]) if s[n - 1] > 0 else float("inf")
    rank = int(np.sum(s > rank_tolerance * s[0])) if s[0] > 0 else 0
    return SvdReport(s, stable_rank(s), cond, rank, rank_tolerance)


def svd_metrics(pset, rank_tolerance=1e-10, cap=DENSE_CAP):
    """:func:`svd_report` of the J x N^2 mean-corrected pattern matrix."""
    return svd_report(pset.centered(), rank_tolerance, cap)
