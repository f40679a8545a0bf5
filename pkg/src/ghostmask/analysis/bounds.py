"""First-order least-squares perturbation bound versus observed error."""
from dataclasses import dataclass

import numpy as np

from ..patterns import PatternSet
from ..recon import pinv_solve


@dataclass
class BoundReport:
    epsilon: float
    kappa: float
    sin_theta: float
    predicted_relative_error: float
    empirical_relative_error: float
    applicable: bool = True
    truth_relative_error: float = float("nan")

    def as_dict(self):
        return dict(self.__dict__)

    def to_csv(self, path, label=""):
        from ..io import write_table

        d = self.as_dict()
        return write_table(path, {k: [v] for k, v in d.items()}, f"bound {label}")


def _system(A, b, mean_corrected):
    if isinstance(A, PatternSet):
        A = A.centered() if mean_corrected else A.matrix()
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if mean_corrected:
        b = b - b.mean()
    return A, b


def condition_number(A):
    s = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    n = min(np.shape(A))
    return float(s[0] / s[n - 1]) if s[n - 1] > 0 else float("inf")


def predicted_bound(kappa, sin_theta, epsilon):
    """``(2 kappa / cos(theta) + tan(theta) kappa^2) * epsilon``."""
    cos_t = np.sqrt(max(0.0, 1.0 - sin_theta**2))
    if cos_t == 0:
        return float("inf")
    return float((2 * kappa / cos_t + sin_theta / cos_t * kappa**2) * epsilon)


def perturbation_report(A, A_pert, b, b_pert, truth=None, mean_corrected=False, tolerance=1e-12):
    """Compare the recovered-signal error with its first-order bound.

    ``A`` and ``A_pert`` may be matrices or pattern sets; with
    ``mean_corrected`` pattern sets and buckets are mean-corrected first.
    Both systems are solved by pseudoinverse; the empirical error compares
    the two solutions. If ``truth`` is given, the perturbed solution's
    error against it is reported as well.
    """
    A, b = _system(A, b, mean_corrected)
    Ap, bp = _system(A_pert, b_pert, mean_corrected)
    nb = np.linalg.norm(b)
    eps = max(np.linalg.norm(Ap - A, 2) / np.linalg.norm(A, 2),
              np.linalg.norm(bp - b) / nb if nb > 0 else 0.0)
    kappa = condition_number(A)
    t = pinv_solve(A, b, tolerance)
    tp = pinv_solve(Ap, bp, tolerance)
    r = b - A @ t
    sin_t = float(np.linalg.norm(r) / nb) if nb > 0 else 0.0
    nt = np.linalg.norm(t)
    emp = float(np.linalg.norm(tp - t) / nt) if nt > 0 else 0.0
    applicable = eps * kappa < 1 and sin_t < 1
    pred = predicted_bound(kappa, sin_t, eps) if applicable else float("nan")
    terr = float("nan")
    if truth is not None:
        tt = np.asarray(truth, dtype=float).ravel()
        terr = float(np.linalg.norm(tp - tt) / np.linalg.norm(tt))
    return BoundReport(float(eps), kappa, sin_t, pred, emp, bool(applicable), terr)
