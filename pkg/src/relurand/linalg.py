"""Dense linear algebra and sampling primitives.

Matrices and vectors are plain float64 numpy arrays throughout the
package; this module adds the few operations the rest of the code needs:
gaussian matrix sampling, a power-iteration spectral norm, and the
two-sample Kolmogorov-Smirnov statistic.
"""

from __future__ import annotations

import numpy as np

from .errors import NonConverged
from .rng import RngStream

__all__ = ["gaussian_matrix", "spectral_norm", "ks_two_sample", "ks_critical_value"]


def gaussian_matrix(rows: int, cols: int, std: float, rng: RngStream) -> np.ndarray:
    """Dense rows x cols matrix with iid N(0, std^2) entries."""
    return std * rng.normal((rows, cols))


def spectral_norm(M: np.ndarray, tol: float = 1e-10, max_iters: int = 10_000) -> float:
    """Largest singular value of M by power iteration on M^T M.

    Deterministic start: e_1 plus a fixed small perturbation so the
    initial vector is never orthogonal to the top singular direction of
    any matrix we care about.  Convergence is declared when the Rayleigh
    quotient moves by less than tol (relatively) between sweeps.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("spectral_norm requires a nonempty 2-d matrix")
    n = M.shape[1]
    v = np.zeros(n)
    v[0] = 1.0
    v += 1e-4 / (1.0 + np.arange(n))
    v /= np.linalg.norm(v)

    prev = -1.0
    for _ in range(max_iters):
        w = M.T @ (M @ v)
        rayleigh = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if prev >= 0.0 and abs(rayleigh - prev) <= tol * max(rayleigh, 1e-300):
            return float(np.sqrt(max(rayleigh, 0.0)))
        prev = rayleigh
    raise NonConverged(
        f"power iteration did not reach tol={tol} within {max_iters} iterations"
    )


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup_t |F_a(t) - F_b(t)|."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample requires nonempty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n_a: int, n_b: int, level: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(level) * sqrt((n_a+n_b)/(n_a*n_b))."""
    # c(alpha) = sqrt(-ln(alpha/2)/2); c(0.01) = 1.628
    c = np.sqrt(-0.5 * np.log(level / 2.0))
    return float(c * np.sqrt((n_a + n_b) / (n_a * n_b)))
