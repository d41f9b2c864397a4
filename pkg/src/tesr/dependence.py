"""Empirical distance covariance and energy distance, with analytic gradients.

Both statistics are built from pairwise Euclidean distances:

* ``dcov_u`` is the unbiased (U-statistic) estimator of squared distance
  covariance.  It is zero in expectation exactly when the two samples are
  drawn from independent distributions, which makes ``-dcov_u`` a usable
  training loss for extracting predictive structure.
* ``energy_distance`` is the two-sample energy statistic, zero in
  expectation exactly when the two samples share a distribution.  It is
  used here to pull learned representations toward a standard Gaussian
  reference sample.

The ``*_grad_u`` companions return the exact gradient of each statistic
with respect to the first sample's entries, so the statistics can sit at
the top of a hand-rolled backprop stack.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np
from scipy.spatial.distance import cdist

from .numkit import as_matrix

# Distances below this are treated as coincident points: the distance
# gradient is defined as the zero vector there (0 is in the subgradient).
COINCIDENT_TOL = 1e-12


def _check_pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    if u.shape[0] != v.shape[0]:
        raise ValueError(f"row counts differ: {u.shape[0]} vs {v.shape[0]}")
    return u, v


def u_centered(d) -> np.ndarray:
    """U-center a pairwise distance matrix.

    For an (n, n) matrix ``d`` the result has, off the diagonal,

        d[i, j] - row_i/(n-2) - col_j/(n-2) + total/((n-1)(n-2))

    and an exactly zero diagonal.  Requires n >= 4 for the inner product
    below to be meaningful.
    """
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[1] != n:
        raise ValueError("expected a square matrix")
    if n < 3:
        raise ValueError("U-centering needs at least 3 rows")
    total = d.sum() / ((n - 1.0) * (n - 2.0))
    rows = d.sum(axis=1, keepdims=True) / (n - 2.0)
    cols = d.sum(axis=0, keepdims=True) / (n - 2.0)
    out = d - rows - cols + total
    np.fill_diagonal(out, 0.0)
    return out


def dcov_u(u, v) -> float:
    """Unbiased empirical squared distance covariance of two samples.

    Parameters
    ----------
    u : (n, p) array_like
    v : (n, q) array_like
        Paired samples; row i of ``u`` and row i of ``v`` belong to the
        same observation.

    Returns
    -------
    float
        The U-statistic estimate.  Unlike the population quantity it may
        be negative.

    Notes
    -----
    Computed in O(n^2) as the inner product of the U-centered distance
    matrices divided by n(n-3).  ``dcov_u_bruteforce`` evaluates the same
    statistic by enumerating sample quadruples and is used to pin this
    implementation down in the tests.
    """
    u, v = _check_pair(u, v)
    n = u.shape[0]
    if n < 4:
        raise ValueError("dcov_u needs at least 4 rows")
    a = u_centered(cdist(u, u))
    b = u_centered(cdist(v, v))
    return float((a * b).sum() / (n * (n - 3.0)))


def _quad_kernel_terms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel over 4-point distance blocks; ``a``, ``b`` are (m, 4, 4)."""
    off = ~np.eye(4, dtype=bool)
    ab = (a * b)[:, off].sum(axis=1)
    sa = a[:, off].sum(axis=1)
    sb = b[:, off].sum(axis=1)
    ra = a.sum(axis=2)
    rb = b.sum(axis=2)
    return 0.25 * ab + sa * sb / 24.0 - 0.25 * (ra * rb).sum(axis=1)


def dcov_u_bruteforce(u, v) -> float:
    """Evaluate the distance-covariance U-statistic by quadruple enumeration.

    Averages the 4-point kernel

        h = (1/4) sum_{i != j} a_ij b_ij
            + (1/24) (sum_{i != j} a_ij)(sum_{i != j} b_ij)
            - (1/4) sum_i (sum_{j != i} a_ij)(sum_{j != i} b_ij)

    over all C(n, 4) unordered quadruples, where a and b are the 4x4
    distance blocks of the quadruple.  Combinatorial oracle; restricted
    to 4 <= n <= 14.
    """
    u, v = _check_pair(u, v)
    n = u.shape[0]
    if not 4 <= n <= 14:
        raise ValueError("brute-force enumeration is limited to 4 <= n <= 14")
    a_full = cdist(u, u)
    b_full = cdist(v, v)
    quads = np.array(list(combinations(range(n), 4)))
    a = a_full[quads[:, :, None], quads[:, None, :]]
    b = b_full[quads[:, :, None], quads[:, None, :]]
    return float(_quad_kernel_terms(a, b).mean())


def energy_distance(u, v) -> float:
    """Empirical energy distance between two equal-size samples.

    Averages the pair kernel

        h_e(u1, u2; v1, v2) = |u1 - v2| + |u2 - v1| - |u1 - u2| - |v1 - v2|

    over all C(n, 2) unordered index pairs.  Zero in expectation when both
    samples share a distribution; exactly zero when ``v`` equals ``u``
    row for row.  The empirical value may be negative.
    """
    u, v = _check_pair(u, v)
    if u.shape[1] != v.shape[1]:
        raise ValueError(f"column counts differ: {u.shape[1]} vs {v.shape[1]}")
    n = u.shape[0]
    if n < 2:
        raise ValueError("energy_distance needs at least 2 rows")
    cross = cdist(u, v)
    within_u = cdist(u, u)
    within_v = cdist(v, v)
    # The kernel never pairs u_i with v_i, so drop the cross diagonal.
    cross_sum = cross.sum() - np.trace(cross)
    total = cross_sum - within_u.sum() / 2.0 - within_v.sum() / 2.0
    return float(total / comb(n, 2))


def gaussian_reference(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """An (n, r) sample of i.i.d. standard normal entries from ``rng``."""
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive")
    return rng.standard_normal((n, r))


def grad_through_distances(u: np.ndarray, grad_d: np.ndarray) -> np.ndarray:
    """Chain a gradient on the distance matrix of ``u`` back to ``u``.

    ``grad_d[i, j]`` is the loss gradient with respect to the Euclidean
    distance between rows i and j (diagonal ignored).  Coincident pairs
    contribute nothing.
    """
    d = cdist(u, u)
    w = np.zeros_like(d)
    np.divide(grad_d + grad_d.T, d, out=w, where=d > COINCIDENT_TOL)
    return w.sum(axis=1)[:, None] * u - w @ u


def dcov_grad_u(u, v) -> np.ndarray:
    """Gradient of ``dcov_u(u, v)`` with respect to the entries of ``u``.

    Uses the fact that U-centering is an orthogonal projection, so the
    gradient of the inner product with respect to the first distance
    matrix is simply the U-centered second matrix divided by n(n-3).
    """
    u, v = _check_pair(u, v)
    n = u.shape[0]
    if n < 4:
        raise ValueError("dcov_grad_u needs at least 4 rows")
    b = u_centered(cdist(v, v))
    grad_d = b / (n * (n - 3.0))
    return grad_through_distances(u, grad_d)


def energy_grad_u(u, v) -> np.ndarray:
    """Gradient of ``energy_distance(u, v)`` with respect to ``u``."""
    u, v = _check_pair(u, v)
    if u.shape[1] != v.shape[1]:
        raise ValueError(f"column counts differ: {u.shape[1]} vs {v.shape[1]}")
    n = u.shape[0]
    if n < 2:
        raise ValueError("energy_grad_u needs at least 2 rows")
    cross = cdist(u, v)
    within = cdist(u, u)
    wc = np.zeros_like(cross)
    np.divide(1.0, cross, out=wc, where=cross > COINCIDENT_TOL)
    np.fill_diagonal(wc, 0.0)  # paired terms u_i, v_i never appear
    wa = np.zeros_like(within)
    np.divide(1.0, within, out=wa, where=within > COINCIDENT_TOL)
    cross_part = wc.sum(axis=1)[:, None] * u - wc @ v
    within_part = wa.sum(axis=1)[:, None] * u - wa @ u
    return (cross_part - within_part) / comb(n, 2)
