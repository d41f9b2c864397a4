"""Linear representations: penalized subspace estimation and diagnostics.

The linear analogue of the two-stage procedure replaces networks with
matrices: a shared B_c with orthonormal columns such that B_c^T x carries
every source's predictive signal while being independent of the domain
indicator, and a target augmentation B_t orthogonal to B_c.  Orthonormality
and cross-orthogonality are enforced softly by Frobenius penalties during
optimization and hardened exactly afterward, so the projection-matrix
diagnostics below apply.

Solutions are non-unique; only the column span is identified, which is why
the quality measure throughout is the principal angle between subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import orth

from .dependence import dcov_grad_u, dcov_u
from .numkit import Layer, rmsprop_init, rmsprop_step
from .training import DomainDataset, domain_onehot


@dataclass
class LinearRep:
    """A d x r matrix whose column span is the learned subspace."""

    B: np.ndarray

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.B.ndim != 2:
            raise ValueError("B must be 2-D")
        if self.B.shape[1] > self.B.shape[0]:
            raise ValueError("more columns than rows")
        if not np.all(np.isfinite(self.B)):
            raise ValueError("B must be finite")

    @property
    def d(self) -> int:
        return self.B.shape[0]

    @property
    def r(self) -> int:
        return self.B.shape[1]


def orthonormalize(b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span (thin QR), keeping the width.

    Requires full column rank; use scipy.linalg.orth to drop rank instead.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[1] == 0:
        return b.copy()
    q, r = np.linalg.qr(b)
    if np.min(np.abs(np.diag(r))) < 1e-10:
        raise ValueError("columns are numerically rank deficient")
    return q * np.sign(np.diag(r))


def _center_whiten(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and whiten rows; returns (whitened, mean, W) with W symmetric.

    The whitening matrix W satisfies Cov((x - mean) W) = I empirically, so
    the identity-covariance simplification behind the projection formulas
    holds in the transformed coordinates.
    """
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / max(len(xc) - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, 1e-10)
    w = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    return xc @ w, mean, w


def _ortho_penalty(b: np.ndarray) -> tuple[float, np.ndarray]:
    """||B^T B - I||_F^2 and its gradient 4 B (B^T B - I)."""
    m = b.T @ b - np.eye(b.shape[1])
    return float((m * m).sum()), 4.0 * b @ m


def fit_linear_sirep(
    sources: list[DomainDataset],
    r_c: int,
    lambda_e: float = 1.0,
    lambda_z: float = 0.5,
    steps: int = 2000,
    learning_rate: float = 1e-2,
    batch_size: int = 128,
    rng: np.random.Generator | None = None,
) -> LinearRep:
    """Estimate the shared linear representation from the source domains.

    Minimizes, over B in the whitened coordinates,

        sum_s [ -dcov_u(X_s B, Y_s) + lambda_e ||B^T B - I||^2 ]
        + lambda_z dcov_u(X_pool B, Z)

    by mini-batch RMSprop, then maps B back to the original coordinates
    and hardens orthonormality, so the returned columns are exactly
    orthonormal and only the span is meaningful.
    """
    if rng is None:
        rng = np.random.default_rng()
    if not sources:
        raise ValueError("need at least one source")
    d = sources[0].d
    if any(s.d != d for s in sources):
        raise ValueError("sources must share the covariate dimension")
    if r_c > d:
        raise ValueError("r_c cannot exceed the covariate dimension")
    pooled_x = np.vstack([s.x for s in sources])
    _, mean, w = _center_whiten(pooled_x)
    xs = [(s.x - mean) @ w for s in sources]
    ys = [s.response_matrix() for s in sources]
    use_pooled = lambda_z != 0.0 and len(sources) > 1

    b = rng.standard_normal((d, r_c)) / np.sqrt(d)
    params = [Layer(weight=b, bias=np.zeros(r_c))]
    state = rmsprop_init(params, learning_rate)
    for _ in range(steps):
        bcur = params[0].weight
        grad = np.zeros_like(bcur)
        reps = []
        for xw, y in zip(xs, ys):
            nb = min(batch_size, xw.shape[0])
            idx = rng.choice(xw.shape[0], size=nb, replace=False)
            xb = xw[idx]
            rep = xb @ bcur
            grad += xb.T @ -dcov_grad_u(rep, y[idx])
            reps.append((xb, rep))
        # the orthonormality penalty sits inside the per-source sum
        _, pen_grad = _ortho_penalty(bcur)
        grad += len(sources) * lambda_e * pen_grad
        if use_pooled:
            pooled_rep = np.vstack([rep for _, rep in reps])
            z = domain_onehot([rep.shape[0] for _, rep in reps])
            pooled_grad = lambda_z * dcov_grad_u(pooled_rep, z)
            start = 0
            for xb, rep in reps:
                stop = start + rep.shape[0]
                grad += xb.T @ pooled_grad[start:stop]
                start = stop
        grads = [Layer(weight=grad, bias=np.zeros(r_c))]
        params, state = rmsprop_step(params, grads, state)
    return LinearRep(B=orthonormalize(w @ params[0].weight))


def fit_linear_augment(
    target: DomainDataset,
    b_c: LinearRep,
    r_t: int,
    lambda_e0: float = 1.0,
    lambda_c: float = 1.0,
    steps: int = 2000,
    learning_rate: float = 1e-2,
    batch_size: int = 128,
    rng: np.random.Generator | None = None,
) -> LinearRep:
    """Estimate the target augmentation B_t with B_c held fixed.

    Minimizes -dcov_u([X0 B_c, X0 B_t], Y0) + lambda_e0 ||B_t^T B_t - I||^2
    + lambda_c ||B_c^T B_t||^2.  The first block of the joint representation
    uses the given B_c on centered covariates and receives no gradient.
    """
    if rng is None:
        rng = np.random.default_rng()
    d = target.d
    if b_c.d != d:
        raise ValueError("B_c dimension does not match the target")
    if r_t > d - b_c.r:
        raise ValueError("no room in the orthogonal complement for r_t columns")
    _, mean, w = _center_whiten(target.x)
    xw = (target.x - mean) @ w
    xc = target.x - mean
    y = target.response_matrix()
    # B_c expressed in the whitened coordinates, for the cross penalty.
    m = w @ b_c.B

    b = rng.standard_normal((d, r_t)) / np.sqrt(d)
    params = [Layer(weight=b, bias=np.zeros(r_t))]
    state = rmsprop_init(params, learning_rate)
    n = xw.shape[0]
    for _ in range(steps):
        bcur = params[0].weight
        nb = min(batch_size, n)
        idx = rng.choice(n, size=nb, replace=False)
        rep_c = xc[idx] @ b_c.B
        rep_t = xw[idx] @ bcur
        joint = np.hstack([rep_c, rep_t])
        joint_grad = -dcov_grad_u(joint, y[idx])[:, b_c.r :]
        grad = xw[idx].T @ joint_grad
        _, pen_grad = _ortho_penalty(bcur)
        grad += lambda_e0 * pen_grad
        grad += lambda_c * 2.0 * m @ (m.T @ bcur)
        grads = [Layer(weight=grad, bias=np.zeros(r_t))]
        params, state = rmsprop_step(params, grads, state)
    # Harden the constraint B_c^T B_t = 0 exactly: remove any residual
    # component inside span(B_c) before orthonormalizing.
    b_eff = w @ params[0].weight
    q_c = orth(b_c.B) if b_c.r > 0 else b_c.B
    if q_c.shape[1] > 0:
        b_eff = b_eff - q_c @ (q_c.T @ b_eff)
    return LinearRep(B=orthonormalize(b_eff))


def projection_matrix(xc: np.ndarray, rep: LinearRep) -> np.ndarray:
    """n x n projection-style matrix X B B^T X^T for centered data.

    Valid only for exactly orthonormal B (checked to 1e-10); under zero
    mean and identity covariance this equals the least-squares projection
    onto the span of X B.
    """
    xc = np.asarray(xc, dtype=np.float64)
    b = rep.B
    if b.shape[1] > 0:
        gram = b.T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
            raise ValueError("B must have orthonormal columns")
    xb = xc @ b
    return xb @ xb.T


def principal_angles(b1, b2) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spans.

    Computed from the singular values of Q1^T Q2 with Q_i an orthonormal
    basis; values are clamped into [0, pi/2].
    """
    b1 = np.atleast_2d(np.asarray(b1, dtype=np.float64))
    b2 = np.atleast_2d(np.asarray(b2, dtype=np.float64))
    q1 = orth(b1)
    q2 = orth(b2)
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        raise ValueError("empty subspace")
    s = np.linalg.svd(q1.T @ q2, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, 0.0, 1.0)))
