"""Tests for linear subspace estimation and projection diagnostics."""

import numpy as np
import pytest

from tesr.linear import (
    LinearRep,
    fit_linear_augment,
    fit_linear_sirep,
    orthonormalize,
    principal_angles,
    projection_matrix,
)
from tesr.training import DomainDataset


def linear_source(n, d, direction, seed, noise=0.3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = x @ direction + noise * rng.normal(size=n)
    return DomainDataset(x=x, y=y, task="regression", domain_id=seed)


def angle_to(b, direction):
    return principal_angles(b, np.asarray(direction, dtype=np.float64).reshape(-1, 1))[
        -1
    ]


# ----------------------------------------------------------- small pieces


def test_linear_rep_validation():
    with pytest.raises(ValueError):
        LinearRep(B=np.ones((2, 3)))
    with pytest.raises(ValueError):
        LinearRep(B=np.array([[np.nan], [1.0]]))
    rep = LinearRep(B=np.eye(3)[:, :2])
    assert rep.d == 3 and rep.r == 2


def test_orthonormalize_produces_orthonormal_same_span():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(6, 3))
    q = orthonormalize(b)
    np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
    assert principal_angles(b, q).max() < 1e-10


def test_orthonormalize_rejects_rank_deficiency():
    b = np.ones((4, 2))
    with pytest.raises(ValueError):
        orthonormalize(b)


def test_principal_angles_known_cases():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    diag = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert principal_angles(e1, e1)[0] == pytest.approx(0.0)
    assert principal_angles(e1, e2)[0] == pytest.approx(np.pi / 2)
    assert principal_angles(e1, diag)[0] == pytest.approx(np.pi / 4)


def test_principal_angles_rotation_invariant():
    rng = np.random.default_rng(1)
    b = rng.normal(size=(5, 2))
    rot = np.linalg.qr(rng.normal(size=(2, 2)))[0]
    # arccos near 1 amplifies roundoff, so the bound is loose in ulp terms
    np.testing.assert_allclose(
        principal_angles(b, b @ rot), np.zeros(2), atol=1e-6
    )


# ------------------------------------------------------------- projections


def test_projection_matrix_additivity():
    rng = np.random.default_rng(2)
    for _ in range(100):
        d = rng.integers(4, 9)
        r1 = rng.integers(1, d - 1)
        r2 = rng.integers(1, d - r1 + 1)
        basis = orthonormalize(rng.normal(size=(d, r1 + r2)))
        bc = LinearRep(B=basis[:, :r1])
        bt = LinearRep(B=basis[:, r1:])
        joint = LinearRep(B=basis)
        x = rng.normal(size=(12, d))
        x = x - x.mean(axis=0)
        p_sum = projection_matrix(x, bc) + projection_matrix(x, bt)
        np.testing.assert_allclose(projection_matrix(x, joint), p_sum, atol=1e-10)


def test_projection_matrix_identity_basis():
    rng = np.random.default_rng(3)
    x = orthonormalize(rng.normal(size=(6, 4))).T  # orthonormal rows, 4 x 6
    full = LinearRep(B=np.eye(6))
    np.testing.assert_allclose(projection_matrix(x, full), x @ x.T, atol=1e-12)


def test_projection_matrix_zero_columns():
    x = np.random.default_rng(4).normal(size=(5, 3))
    empty = LinearRep(B=np.zeros((3, 0)))
    np.testing.assert_array_equal(projection_matrix(x, empty), np.zeros((5, 5)))


def test_projection_matrix_requires_orthonormal():
    x = np.zeros((4, 3))
    with pytest.raises(ValueError):
        projection_matrix(x, LinearRep(B=np.full((3, 2), 0.5)))


# ------------------------------------------------------------------- fits


def test_sirep_recovers_single_direction():
    angles = []
    for seed in range(10):
        src = linear_source(400, 5, np.eye(5)[:, 0], seed=seed)
        rep = fit_linear_sirep(
            [src], r_c=1, steps=800, rng=np.random.default_rng(100 + seed)
        )
        np.testing.assert_allclose(rep.B.T @ rep.B, np.eye(1), atol=1e-10)
        angles.append(angle_to(rep.B, np.eye(5)[:, 0]))
    assert np.median(angles) < 0.2


def test_sirep_two_sources_two_directions():
    d = 5
    src1 = linear_source(400, d, np.eye(d)[:, 0], seed=20)
    src2 = linear_source(400, d, np.eye(d)[:, 1], seed=21)
    rep = fit_linear_sirep(
        [src1, src2], r_c=2, steps=1200, rng=np.random.default_rng(22)
    )
    target_span = np.eye(d)[:, :2]
    assert principal_angles(rep.B, target_span).max() < 0.3


def test_sirep_validation():
    src = linear_source(50, 3, np.eye(3)[:, 0], seed=30)
    with pytest.raises(ValueError):
        fit_linear_sirep([src], r_c=4, rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        fit_linear_sirep([], r_c=1, rng=np.random.default_rng(0))


def test_augment_recovers_missing_direction():
    # Sufficient directions are e1..e4; B_c covers e1..e3, so the
    # augmentation must pick up e4.
    rng = np.random.default_rng(40)
    d = 6
    x = rng.normal(size=(500, d))
    y = x[:, 0] + x[:, 1] + x[:, 2] + 2.0 * x[:, 3] + 0.3 * rng.normal(size=500)
    target = DomainDataset(x=x, y=y, task="regression")
    bc = LinearRep(B=np.eye(d)[:, :3])
    bt = fit_linear_augment(target, bc, r_t=1, rng=np.random.default_rng(41))
    assert angle_to(bt.B, np.eye(d)[:, 3]) < 0.2
    assert np.linalg.norm(bc.B.T @ bt.B) < 0.05
    np.testing.assert_allclose(bt.B.T @ bt.B, np.eye(1), atol=1e-10)


def test_augment_stays_out_of_bc_span():
    rng = np.random.default_rng(42)
    d = 6
    x = rng.normal(size=(400, d))
    y = x[:, 0] + 0.3 * rng.normal(size=400)
    target = DomainDataset(x=x, y=y, task="regression")
    bc = LinearRep(B=np.eye(d)[:, :2])
    bt = fit_linear_augment(target, bc, r_t=2, rng=np.random.default_rng(43))
    assert np.abs(bt.B[:2, :]).max() < 0.1


def test_augment_validation():
    src = linear_source(50, 4, np.eye(4)[:, 0], seed=50)
    bc = LinearRep(B=np.eye(4)[:, :3])
    with pytest.raises(ValueError):
        fit_linear_augment(src, bc, r_t=2, rng=np.random.default_rng(0))
    bc_other = LinearRep(B=np.eye(5)[:, :1])
    with pytest.raises(ValueError):
        fit_linear_augment(src, bc_other, r_t=1, rng=np.random.default_rng(0))


def test_sirep_subspace_stable_under_init_rotation():
    # Only the span is identified; different random inits land on the
    # same subspace for a well-determined problem.
    src = linear_source(400, 5, np.eye(5)[:, 0], seed=60)
    rep1 = fit_linear_sirep([src], r_c=1, steps=800, rng=np.random.default_rng(61))
    rep2 = fit_linear_sirep([src], r_c=1, steps=800, rng=np.random.default_rng(62))
    assert principal_angles(rep1.B, rep2.B).max() < 0.1
