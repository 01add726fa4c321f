import math

import numpy as np
import pytest

import spikedsv as sv
from spikedsv.errors import (
    DimensionError,
    DomainError,
    NearSingularShift,
    UnknownTheta,
)


@pytest.fixture(scope="module")
def mp_trial():
    """One MP c=1, theta=2 trial at n=200 with everything precomputed."""
    n = 200
    rng = np.random.default_rng(12)
    x = sv.sample_noise(sv.GaussianRect(), n, n, rng)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0,)), n, n, rng)
    perturbed = x + pert.matrix()
    s, w, y = sv.svd_dense(perturbed)
    sigma_x = np.linalg.svd(x, compute_uv=False)
    return x, pert, s, w, y, sigma_x


# ---------------------------------------------------------------------------
# noise sampling
# ---------------------------------------------------------------------------


def test_gaussian_frobenius_scale():
    rng = np.random.default_rng(0)
    x = sv.sample_noise(sv.GaussianRect(), 200, 400, rng)
    assert abs(np.linalg.norm(x) ** 2 / 200 - 1.0) < 0.05


def test_gaussian_complex_variance():
    rng = np.random.default_rng(1)
    x = sv.sample_noise(sv.GaussianRect(beta=2), 200, 400, rng)
    assert np.iscomplexobj(x)
    assert abs(np.mean(np.abs(x) ** 2) * 400 - 1.0) < 0.05


def test_gaussian_top_singular_value_near_edge():
    rng = np.random.default_rng(2)
    x = sv.sample_noise(sv.GaussianRect(), 400, 400, rng)
    assert abs(np.linalg.svd(x, compute_uv=False)[0] - 2.0) < 0.1


@pytest.mark.parametrize("beta", [1, 2])
def test_haar_unitary(beta):
    rng = np.random.default_rng(3)
    x = sv.sample_noise(sv.HaarSquare(beta=beta), 60, 60, rng)
    assert np.max(np.abs(x.conj().T @ x - np.eye(60))) < 1e-10


def test_noise_dimension_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(DimensionError):
        sv.sample_noise(sv.GaussianRect(), 10, 5, rng)
    with pytest.raises(DimensionError):
        sv.sample_noise(sv.HaarSquare(), 5, 10, rng)


def test_matrix_factory_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    a = rng.standard_normal((7, 11))
    path = tmp_path / "noise.rmsv"
    sv.save_matrix(path, a)
    assert np.array_equal(sv.load_matrix(path), a)
    factory = sv.factory_from_file(path, sv.point_mass(1.0))
    assert np.array_equal(sv.sample_noise(factory, 7, 11, rng), a)
    with pytest.raises(DimensionError):
        sv.sample_noise(factory, 7, 12, rng)
    bad = tmp_path / "bad.rmsv"
    bad.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(DomainError):
        sv.load_matrix(bad)


def test_matrix_dump_complex(tmp_path):
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    path = tmp_path / "cplx.rmsv"
    sv.save_matrix(path, a)
    assert np.array_equal(sv.load_matrix(path), a)


# ---------------------------------------------------------------------------
# perturbation sampling
# ---------------------------------------------------------------------------


def test_orthonormalized_blocks():
    rng = np.random.default_rng(6)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0, 1.0)), 100, 150, rng)
    for block in (pert.left, pert.right):
        assert np.max(np.abs(block.conj().T @ block - np.eye(2))) < 1e-10
    vals = np.linalg.svd(pert.matrix(), compute_uv=False)
    assert np.allclose(vals[:2], [2.0, 1.0], atol=1e-10)


def test_iid_column_norms():
    rng = np.random.default_rng(7)
    pert = sv.sample_perturbation(
        sv.SpikeSpec(thetas=(1.0,), model="iid"), 10_000, 10_000, rng
    )
    assert abs(np.linalg.norm(pert.left[:, 0]) - 1.0) < 0.05
    # Rank-1 top singular value is theta ||u|| ||v||; check on small dims.
    small = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0,), model="iid"), 300, 300, rng)
    vals = np.linalg.svd(small.matrix(), compute_uv=False)
    norm_prod = 2.0 * np.linalg.norm(small.left[:, 0]) * np.linalg.norm(small.right[:, 0])
    assert abs(vals[0] - norm_prod) < 1e-10


def test_perturbation_apply_matches_matrix():
    rng = np.random.default_rng(8)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0, 1.0)), 30, 40, rng)
    p = pert.matrix()
    v = rng.standard_normal(40)
    u = rng.standard_normal(30)
    assert np.allclose(pert.apply_left(v), p @ v)
    assert np.allclose(pert.apply_right(u), p.conj().T @ u)


def test_rademacher_entry_law():
    rng = np.random.default_rng(9)
    pert = sv.sample_perturbation(
        sv.SpikeSpec(thetas=(1.0,), model="iid"), 64, 64, rng, entry_law="rademacher"
    )
    assert np.allclose(np.abs(pert.left) * math.sqrt(64), 1.0)
    with pytest.raises(DomainError):
        sv.sample_perturbation(
            sv.SpikeSpec(thetas=(1.0,)), 8, 8, rng, entry_law="cauchy"
        )


def test_perturbation_rank_too_large():
    rng = np.random.default_rng(10)
    with pytest.raises(DimensionError):
        sv.sample_perturbation(sv.SpikeSpec(thetas=(3.0, 2.0, 1.0)), 2, 5, rng)


# ---------------------------------------------------------------------------
# svd_dense
# ---------------------------------------------------------------------------


def test_svd_dense_diag():
    a = np.zeros((2, 4))
    a[0, 0], a[1, 1] = 3.0, 1.0
    s, w, y = sv.svd_dense(a)
    assert np.allclose(s, [3.0, 1.0])
    assert np.allclose((w * s) @ y.conj().T, a, atol=1e-12)


def test_svd_dense_haar_all_ones():
    rng = np.random.default_rng(11)
    x = sv.sample_noise(sv.HaarSquare(), 40, 40, rng)
    s, _, _ = sv.svd_dense(x)
    assert np.max(np.abs(s - 1.0)) < 1e-10


def test_svd_dense_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((50, 80)) / math.sqrt(80)
    s, w, y = sv.svd_dense(a)
    evals = np.linalg.eigvalsh(a @ a.conj().T)[::-1]
    assert np.max(np.abs(s - np.sqrt(np.clip(evals, 0, None)))) < 1e-8
    recon = (w * s) @ y.conj().T
    assert np.linalg.norm(recon - a) <= 1e-10 * np.linalg.norm(a)


def test_svd_dense_rejects_tall():
    with pytest.raises(DimensionError):
        sv.svd_dense(np.zeros((5, 3)))


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def test_projection_norms_self_and_orthogonal():
    rng = np.random.default_rng(14)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0,)), 50, 50, rng)
    u1 = pert.left[:, 0]
    v1 = pert.right[:, 0]
    left, right = sv.projection_norms(u1, v1, pert, 2.0)
    assert abs(left - 1.0) < 1e-12 and abs(right - 1.0) < 1e-12
    # Build a vector orthogonal to the span.
    w = rng.standard_normal(50)
    w -= u1 * (u1 @ w)
    w /= np.linalg.norm(w)
    left, _ = sv.projection_norms(w, v1, pert, 2.0)
    assert left < 1e-20
    with pytest.raises(UnknownTheta):
        sv.projection_norms(u1, v1, pert, 3.0)


def test_projection_norms_tied_thetas_span():
    rng = np.random.default_rng(15)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0, 2.0, 1.0)), 60, 60, rng)
    combo = pert.left[:, 0] * 0.6 + pert.left[:, 1] * 0.8
    combo /= np.linalg.norm(combo)
    left, _ = sv.projection_norms(combo, pert.right[:, 0], pert, 2.0)
    assert abs(left - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# master matrix and kernel identity
# ---------------------------------------------------------------------------


def test_master_matrix_singular_at_spike(mp_trial):
    x, pert, s, w, y, sigma_x = mp_trial
    mm = sv.master_matrix(x, pert, float(s[0]), sigma_x)
    assert mm.min_singular_relative() < 1e-10


def test_master_matrix_far_field_limit(mp_trial):
    x, pert, *_ , sigma_x = mp_trial
    mm = sv.master_matrix(x, pert, 1e8, sigma_x)
    target = np.array([[0.0, -0.5], [-0.5, 0.0]])
    assert np.max(np.abs(mm.entries - target)) < 1e-7
    assert abs(mm.det().real - (-0.25)) < 1e-7


def test_master_matrix_near_singular_guard(mp_trial):
    x, pert, *_ , sigma_x = mp_trial
    with pytest.raises(NearSingularShift):
        sv.master_matrix(x, pert, float(sigma_x[3]), sigma_x)


def test_master_matrix_limit_deviation(mp_trial, mp1_ctx):
    x, pert, *_ , sigma_x = mp_trial
    rho = 2.5
    mn = sv.master_matrix(x, pert, rho, sigma_x).entries
    mlim = sv.master_matrix_limit(mp1_ctx, np.array([2.0]), rho)
    expected = np.array([[0.5, 0.0], [0.0, 0.5]]) + np.array([[0.0, -0.5], [-0.5, 0.0]])
    assert np.max(np.abs(mlim - expected)) < 1e-9
    assert np.max(np.abs(mn - mlim)) < 0.15


def test_kernel_identity_at_triplet(mp_trial):
    x, pert, s, w, y, sigma_x = mp_trial
    ident, kvec = sv.kernel_identity_residual(
        x, pert, float(s[0]), w[:, 0], y[:, 0], sigma_x
    )
    assert ident < 1e-10
    assert kvec < 1e-10


def test_kernel_identity_off_triplet(mp_trial):
    x, pert, s, w, y, sigma_x = mp_trial
    rng = np.random.default_rng(16)
    u = rng.standard_normal(x.shape[0])
    u /= np.linalg.norm(u)
    v = rng.standard_normal(x.shape[1])
    v /= np.linalg.norm(v)
    ident, _ = sv.kernel_identity_residual(x, pert, 2.6, u, v, sigma_x)
    assert ident > 0.1


def test_master_matrix_rank2(mp_trial):
    x, *_ , sigma_x = mp_trial
    rng = np.random.default_rng(17)
    pert = sv.sample_perturbation(sv.SpikeSpec(thetas=(2.0, 1.5)), 200, 200, rng)
    s, w, y = sv.svd_dense(x + pert.matrix())
    for k in range(2):
        mm = sv.master_matrix(x, pert, float(s[k]), sigma_x)
        assert mm.entries.shape == (4, 4)
        assert mm.min_singular_relative() < 1e-9


# ---------------------------------------------------------------------------
# concentration of planted directions
# ---------------------------------------------------------------------------


def test_concentration_orthonormalized_identity_matrix():
    rng = np.random.default_rng(18)
    diag, offdiag, cross = sv.empirical_concentration_check(
        500, 2, np.eye(500), trials=5, rng=rng, model="orthonormalized"
    )
    assert diag < 1e-12  # <u_i, u_i> = 1 exactly after orthonormalization
    assert offdiag < 1e-12


def test_concentration_signed_diagonal():
    rng = np.random.default_rng(19)
    n = 2000
    a = np.diag(np.where(np.arange(n) % 2 == 0, 1.0, -1.0))
    diag, offdiag, cross = sv.empirical_concentration_check(
        n, 2, a, trials=30, rng=rng, model="iid"
    )
    assert diag < 0.15
    assert offdiag < 0.15
    assert cross < 0.15
