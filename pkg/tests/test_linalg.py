import numpy as np
import pytest

from symode import linalg
from symode.basis import enumerate_basis
from symode.jetspace import JetSample
from symode.symmetry import assemble

from oracles import jacobi_eigvals


def test_svd_identity():
    res = linalg.svd(np.eye(3))
    assert np.allclose(res.sigma, [1.0, 1.0, 1.0])


def test_svd_diagonal():
    res = linalg.svd(np.diag([3.0, 1.0]))
    assert np.allclose(res.sigma, [3.0, 1.0])


def test_svd_matches_jacobi_eigensolver():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((6, 4))
    sigma = linalg.svd(a).sigma
    eigs = jacobi_eigvals(a.T @ a)
    assert np.max(np.abs(sigma**2 - eigs)) < 1e-8


def test_svd_reconstruction_and_orthogonality():
    rng = np.random.default_rng(0)
    for m, n in [(5, 5), (8, 3), (3, 8), (20, 7)]:
        a = rng.standard_normal((m, n)) * rng.uniform(0.1, 10)
        res = linalg.svd(a)
        k = min(m, n)
        frob = np.linalg.norm(a)
        assert np.linalg.norm(res.reconstruct() - a) <= 1e-10 * max(1.0, frob)
        assert np.linalg.norm(res.u.T @ res.u - np.eye(k)) <= 1e-10
        assert np.linalg.norm(res.vt @ res.vt.T - np.eye(k)) <= 1e-10
        assert np.all(np.diff(res.sigma) <= 0)
        assert np.all(res.sigma >= 0)


def test_svd_transpose_invariance():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.standard_normal((rng.integers(2, 10), rng.integers(2, 10)))
        s1 = linalg.svd(a).sigma
        s2 = linalg.svd(a.T).sigma
        assert np.max(np.abs(s1 - s2)) <= 1e-10


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        linalg.svd(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        linalg.svd(np.array([[np.inf, 0.0]]))


def test_null_vector_rank1():
    v = linalg.null_vector(np.array([[1.0, 1.0], [2.0, 2.0]]))
    assert np.allclose(v, np.array([1.0, -1.0]) / np.sqrt(2))


def test_null_vector_identity_tiebreak():
    v = linalg.null_vector(np.eye(2))
    assert np.allclose(v, [0.0, 1.0])


def test_null_vector_sign_convention_and_residual():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.standard_normal((rng.integers(3, 12), rng.integers(2, 8)))
        v = linalg.null_vector(a)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        assert v[nz[0]] > 0
        sigma_min = linalg.svd(a).sigma[-1]
        assert np.linalg.norm(a @ v) <= sigma_min + 1e-10


def test_null_vector_needs_two_columns():
    with pytest.raises(ValueError):
        linalg.null_vector(np.ones((3, 1)))


def test_null_vector_annihilates_assembled_system():
    # xdot = x with exact normals: the time-translation direction kills B
    rng = np.random.default_rng(5)
    samples = [
        JetSample(t=float(t), x=float(x), xdot=float(x), f_t=0.0, f_x=1.0, weight=1.0)
        for t, x in zip(rng.uniform(0, 2, 40), rng.uniform(0.5, 3, 40))
    ]
    system = assemble(samples, enumerate_basis(0), enumerate_basis(0))
    v = linalg.null_vector(system.b)
    assert np.linalg.norm(system.b @ v) <= 1e-8


def test_spectral_norm_sq_diag():
    assert linalg.spectral_norm_sq(np.diag([3.0, 1.0])) == pytest.approx(9.0, rel=1e-9)


def test_spectral_norm_sq_zero():
    assert linalg.spectral_norm_sq(np.zeros((4, 4))) == 0.0


def test_spectral_norm_sq_matches_svd():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((8, 5))
    top = linalg.svd(a).sigma[0] ** 2
    assert linalg.spectral_norm_sq(a) == pytest.approx(top, rel=1e-6)


def test_spectral_norm_sq_bounds_on_seeded_cases():
    rng = np.random.default_rng(19)
    for _ in range(25):
        a = rng.standard_normal((rng.integers(2, 15), rng.integers(2, 15)))
        est = linalg.spectral_norm_sq(a)
        top = linalg.svd(a).sigma[0] ** 2
        assert est <= top * (1 + 1e-6)
        assert est >= top * (1 - 1e-6)
