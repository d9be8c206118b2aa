import numpy as np
import pytest

from symode.jetspace import Trajectory, estimate_derivatives, estimate_normals


def make_traj(times, states, tid="t0"):
    return Trajectory(id=tid, times=np.asarray(times, float), states=np.asarray(states, float))


def test_trajectory_validation():
    with pytest.raises(ValueError):
        make_traj([0, 1], [0, 1])  # too short
    with pytest.raises(ValueError):
        make_traj([0, 1, 1], [0, 1, 2])  # duplicate time
    with pytest.raises(ValueError):
        make_traj([0, 2, 1], [0, 1, 2])  # decreasing
    with pytest.raises(ValueError):
        make_traj([0, 1, 2], [0, np.nan, 2])


def test_derivatives_linear_exact():
    traj = make_traj([0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
    out = estimate_derivatives(traj)
    assert np.allclose(out[:, 2], 1.0)


def test_derivatives_quadratic_exact_everywhere():
    t = np.linspace(0, 2, 21)
    traj = make_traj(t, t**2)
    out = estimate_derivatives(traj)
    assert np.allclose(out[:, 2], 2 * t, atol=1e-12)


def test_derivatives_quadratic_exact_nonuniform():
    rng = np.random.default_rng(2)
    t = np.sort(rng.uniform(0, 3, 30))
    traj = make_traj(t, 0.5 * t**2 - t + 2)
    out = estimate_derivatives(traj)
    assert np.allclose(out[:, 2], t - 1, atol=1e-10)


def test_derivatives_exponential_accuracy():
    t = np.arange(0, 1 + 1e-12, 1e-2)
    traj = make_traj(t, np.exp(t))
    out = estimate_derivatives(traj)
    assert np.max(np.abs(out[:, 2] - np.exp(t))) <= 1e-3


def scattered_samples(rng, f, n=300, t_range=(0.5, 2.0), x_range=(0.5, 2.0)):
    t = rng.uniform(*t_range, n)
    x = rng.uniform(*x_range, n)
    xdot = f(t, x)
    return np.column_stack([t, x, xdot])


def test_normals_linear_field():
    rng = np.random.default_rng(4)
    pts = scattered_samples(rng, lambda t, x: x)
    jets, dropped = estimate_normals(pts, k=12)
    assert dropped == 0
    for s in jets:
        assert abs(s.f_t) <= 1e-6
        assert abs(s.f_x - 1.0) <= 1e-6


def test_normals_exact_for_affine_rhs():
    # any rhs of total degree <= 1 is recovered to near machine precision
    rng = np.random.default_rng(5)
    pts = scattered_samples(rng, lambda t, x: 2.0 + 0.5 * t - 1.25 * x)
    jets, _ = estimate_normals(pts, k=14)
    for s in jets:
        assert abs(s.f_t - 0.5) <= 1e-8
        assert abs(s.f_x + 1.25) <= 1e-8


def test_normals_constant_field():
    rng = np.random.default_rng(6)
    pts = scattered_samples(rng, lambda t, x: np.ones_like(t))
    jets, _ = estimate_normals(pts, k=12)
    for s in jets:
        assert abs(s.f_t) <= 1e-9
        assert abs(s.f_x) <= 1e-9


def test_normals_riccati_partials_near_reference_point():
    # dense cloud around (t, x) = (1, 1): f_t = -4, f_x = 0 there
    rng = np.random.default_rng(7)
    t = rng.uniform(0.9, 1.1, 600)
    x = rng.uniform(0.9, 1.1, 600)
    xdot = 2 * x / t - x**2 * t**2
    jets, _ = estimate_normals(np.column_stack([t, x, xdot]), k=40)
    centre = min(jets, key=lambda s: (s.t - 1) ** 2 + (s.x - 1) ** 2)
    assert abs(centre.f_t + 4.0) <= 5e-2
    assert abs(centre.f_x) <= 5e-2


def test_normals_count_invariant_with_degenerate_rows():
    rng = np.random.default_rng(8)
    pts = scattered_samples(rng, lambda t, x: x, n=60)
    pts[10:14] = pts[9]  # duplicated points give zero-radius neighbourhoods
    jets, dropped = estimate_normals(pts, k=8)
    assert len(jets) + dropped == len(pts)
    assert dropped >= 1


def test_normals_weights_positive_and_bounded():
    rng = np.random.default_rng(9)
    pts = scattered_samples(rng, lambda t, x: np.sin(t) * x)
    jets, _ = estimate_normals(pts, k=16)
    w = np.array([s.weight for s in jets])
    assert np.all(w > 0)
    assert np.all(w >= 1e-6) and np.all(w <= 1e6)


def test_normals_rejects_bad_k():
    rng = np.random.default_rng(10)
    pts = scattered_samples(rng, lambda t, x: x, n=10)
    with pytest.raises(ValueError):
        estimate_normals(pts, k=3)
    with pytest.raises(ValueError):
        estimate_normals(pts, k=11)
