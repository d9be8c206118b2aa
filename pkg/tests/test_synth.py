import numpy as np
import pytest

from symode.basis import MultiIndex, PoleError
from symode.jetspace import estimate_derivatives
from symode.synth import RhsSpec, add_noise, eval_rhs, integrate_rk4, named_equation


def riccati_closed_form(t, k):
    return 5 * t**2 / (t**5 + k)


def test_closed_form_satisfies_riccati():
    # sanity for the oracle itself: x' = 2x/t - x^2 t^2 for x = 5t^2/(t^5+K)
    rhs = named_equation("riccati")
    k = 5.0
    for t in np.linspace(1.0, 2.0, 50):
        x = riccati_closed_form(t, k)
        deriv = (10 * t * k - 15 * t**6) / (t**5 + k) ** 2
        assert eval_rhs(rhs, t, x) == pytest.approx(deriv, rel=1e-12)


def test_rk4_constant_exact():
    traj = integrate_rk4(named_equation("constant"), 0.0, 0.0, 1.0, 10)
    assert traj.states[-1] == pytest.approx(1.0, abs=1e-15)


def test_rk4_exponential():
    traj = integrate_rk4(named_equation("linear_x"), 0.0, 1.0, 1.0, 1000)
    assert abs(traj.states[-1] - np.e) <= 1e-10


def test_rk4_riccati_vs_closed_form():
    k = 5.0
    traj = integrate_rk4(named_equation("riccati"), 1.0, riccati_closed_form(1.0, k), 2.0, 1000)
    exact = riccati_closed_form(traj.times, k)
    assert np.max(np.abs(traj.states - exact)) <= 1e-8


def test_rk4_order():
    # halving the step shrinks the error by roughly 2^4
    errs = []
    for steps in (50, 100):
        traj = integrate_rk4(named_equation("linear_x"), 0.0, 1.0, 1.0, steps)
        errs.append(np.max(np.abs(traj.states - np.exp(traj.times))))
    assert errs[0] / errs[1] >= 14.0


def test_rk4_rejects_pole_crossing_window():
    with pytest.raises(ValueError, match="pole"):
        integrate_rk4(named_equation("riccati"), -1.0, 1.0, 1.0, 100)


def test_rk4_truncates_blowup():
    quadratic = RhsSpec(terms=((1.0, MultiIndex(0, 2)),), name="x_squared")
    traj = integrate_rk4(quadratic, 0.0, 1.0, 2.0, 200)  # blows up at t = 1
    assert traj.truncated
    assert len(traj.times) < 201
    assert np.all(np.isfinite(traj.states))


def test_rk4_errors_when_too_short():
    quadratic = RhsSpec(terms=((1.0, MultiIndex(0, 2)),), name="x_squared")
    with pytest.raises(ValueError, match="3 points"):
        integrate_rk4(quadratic, 0.0, 1e200, 2.0, 4)


def test_rk4_validates_args():
    with pytest.raises(ValueError):
        integrate_rk4(named_equation("constant"), 0.0, 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        integrate_rk4(named_equation("constant"), 1.0, 0.0, 1.0, 10)


def test_add_noise_zero_sigma_identity():
    traj = integrate_rk4(named_equation("linear_x"), 0.0, 1.0, 1.0, 50)
    noisy = add_noise(traj, 0.0, seed=1)
    assert np.array_equal(noisy.states, traj.states)


def test_add_noise_scale():
    rng_t = np.linspace(0.0, 1.0, 100_000)
    from symode.jetspace import Trajectory

    traj = Trajectory(id="flat", times=rng_t, states=np.full_like(rng_t, 2.0))
    noisy = add_noise(traj, 1e-3, seed=2)
    rel = (noisy.states - traj.states) / 2.0
    assert 0.95e-3 <= rel.std() <= 1.05e-3
    assert np.array_equal(noisy.times, traj.times)


def test_add_noise_deterministic():
    traj = integrate_rk4(named_equation("linear_x"), 0.0, 1.0, 1.0, 50)
    n1 = add_noise(traj, 1e-2, seed=7)
    n2 = add_noise(traj, 1e-2, seed=7)
    assert np.array_equal(n1.states, n2.states)


def test_eval_rhs_cases():
    assert eval_rhs(named_equation("riccati"), 1.0, 1.0) == pytest.approx(1.0)
    assert eval_rhs(named_equation("linear_x"), -123.0, 2.0) == 2.0
    with pytest.raises(PoleError):
        eval_rhs(named_equation("riccati"), 0.0, 1.0)


def test_rhs_validation():
    with pytest.raises(ValueError):
        RhsSpec(terms=())
    with pytest.raises(ValueError):
        RhsSpec(terms=((np.inf, MultiIndex(0, 0)),))
    with pytest.raises(ValueError):
        named_equation("nope")


def test_generated_riccati_matches_rhs_after_differentiation():
    # ties the generator to the jet-space derivative estimator
    rhs = named_equation("riccati")
    traj = integrate_rk4(rhs, 1.0, 5.0 / 6.0, 2.0, 1000)
    pts = estimate_derivatives(traj)
    f_vals = np.array([eval_rhs(rhs, t, x) for t, x, _ in pts])
    resid = np.abs(pts[:, 2] - f_vals)
    rms_xdot = np.sqrt(np.mean(pts[:, 2] ** 2))
    assert np.max(resid) <= 5e-3 * rms_xdot
