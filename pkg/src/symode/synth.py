"""Ground-truth data generation: integrate known right-hand sides, add noise.

Right-hand sides are sums of Laurent monomials, so the same basis code
that expands tangent fields also evaluates f.  Built-in named equations
cover the test set: "riccati" (f = 2 x/t - x^2 t^2), "linear_x" (f = x),
"linear_t" (f = t) and "constant" (f = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import MultiIndex, PoleError, eval_monomial
from .jetspace import Trajectory

__all__ = ["RhsSpec", "named_equation", "eval_rhs", "integrate_rk4", "add_noise", "NAMED_EQUATIONS"]


@dataclass(frozen=True)
class RhsSpec:
    """f(t, x) = sum of coefficient * t^a x^b."""

    terms: tuple[tuple[float, MultiIndex], ...]
    name: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ValueError("rhs needs at least one term")
        if not all(np.isfinite(c) for c, _ in self.terms):
            raise ValueError("rhs coefficients must be finite")

    @property
    def has_negative_t_power(self) -> bool:
        return any(idx.a < 0 for _, idx in self.terms)


NAMED_EQUATIONS = {
    "riccati": RhsSpec(terms=((2.0, MultiIndex(-1, 1)), (-1.0, MultiIndex(2, 2))), name="riccati"),
    "linear_x": RhsSpec(terms=((1.0, MultiIndex(0, 1)),), name="linear_x"),
    "linear_t": RhsSpec(terms=((1.0, MultiIndex(1, 0)),), name="linear_t"),
    "constant": RhsSpec(terms=((1.0, MultiIndex(0, 0)),), name="constant"),
}


def named_equation(name: str) -> RhsSpec:
    try:
        return NAMED_EQUATIONS[name]
    except KeyError:
        raise ValueError(f"unknown equation {name!r}; known: {sorted(NAMED_EQUATIONS)}") from None


def eval_rhs(rhs: RhsSpec, t: float, x: float) -> float:
    """Evaluate f(t, x); raises PoleError at a pole."""
    return float(sum(c * eval_monomial(idx, t, x) for c, idx in rhs.terms))


def integrate_rk4(rhs: RhsSpec, t0: float, x0: float, t1: float, steps: int,
                  traj_id: str = "traj") -> Trajectory:
    """Classic fixed-step 4th-order Runge-Kutta integration.

    The window must not cross t = 0 when the right-hand side carries a
    negative power of t.  If the state leaves the finite range (blow-up or
    an x-pole) the trajectory is truncated at the last finite point and
    flagged; fewer than 3 surviving points is an error.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    if rhs.has_negative_t_power and t0 * t1 <= 0:
        raise ValueError("integration window crosses the pole at t = 0")

    times = np.linspace(t0, t1, steps + 1)
    states = np.empty(steps + 1)
    states[0] = x0
    h = (t1 - t0) / steps
    truncated = False
    n_ok = steps + 1
    for i in range(steps):
        t, x = float(times[i]), float(states[i])
        try:
            k1 = eval_rhs(rhs, t, x)
            k2 = eval_rhs(rhs, t + h / 2, x + h * k1 / 2)
            k3 = eval_rhs(rhs, t + h / 2, x + h * k2 / 2)
            k4 = eval_rhs(rhs, t + h, x + h * k3)
            nxt = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        except PoleError:
            nxt = np.nan
        if not np.isfinite(nxt):
            truncated = True
            n_ok = i + 1
            break
        states[i + 1] = nxt
    if n_ok < 3:
        raise ValueError("trajectory became non-finite before 3 points were produced")
    return Trajectory(id=traj_id, times=times[:n_ok], states=states[:n_ok], truncated=truncated)


def add_noise(traj: Trajectory, sigma: float, seed: int = 0) -> Trajectory:
    """Perturb states with i.i.d. Gaussian noise of std sigma * RMS(x).

    Times are untouched; sigma = 0 returns an identical trajectory, and a
    fixed seed gives identical output on every call.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return traj
    rms = float(np.sqrt(np.mean(traj.states**2)))
    rng = np.random.default_rng(seed)
    noisy = traj.states + rng.standard_normal(len(traj.states)) * sigma * rms
    return Trajectory(id=traj.id, times=traj.times, states=noisy, truncated=traj.truncated)
