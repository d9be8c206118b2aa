"""Turn raw trajectories into jet-space samples.

A sample of the surface F(t, x, xdot) = xdot - f(t, x) = 0 needs three
ingredients at each point: xdot along the trajectory, and the two partials
(f_t, f_x) that define the surface normal (-f_t, -f_x, 1).  xdot comes from
finite differences along each trajectory; the partials come from a local
weighted polynomial fit of xdot over the k nearest samples in normalized
(t, x).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = ["Trajectory", "JetSample", "estimate_derivatives", "estimate_normals"]

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-6
WEIGHT_CAP = 1e6


@dataclass(frozen=True)
class Trajectory:
    """One sampled solution curve: strictly increasing times, finite states."""

    id: str
    times: np.ndarray
    states: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if times.ndim != 1 or states.shape != times.shape:
            raise ValueError("times and states must be 1-d arrays of equal length")
        if len(times) < 3:
            raise ValueError("trajectory needs at least 3 points")
        if not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
            raise ValueError("trajectory contains non-finite values")


@dataclass(frozen=True)
class JetSample:
    """One jet-space point with its estimated surface normal.

    ``f_t`` and ``f_x`` are local estimates of the partials of f, so the
    (un-normalized) surface normal is (-f_t, -f_x, 1).  ``weight`` scales
    the sample's row in the determining system.
    """

    t: float
    x: float
    xdot: float
    f_t: float
    f_x: float
    weight: float

    def __post_init__(self):
        vals = (self.t, self.x, self.xdot, self.f_t, self.f_x, self.weight)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("JetSample fields must be finite")
        if self.weight <= 0:
            raise ValueError("JetSample weight must be positive")


def estimate_derivatives(traj: Trajectory) -> np.ndarray:
    """Estimate xdot along a trajectory.

    Interior points use the 3-point central difference for nonuniform
    grids (exact for quadratics); the two endpoints use one-sided
    second-order stencils.

    Returns
    -------
    (n, 3) ndarray
        Rows of (t, x, xdot), one per input point.
    """
    t, x = traj.times, traj.states
    if np.any(np.diff(t) <= 0):
        raise ValueError("duplicate or decreasing times")
    n = len(t)
    xdot = np.empty(n)
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    xdot[1:-1] = (x[2:] * h1**2 - x[:-2] * h2**2 + x[1:-1] * (h2**2 - h1**2)) / (
        h1 * h2 * (h1 + h2)
    )

    def one_sided(t0, t1, t2, x0, x1, x2):
        a, b = t1 - t0, t2 - t0
        return x0 * (-(a + b) / (a * b)) + x1 * (b / (a * (b - a))) + x2 * (-a / (b * (b - a)))

    xdot[0] = one_sided(t[0], t[1], t[2], x[0], x[1], x[2])
    xdot[-1] = one_sided(t[-1], t[-2], t[-3], x[-1], x[-2], x[-3])
    return np.column_stack([t, x, xdot])


# Powers (p, q) of the local model sum c_pq (dt)^p (dx)^q, graded by degree.
_FIT_POWERS = {
    1: [(0, 0), (1, 0), (0, 1)],
    2: [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)],
    3: [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)],
}


def estimate_normals(
    samples: np.ndarray,
    k: int = 12,
    fit_degree: int = 2,
    rel_cond_min: float = 1e-8,
    outlier_factor: float = 1e4,
) -> tuple[list[JetSample], int]:
    """Estimate surface normals by local weighted polynomial regression.

    For each sample, xdot is regressed on a degree-``fit_degree`` polynomial
    in (t - t0, x - x0) over the k nearest neighbours in z-scored (t, x),
    with tricube distance weights.  The constant term re-estimates xdot at
    the sample (smoothing derivative noise), and the two linear
    coefficients give (f_t, f_x).

    A neighbourhood whose design matrix is numerically rank-deficient
    (relative smallest singular value below ``rel_cond_min``) cannot
    identify the partials and is dropped, as is any sample whose fitted
    partials carry more than ``outlier_factor`` times the median variance
    (typically domain-boundary points whose one-sided derivative stencils
    poison the local fit).  Each surviving sample is weighted by the
    inverse estimated variance of its fitted partials (residual variance
    scaled by the fit geometry), normalised to median one and clipped to
    [1e-6, 1e6].

    Parameters
    ----------
    samples : (n, 3) array_like
        Rows of (t, x, xdot), typically concatenated trajectory output of
        :func:`estimate_derivatives`.
    k : int
        Neighbourhood size; must satisfy n >= k >= 4.  Trajectory data
        needs k large enough that neighbourhoods span several curves.
    fit_degree : int
        Degree of the local polynomial model (1, 2 or 3).

    Returns
    -------
    (jet_samples, dropped)
        Samples in input order plus the count of dropped rows;
        ``len(jet_samples) + dropped == n``.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("samples must be an (n, 3) array of (t, x, xdot)")
    n = len(pts)
    if not 4 <= k <= n:
        raise ValueError(f"need samples >= k >= 4, got n={n}, k={k}")
    if fit_degree not in _FIT_POWERS:
        raise ValueError("fit_degree must be 1, 2 or 3")

    t, x, xdot = pts[:, 0], pts[:, 1], pts[:, 2]
    t_std = t.std() or 1.0
    x_std = x.std() or 1.0
    z = np.column_stack([(t - t.mean()) / t_std, (x - x.mean()) / x_std])
    dist, idx = cKDTree(z).query(z, k=k)

    powers = _FIT_POWERS[fit_degree]
    n_param = len(powers)
    i_const = powers.index((0, 0))
    i_dt = powers.index((1, 0))
    i_dx = powers.index((0, 1))
    var_floor = (1e-8 * (np.sqrt(np.mean(xdot**2)) or 1.0)) ** 2

    kept: list[tuple] = []
    dropped = 0
    for i in range(n):
        nb = idx[i]
        dt = t[nb] - t[i]
        dx = x[nb] - x[i]
        y = xdot[nb]
        d_max = dist[i].max()
        if d_max == 0.0:
            dropped += 1
            continue
        w = (1.0 - (dist[i] / (d_max * 1.0001)) ** 3) ** 3
        design = np.column_stack([dt**p * dx**q for (p, q) in powers])
        sw = np.sqrt(w)
        u, s, vt = np.linalg.svd(design * sw[:, None], full_matrices=False)
        if s[-1] <= rel_cond_min * s[0]:
            dropped += 1
            continue
        coef = vt.T @ ((u.T @ (y * sw)) / s)
        resid = (design * sw[:, None]) @ coef - y * sw
        var = max(float(resid @ resid) / max(k - n_param, 1), var_floor)
        # diag of (X^T W X)^-1 gives the leverage of each coefficient
        cov_diag = (vt.T**2 @ (1.0 / s**2)) * var
        partial_var = float(cov_diag[i_dt] + cov_diag[i_dx])
        kept.append((t[i], x[i], coef[i_const], coef[i_dt], coef[i_dx], partial_var))

    if kept:
        variances = np.array([rec[5] for rec in kept])
        med_var = float(np.median(variances)) or 1.0
        survivors = variances <= outlier_factor * med_var
        dropped += int(np.count_nonzero(~survivors))
        kept = [rec for rec, ok in zip(kept, survivors) if ok]

    if dropped:
        logger.warning("estimate_normals dropped %d of %d samples", dropped, n)
    if not kept:
        return [], dropped

    med = float(np.median([rec[5] for rec in kept])) or 1.0
    out = [
        JetSample(t=ti, x=xi, xdot=xd, f_t=ft, f_x=fx,
                  weight=float(np.clip(med / vi, WEIGHT_FLOOR, WEIGHT_CAP)))
        for (ti, xi, xd, ft, fx, vi) in kept
    ]
    return out, dropped
