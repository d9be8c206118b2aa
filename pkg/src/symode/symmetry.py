"""Symmetry detection: assemble the determining system and read out its null space.

A tangent field (xi_t, xi_x) generates a symmetry of the surface
F = xdot - f(t, x) = 0 when the scalar product of the prolonged field with
the surface normal vanishes at every sample.  Expanding both components in
monomials turns that condition into one matrix row per sample; a
one-dimensional null space of the stacked matrix B pins down the generator
up to scale.  Rank decisions run on a nuclear-norm-denoised copy of B,
while the coefficients are always read from the raw B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .basis import BasisSpec, PoleError, enumerate_basis, eval_monomial, eval_partials
from .jetspace import JetSample
from .sparseopt import DenoiseConfig, matrix_denoise

__all__ = [
    "DeterminingSystem",
    "SymmetryResult",
    "RankTestResult",
    "ReadoutResult",
    "ReadoutRefused",
    "row_for_sample",
    "assemble",
    "rank_deficiency_test",
    "detect",
    "alignment_score",
    "model_readout",
    "eval_expansion",
    "format_generator",
]

MIN_ROW_FACTOR = 5
# Columns are equilibrated to unit RMS, but a column that is already tiny
# relative to the others encodes a (near-)symmetry; inflating it to parity
# would manufacture rank out of estimation noise, so scales are floored at
# a fraction of the largest column RMS.
COLUMN_SCALE_FLOOR = 1e-3


class ReadoutRefused(RuntimeError):
    """The recovered generator is not evolution-aligned; the ratio readout
    would not reproduce the right-hand side."""


@dataclass(frozen=True)
class DeterminingSystem:
    """Column-equilibrated determining matrix plus provenance.

    ``b`` has one row per usable sample (scaled by sqrt of the sample
    weight) and one column per monomial of the two expansions, t-expansion
    first.  Each column was divided by its RMS, recorded in
    ``column_scales``.
    """

    b: np.ndarray
    t_basis: BasisSpec
    x_basis: BasisSpec
    samples: tuple[JetSample, ...]
    column_scales: np.ndarray
    skipped_rows: int

    @property
    def n_cols(self) -> int:
        return len(self.t_basis) + len(self.x_basis)


@dataclass(frozen=True)
class RankTestResult:
    deficient_by_one: bool
    gap: float
    denoised_sigma: np.ndarray
    raw_sigma: np.ndarray
    converged: bool
    iterations: int
    degenerate: bool = False


@dataclass(frozen=True)
class SymmetryResult:
    """Outcome of the degree-growth detection loop.

    ``eta_t`` and ``eta_x`` are coefficient arrays over ``t_basis`` and
    ``x_basis``; their concatenation has unit L2 norm when ``detected``.
    ``sigma`` is the raw spectrum of the determining matrix at the final
    degree, ``gap`` the ratio of the two smallest denoised singular values
    (inf when the smallest is exactly zero).
    """

    detected: bool
    basis_degree: int
    t_basis: Optional[BasisSpec]
    x_basis: Optional[BasisSpec]
    eta_t: Optional[np.ndarray]
    eta_x: Optional[np.ndarray]
    sigma: np.ndarray
    denoised_sigma: np.ndarray
    gap: float
    alignment: float
    alignment_degenerate: bool
    multiplicity: bool
    skipped_rows: int
    seed: int
    warnings: tuple[str, ...] = ()
    degree_history: tuple[dict, ...] = field(default=(), repr=False)

    def eta(self) -> np.ndarray:
        if not self.detected:
            raise ValueError("no generator was detected")
        return np.concatenate([self.eta_t, self.eta_x])

    def to_json_dict(self) -> dict:
        def _finite(v: float):
            return float(v) if math.isfinite(v) else None

        return {
            "detected": self.detected,
            "basis_degree": self.basis_degree,
            "t_basis": self.t_basis.to_json() if self.t_basis else None,
            "x_basis": self.x_basis.to_json() if self.x_basis else None,
            "eta_t": self.eta_t.tolist() if self.eta_t is not None else None,
            "eta_x": self.eta_x.tolist() if self.eta_x is not None else None,
            "sigma": self.sigma.tolist(),
            "denoised_sigma": self.denoised_sigma.tolist(),
            "gap": _finite(self.gap),
            "alignment": self.alignment,
            "alignment_degenerate": self.alignment_degenerate,
            "multiplicity": self.multiplicity,
            "skipped_rows": self.skipped_rows,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class ReadoutResult:
    grid_t: np.ndarray
    grid_x: np.ndarray
    field: np.ndarray
    residual_rms: float
    masked_points: int


def row_for_sample(sample: JetSample, t_basis: BasisSpec, x_basis: BasisSpec) -> np.ndarray:
    """One determining-equation row, scaled by sqrt of the sample weight.

    With surface-normal components F_t = -f_t, F_x = -f_x, F_xdot = 1 and
    xd the sample's xdot, the column of a t-expansion monomial m is

        F_t * m + (-xd * m_t - xd^2 * m_x)

    and the column of an x-expansion monomial m is

        F_x * m + (m_t + xd * m_x),

    the parenthesised parts being that monomial's contribution to the
    induced transport of the xdot ordinate.  Raises :class:`PoleError`
    when any monomial hits a pole; the caller skips the row.
    """
    f_t, f_x = -sample.f_t, -sample.f_x
    xd = sample.xdot
    t, x = sample.t, sample.x
    row = np.empty(len(t_basis) + len(x_basis))
    for j, idx in enumerate(t_basis):
        m = eval_monomial(idx, t, x)
        m_t, m_x = eval_partials(idx, t, x)
        row[j] = f_t * m - xd * m_t - xd * xd * m_x
    offset = len(t_basis)
    for j, idx in enumerate(x_basis):
        m = eval_monomial(idx, t, x)
        m_t, m_x = eval_partials(idx, t, x)
        row[offset + j] = f_x * m + m_t + xd * m_x
    return row * np.sqrt(sample.weight)


def assemble(samples: Sequence[JetSample], t_basis: BasisSpec, x_basis: BasisSpec,
             max_rows: int = 200, seed: int = 0) -> DeterminingSystem:
    """Stack determining rows and equilibrate columns.

    Samples whose rows hit poles are skipped and counted.  At least
    ``5 * n_cols`` usable rows are required; if more than
    ``max(5 * n_cols, max_rows)`` are available a seeded uniform subsample
    caps the row count so the denoising step stays tractable.  Each column
    is divided by its RMS (floored at 1e-8 of the largest column RMS, so an
    identically-zero column, i.e. a single-monomial symmetry, is not blown
    up into noise).
    """
    rows: list[np.ndarray] = []
    kept: list[JetSample] = []
    skipped = 0
    for s in samples:
        try:
            rows.append(row_for_sample(s, t_basis, x_basis))
        except PoleError:
            skipped += 1
            continue
        kept.append(s)

    n_cols = len(t_basis) + len(x_basis)
    required = MIN_ROW_FACTOR * n_cols
    if len(rows) < required:
        raise ValueError(
            f"too few usable rows: {len(rows)} of {len(samples)} "
            f"(need at least {required} for {n_cols} columns)"
        )
    cap = max(required, max_rows)
    if len(rows) > cap:
        sel = np.sort(np.random.default_rng(seed).choice(len(rows), cap, replace=False))
        rows = [rows[i] for i in sel]
        kept = [kept[i] for i in sel]

    b = np.asarray(rows)
    rms = np.sqrt(np.mean(b**2, axis=0))
    top = float(rms.max())
    scales = np.maximum(rms, COLUMN_SCALE_FLOOR * top) if top > 0 else np.ones(n_cols)
    return DeterminingSystem(
        b=b / scales,
        t_basis=t_basis,
        x_basis=x_basis,
        samples=tuple(kept),
        column_scales=scales,
        skipped_rows=skipped,
    )


def rank_deficiency_test(system: DeterminingSystem, cfg: DenoiseConfig) -> RankTestResult:
    """Denoise the determining matrix and test for rank deficiency by one.

    Declares deficiency-by-one iff the smallest denoised singular value
    falls at or below ``eps_rank`` times the largest while the second
    smallest stays above it.  If the denoiser does not converge the test
    reports not-deficient and carries the iteration count.
    """
    raw_sigma = linalg.svd(system.b).sigma
    result = matrix_denoise(system.b, cfg)
    denoised_sigma = linalg.svd(result.matrix).sigma
    top = float(denoised_sigma[0])
    degenerate = top == 0.0
    threshold = cfg.eps_rank * top
    if degenerate or not result.converged:
        deficient = False
    else:
        deficient = bool(denoised_sigma[-1] <= threshold and denoised_sigma[-2] > threshold)
    if denoised_sigma[-1] > 0:
        gap = float(denoised_sigma[-2] / denoised_sigma[-1])
    else:
        gap = math.inf if denoised_sigma[-2] > 0 else 1.0
    return RankTestResult(
        deficient_by_one=deficient,
        gap=gap,
        denoised_sigma=denoised_sigma,
        raw_sigma=raw_sigma,
        converged=result.converged,
        iterations=result.iterations,
        degenerate=degenerate,
    )


def _sign_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-14 * np.max(np.abs(v), initial=0.0))
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def detect(samples: Sequence[JetSample], max_degree_cap: int = 3,
           allow_negative: bool = False, cfg: Optional[DenoiseConfig] = None,
           max_rows: int = 200) -> SymmetryResult:
    """Grow both monomial expansions until the determining system loses rank.

    For each total degree (starting at zero, where the two expansions are
    just constants) the system is assembled, denoised, and checked for a
    null space.  At the first degree whose denoised spectrum has its
    smallest singular value under the ``eps_rank`` gate, the generator is
    read from the raw matrix: un-scale the null vector by the column
    scales, renormalise, and split into the two coefficient tables.  If
    the second-smallest singular value is under the gate as well, the null
    space is multi-dimensional; the least-significant vector is returned
    and flagged.  Reaching the degree cap yields a no-symmetry result
    carrying full diagnostics rather than an exception.
    """
    cfg = cfg or DenoiseConfig()
    warnings: list[str] = []
    history: list[dict] = []
    last_rank: Optional[RankTestResult] = None
    last_system: Optional[DeterminingSystem] = None
    degree = -1

    for degree in range(0, max_degree_cap + 1):
        t_basis = enumerate_basis(degree, allow_negative)
        x_basis = enumerate_basis(degree, allow_negative)
        try:
            system = assemble(samples, t_basis, x_basis, max_rows=max_rows, seed=cfg.seed)
        except ValueError as exc:
            warnings.append(f"degree {degree}: {exc}")
            break
        rank = rank_deficiency_test(system, cfg)
        last_rank, last_system = rank, system
        eps = cfg.eps_rank * float(rank.denoised_sigma[0])
        found = rank.converged and not rank.degenerate and rank.denoised_sigma[-1] <= eps
        history.append({
            "degree": degree,
            "columns": system.n_cols,
            "rows": system.b.shape[0],
            "raw_sigma_ratio": float(rank.raw_sigma[-1] / rank.raw_sigma[0]),
            "denoised_sigma_ratio": float(rank.denoised_sigma[-1] / rank.denoised_sigma[0])
            if rank.denoised_sigma[0] > 0 else None,
            "denoise_iterations": rank.iterations,
            "denoise_converged": rank.converged,
            "detected": bool(found),
        })
        if not rank.converged:
            warnings.append(
                f"degree {degree}: denoiser did not converge in {rank.iterations} iterations"
            )
        if not found:
            continue

        multiplicity = bool(rank.denoised_sigma[-2] <= eps)
        if multiplicity:
            warnings.append(
                f"degree {degree}: null space is more than one-dimensional; "
                "returning the least-significant direction"
            )
        eta_scaled = linalg.null_vector(system.b)
        eta = eta_scaled / system.column_scales
        eta = _sign_fix(eta / np.linalg.norm(eta))
        eta_t = eta[: len(t_basis)]
        eta_x = eta[len(t_basis):]
        alignment, degenerate_alignment = alignment_score_parts(
            t_basis, x_basis, eta_t, eta_x, system.samples
        )
        return SymmetryResult(
            detected=True,
            basis_degree=degree,
            t_basis=t_basis,
            x_basis=x_basis,
            eta_t=eta_t,
            eta_x=eta_x,
            sigma=rank.raw_sigma,
            denoised_sigma=rank.denoised_sigma,
            gap=rank.gap,
            alignment=alignment,
            alignment_degenerate=degenerate_alignment,
            multiplicity=multiplicity,
            skipped_rows=system.skipped_rows,
            seed=cfg.seed,
            warnings=tuple(warnings),
            degree_history=tuple(history),
        )

    warnings.append(f"no symmetry found at degree <= {max_degree_cap}")
    return SymmetryResult(
        detected=False,
        basis_degree=degree,
        t_basis=last_system.t_basis if last_system else None,
        x_basis=last_system.x_basis if last_system else None,
        eta_t=None,
        eta_x=None,
        sigma=last_rank.raw_sigma if last_rank else np.array([]),
        denoised_sigma=last_rank.denoised_sigma if last_rank else np.array([]),
        gap=last_rank.gap if last_rank else 1.0,
        alignment=0.0,
        alignment_degenerate=True,
        multiplicity=False,
        skipped_rows=last_system.skipped_rows if last_system else 0,
        seed=cfg.seed,
        warnings=tuple(warnings),
        degree_history=tuple(history),
    )


def eval_expansion(basis: BasisSpec, coeffs: np.ndarray, t: float, x: float) -> float:
    """Evaluate sum of coeff * t^a x^b; propagates PoleError."""
    return float(sum(c * eval_monomial(idx, t, x) for c, idx in zip(coeffs, basis)))


def _weighted_corr(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    w = w / w.sum()
    du = u - float(w @ u)
    dv = v - float(w @ v)
    var_u = float(w @ (du * du))
    var_v = float(w @ (dv * dv))
    if var_u <= 0 or var_v <= 0:
        return 0.0
    return float(np.clip((w @ (du * dv)) / math.sqrt(var_u * var_v), -1.0, 1.0))


def alignment_score_parts(t_basis: BasisSpec, x_basis: BasisSpec,
                          eta_t: np.ndarray, eta_x: np.ndarray,
                          samples: Sequence[JetSample],
                          xi_t_tol: float = 1e-8) -> tuple[float, bool]:
    """Weighted correlation of xi_x/xi_t with xdot over the samples.

    Only samples where |xi_t| exceeds ``xi_t_tol`` (relative to the largest
    |xi_t| seen) contribute.  Returns (0.0, True) when xi_t is negligible
    everywhere, i.e. the ratio field does not exist.
    """
    xi_t_vals, xi_x_vals, xd_vals, weights = [], [], [], []
    for s in samples:
        try:
            xi_t_vals.append(eval_expansion(t_basis, eta_t, s.t, s.x))
            xi_x_vals.append(eval_expansion(x_basis, eta_x, s.t, s.x))
        except PoleError:
            continue
        xd_vals.append(s.xdot)
        weights.append(s.weight)
    if not xi_t_vals:
        return 0.0, True
    xi_t = np.asarray(xi_t_vals)
    xi_x = np.asarray(xi_x_vals)
    xd = np.asarray(xd_vals)
    w = np.asarray(weights)
    mask = np.abs(xi_t) > xi_t_tol * float(np.max(np.abs(xi_t), initial=0.0))
    if not mask.any():
        return 0.0, True
    ratio = xi_x[mask] / xi_t[mask]
    return _weighted_corr(ratio, xd[mask], w[mask]), False


def alignment_score(result: SymmetryResult, samples: Sequence[JetSample]) -> tuple[float, bool]:
    """Alignment of a detected generator against fresh samples."""
    if not result.detected:
        raise ValueError("alignment_score needs a detected generator")
    return alignment_score_parts(result.t_basis, result.x_basis,
                                 result.eta_t, result.eta_x, samples)


def model_readout(result: SymmetryResult, samples: Sequence[JetSample],
                  grid: tuple[np.ndarray, np.ndarray],
                  alignment_threshold: float = 0.99,
                  xi_t_tol: float = 1e-8) -> ReadoutResult:
    """Evaluate f_hat = xi_x / xi_t on a grid, with a residual report.

    Only an evolution-aligned generator (one proportional to (1, f) on the
    data) reproduces the right-hand side this way, so the call refuses to
    produce a field when the stored alignment is below
    ``alignment_threshold``.

    ``grid`` is a pair of 1-d arrays (t values, x values); the field is
    returned with shape (len(t), len(x)) and NaN where |xi_t| is
    negligible or a monomial pole is hit.
    """
    if not result.detected:
        raise ReadoutRefused("no generator was detected")
    if result.alignment_degenerate or result.alignment < alignment_threshold:
        raise ReadoutRefused(
            f"generator alignment {result.alignment:.4f} is below "
            f"{alignment_threshold}: the generator is not evolution-aligned, "
            "so xi_x/xi_t would not reproduce the right-hand side"
        )
    grid_t = np.asarray(grid[0], dtype=float)
    grid_x = np.asarray(grid[1], dtype=float)
    xi_t_scale = max(
        (abs(eval_expansion(result.t_basis, result.eta_t, s.t, s.x)) for s in samples),
        default=1.0,
    )
    field_vals = np.full((len(grid_t), len(grid_x)), np.nan)
    masked = 0
    for i, tv in enumerate(grid_t):
        for j, xv in enumerate(grid_x):
            try:
                xi_t = eval_expansion(result.t_basis, result.eta_t, tv, xv)
                xi_x = eval_expansion(result.x_basis, result.eta_x, tv, xv)
            except PoleError:
                masked += 1
                continue
            if abs(xi_t) <= xi_t_tol * xi_t_scale:
                masked += 1
                continue
            field_vals[i, j] = xi_x / xi_t

    sq_sum = 0.0
    count = 0
    for s in samples:
        try:
            xi_t = eval_expansion(result.t_basis, result.eta_t, s.t, s.x)
            xi_x = eval_expansion(result.x_basis, result.eta_x, s.t, s.x)
        except PoleError:
            continue
        if abs(xi_t) <= xi_t_tol * xi_t_scale:
            continue
        sq_sum += (s.xdot - xi_x / xi_t) ** 2
        count += 1
    residual = math.sqrt(sq_sum / count) if count else math.nan
    return ReadoutResult(grid_t=grid_t, grid_x=grid_x, field=field_vals,
                         residual_rms=residual, masked_points=masked)


def _term_text(coef: float, idx) -> str:
    parts = []
    if idx.a:
        parts.append("t" if idx.a == 1 else f"t^{idx.a}")
    if idx.b:
        parts.append("x" if idx.b == 1 else f"x^{idx.b}")
    mono = "*".join(parts) if parts else "1"
    return f"{coef:+.3f}*{mono}"


def format_generator(result: SymmetryResult, drop_below: float = 1e-6) -> str:
    """Human-readable generator string, omitting negligible coefficients."""
    if not result.detected:
        return "no symmetry found"

    def side(basis, coeffs):
        terms = [_term_text(c, idx) for c, idx in zip(coeffs, basis) if abs(c) > drop_below]
        return " ".join(terms) if terms else "0"

    return f"xi_t = {side(result.t_basis, result.eta_t)}, xi_x = {side(result.x_basis, result.eta_x)}"
