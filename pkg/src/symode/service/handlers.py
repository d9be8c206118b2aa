"""Request handlers: the pipeline logic behind both the HTTP endpoints and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .. import linalg
from ..basis import MultiIndex
from ..completion import GrayImage, corrupt, recover, truncate_rank
from ..jetspace import Trajectory, estimate_derivatives, estimate_normals
from ..sparseopt import matrix_denoise
from ..symmetry import ReadoutRefused, detect, format_generator, model_readout
from ..synth import RhsSpec, add_noise, eval_rhs, integrate_rk4, named_equation
from . import schemas

__all__ = ["InputError", "run_generate", "run_discover", "run_denoise", "run_complete"]


class InputError(ValueError):
    """Malformed or inconsistent input; maps to HTTP 400 / CLI exit 2."""


def _fin(v: float) -> float | None:
    return float(v) if math.isfinite(v) else None


def _resolve_rhs(req: schemas.GenerateRequest) -> RhsSpec:
    if (req.equation is None) == (req.terms is None):
        raise InputError("give exactly one of 'equation' or 'terms'")
    if req.equation is not None:
        try:
            return named_equation(req.equation)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    terms = tuple((float(c), MultiIndex(int(a), int(b))) for c, a, b in req.terms)
    try:
        return RhsSpec(terms=terms, name="inline")
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _traj_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def run_generate(req: schemas.GenerateRequest) -> schemas.GenerateResponse:
    rhs = _resolve_rhs(req)
    if not req.x0:
        raise InputError("x0 must list at least one initial state")
    trajectories = []
    truncated = []
    for i, x0 in enumerate(req.x0):
        try:
            traj = integrate_rk4(rhs, req.t0, x0, req.t1, req.points - 1,
                                 traj_id=f"traj{i:02d}")
        except ValueError as exc:
            raise InputError(f"trajectory {i}: {exc}") from None
        if req.noise_sigma > 0:
            traj = add_noise(traj, req.noise_sigma, seed=_traj_seed(req.seed, i))
        if traj.truncated:
            truncated.append(traj.id)
        trajectories.append(schemas.TrajectoryModel(
            id=traj.id, times=traj.times.tolist(), states=traj.states.tolist()))
    return schemas.GenerateResponse(
        trajectories=trajectories,
        equation=rhs.name,
        points=req.points,
        noise_sigma=req.noise_sigma,
        seed=req.seed,
        truncated=truncated,
    )


def _to_trajectories(models: list[schemas.TrajectoryModel]) -> list[Trajectory]:
    out = []
    for m in models:
        try:
            out.append(Trajectory(id=m.id, times=np.asarray(m.times),
                                  states=np.asarray(m.states)))
        except ValueError as exc:
            raise InputError(f"trajectory {m.id!r}: {exc}") from None
    return out


def run_discover(req: schemas.DiscoverRequest) -> schemas.DiscoverResponse:
    if not req.trajectories:
        raise InputError("no trajectories supplied")
    trajectories = _to_trajectories(req.trajectories)
    points = np.vstack([estimate_derivatives(t) for t in trajectories])
    if len(points) < req.neighbors:
        raise InputError(
            f"{len(points)} samples but neighbors={req.neighbors}; "
            "reduce 'neighbors' or supply more data"
        )
    jets, dropped = estimate_normals(points, k=req.neighbors, fit_degree=req.fit_degree)
    if not jets:
        raise InputError("every sample was dropped during normal estimation")

    cfg = req.denoise.to_core()
    try:
        result = detect(jets, max_degree_cap=req.max_degree,
                        allow_negative=req.allow_negative, cfg=cfg,
                        max_rows=req.max_rows)
    except ValueError as exc:
        raise InputError(str(exc)) from None

    readout_model = None
    if req.readout and result.detected:
        ts = np.array([s.t for s in jets])
        xs = np.array([s.x for s in jets])
        grid_t = np.linspace(ts.min(), ts.max(), req.readout_grid)
        grid_x = np.linspace(xs.min(), xs.max(), req.readout_grid)
        try:
            ro = model_readout(result, jets, (grid_t, grid_x),
                               alignment_threshold=req.alignment_threshold)
            field = [[_fin(v) for v in row] for row in ro.field]
            readout_model = schemas.ReadoutModel(
                refused=False,
                grid_t=ro.grid_t.tolist(),
                grid_x=ro.grid_x.tolist(),
                field=field,
                residual_rms=_fin(ro.residual_rms),
                masked_points=ro.masked_points,
            )
        except ReadoutRefused as exc:
            readout_model = schemas.ReadoutModel(refused=True, reason=str(exc))

    solver_ok = not any("did not converge" in w for w in result.warnings)
    return schemas.DiscoverResponse(
        detected=result.detected,
        basis_degree=result.basis_degree,
        t_basis=result.t_basis.to_json() if result.t_basis else None,
        x_basis=result.x_basis.to_json() if result.x_basis else None,
        eta_t=result.eta_t.tolist() if result.eta_t is not None else None,
        eta_x=result.eta_x.tolist() if result.eta_x is not None else None,
        sigma=result.sigma.tolist(),
        denoised_sigma=result.denoised_sigma.tolist(),
        gap=_fin(result.gap),
        alignment=result.alignment,
        alignment_degenerate=result.alignment_degenerate,
        multiplicity=result.multiplicity,
        skipped_rows=result.skipped_rows,
        dropped_samples=dropped,
        generator=format_generator(result),
        readout=readout_model,
        warnings=list(result.warnings),
        solver_converged=solver_ok,
        seed=cfg.seed,
        config=req.config_echo(),
    )


def run_denoise(req: schemas.DenoiseRequest) -> schemas.DenoiseResponse:
    if not req.matrix:
        raise InputError("no matrix supplied")
    try:
        mat = np.asarray(req.matrix, dtype=float)
    except ValueError as exc:
        raise InputError(f"malformed matrix: {exc}") from None
    if mat.ndim != 2:
        raise InputError("matrix rows have unequal lengths")
    if not np.all(np.isfinite(mat)):
        raise InputError("matrix contains non-finite entries")

    cfg = req.denoise.to_core()
    raw_sigma = linalg.svd(mat).sigma
    if float(raw_sigma[0]) == 0.0:
        # all-zero input: nothing to denoise, flagged as degenerate
        return schemas.DenoiseResponse(
            sigma_raw=raw_sigma.tolist(),
            sigma_denoised=raw_sigma.tolist(),
            deficient_by_one=False,
            gap=None,
            converged=True,
            iterations=0,
            degenerate=True,
            config=req.config_echo(),
        )
    result = matrix_denoise(mat, cfg)
    den_sigma = linalg.svd(result.matrix).sigma
    top = float(den_sigma[0])
    threshold = cfg.eps_rank * top
    degenerate = top == 0.0
    deficient = bool(
        result.converged and not degenerate and len(den_sigma) >= 2
        and den_sigma[-1] <= threshold and den_sigma[-2] > threshold
    )
    if den_sigma[-1] > 0:
        gap = float(den_sigma[-2] / den_sigma[-1]) if len(den_sigma) >= 2 else 1.0
    else:
        gap = math.inf if len(den_sigma) >= 2 and den_sigma[-2] > 0 else 1.0
    return schemas.DenoiseResponse(
        sigma_raw=raw_sigma.tolist(),
        sigma_denoised=den_sigma.tolist(),
        deficient_by_one=deficient,
        gap=_fin(gap),
        converged=result.converged,
        iterations=result.iterations,
        degenerate=degenerate,
        config=req.config_echo(),
    )


def _image_to_model(img: GrayImage) -> schemas.ImageModel:
    return schemas.ImageModel(width=img.width, height=img.height,
                              pixels=img.pixels.ravel().tolist())


def _model_to_image(m: schemas.ImageModel) -> GrayImage:
    px = np.asarray(m.pixels, dtype=float)
    if px.size != m.width * m.height:
        raise InputError(f"expected {m.width * m.height} pixels, got {px.size}")
    if not np.all(np.isfinite(px)) or px.min() < -1e-9 or px.max() > 1 + 1e-9:
        raise InputError("pixels must be finite values in [0, 1]")
    return GrayImage(width=m.width, height=m.height,
                     pixels=np.clip(px, 0.0, 1.0).reshape(m.height, m.width))


def run_complete(req: schemas.CompleteRequest) -> schemas.CompleteResponse:
    if req.image is None:
        raise InputError("no image supplied")
    img = _model_to_image(req.image)
    try:
        truncated = truncate_rank(img, req.rank)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    corrupted, mask = corrupt(truncated, req.fraction, seed=req.seed)
    report = recover(corrupted, mask, req.denoise.to_core())

    truth_norm = float(np.linalg.norm(truncated.pixels)) or 1.0
    rel_cor = float(np.linalg.norm(corrupted.pixels - truncated.pixels)) / truth_norm
    rel_rec = float(np.linalg.norm(report.image.pixels - truncated.pixels)) / truth_norm
    return schemas.CompleteResponse(
        truncated=_image_to_model(truncated),
        corrupted=_image_to_model(corrupted),
        recovered=_image_to_model(report.image),
        rank=req.rank,
        fraction=req.fraction,
        n_corrupted=int(mask.sum()),
        rel_error_corrupted=rel_cor,
        rel_error_recovered=rel_rec,
        converged=report.converged,
        outer_iterations=report.outer_iterations,
        inner_iterations=report.inner_iterations,
        config=req.config_echo(),
    )
