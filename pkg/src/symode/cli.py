"""Thin command-line client over the service handlers.

Each subcommand reads its inputs from files, builds the same request model
the HTTP endpoints accept (a JSON config file plus flag overrides), calls
the handler in-process, and writes the response to files.

Exit codes: 0 success, 2 input error, 3 no symmetry detected,
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import io as sio
from .jetspace import Trajectory
from .service import handlers, schemas

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_DETECTION = 3
EXIT_NO_CONVERGENCE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}")
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must hold a JSON object")
    return cfg


def _apply_overrides(cfg: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if value is None:
            continue
        if key.startswith("denoise."):
            cfg.setdefault("denoise", {})[key.split(".", 1)[1]] = value
        else:
            cfg[key] = value
    return cfg


def _build(model_cls, cfg: dict):
    try:
        return model_cls(**cfg)
    except ValidationError as exc:
        raise CliError(f"invalid configuration: {exc}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), {
        "equation": args.equation,
        "t0": args.t0,
        "t1": args.t1,
        "points": args.points,
        "noise_sigma": args.noise,
        "seed": args.seed,
        "x0": [float(v) for v in args.x0.split(",")] if args.x0 else None,
    })
    req = _build(schemas.GenerateRequest, cfg)
    resp = handlers.run_generate(req)
    trajectories = [
        Trajectory(id=m.id, times=np.asarray(m.times), states=np.asarray(m.states))
        for m in resp.trajectories
    ]
    path = _out_dir(args) / args.output
    sio.write_trajectories_csv(path, trajectories)
    total = sum(len(t.times) for t in trajectories)
    print(f"wrote {len(trajectories)} trajectories ({total} points, "
          f"noise_sigma={resp.noise_sigma:g}, seed={resp.seed}) to {path}")
    if resp.truncated:
        print(f"warning: truncated trajectories: {', '.join(resp.truncated)}")
    return EXIT_OK


# ---------------------------------------------------------------- discover

def cmd_discover(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), {
        "max_degree": args.max_degree,
        "neighbors": args.neighbors,
        "fit_degree": args.fit_degree,
        "max_rows": args.max_rows,
        "allow_negative": True if args.allow_negative else None,
        "readout": True if args.readout else None,
        "alignment_threshold": args.alignment_threshold,
        "denoise.seed": args.seed,
        "denoise.tau_rel": args.tau_rel,
        "denoise.mu": args.mu,
    })
    cfg.pop("trajectories", None)
    try:
        trajectories = sio.read_trajectories_csv(args.input)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read trajectories from {args.input}: {exc}")
    cfg["trajectories"] = [
        schemas.TrajectoryModel(id=t.id, times=t.times.tolist(), states=t.states.tolist())
        for t in trajectories
    ]
    req = _build(schemas.DiscoverRequest, cfg)
    resp = handlers.run_discover(req)

    payload = resp.model_dump()
    payload["input_path"] = str(args.input)
    path = _out_dir(args) / args.output
    sio.write_json(path, payload)
    print(resp.generator)
    print(f"wrote {path}")
    if resp.detected:
        return EXIT_OK
    return EXIT_NO_CONVERGENCE if not resp.solver_converged else EXIT_NO_DETECTION


# ----------------------------------------------------------------- denoise

def cmd_denoise(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), {
        "denoise.seed": args.seed,
        "denoise.tau_rel": args.tau_rel,
        "denoise.mu": args.mu,
        "denoise.projections_p": args.projections,
        "denoise.eps_rank": args.eps_rank,
    })
    cfg.pop("matrix", None)
    try:
        matrix = np.loadtxt(args.input, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read matrix from {args.input}: {exc}")
    cfg["matrix"] = matrix.tolist()
    req = _build(schemas.DenoiseRequest, cfg)
    resp = handlers.run_denoise(req)

    payload = resp.model_dump()
    payload["input_path"] = str(args.input)
    path = _out_dir(args) / args.output
    sio.write_json(path, payload)
    verdict = "deficient by one" if resp.deficient_by_one else "not deficient by one"
    print(f"{verdict}; wrote {path}")
    return EXIT_OK if resp.converged else EXIT_NO_CONVERGENCE


# ---------------------------------------------------------------- complete

def cmd_complete(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), {
        "rank": args.rank,
        "fraction": args.fraction,
        "seed": args.seed,
        "denoise.tau_rel": args.tau_rel,
        "denoise.mu": args.mu,
    })
    cfg.pop("image", None)
    try:
        img = sio.read_pgm(args.input)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read PGM from {args.input}: {exc}")
    cfg["image"] = schemas.ImageModel(width=img.width, height=img.height,
                                      pixels=img.pixels.ravel().tolist())
    req = _build(schemas.CompleteRequest, cfg)
    resp = handlers.run_complete(req)

    out = _out_dir(args)
    from .completion import GrayImage

    for name, model in (("truncated", resp.truncated), ("corrupted", resp.corrupted),
                        ("recovered", resp.recovered)):
        image = GrayImage(width=model.width, height=model.height,
                          pixels=np.asarray(model.pixels).reshape(model.height, model.width))
        sio.write_pgm(out / f"{name}.pgm", image)
    metrics = resp.model_dump(exclude={"truncated", "corrupted", "recovered"})
    metrics["input_path"] = str(args.input)
    sio.write_json(out / "metrics.json", metrics)
    print(f"rank={resp.rank} fraction={resp.fraction:g} "
          f"rel_error_recovered={resp.rel_error_recovered:.6f}; wrote {out}/*.pgm, "
          f"{out / 'metrics.json'}")
    return EXIT_OK if resp.converged else EXIT_NO_CONVERGENCE


# ------------------------------------------------------------------- serve

def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symode",
        description="Discover first-order ODE structure from trajectory data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, default=None, help="random seed override")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("generate", help="integrate a known equation to a trajectory CSV")
    common(p)
    p.add_argument("--equation", help="named equation: riccati, linear_x, linear_t, constant")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--x0", help="comma-separated initial states, one trajectory each")
    p.add_argument("--points", type=int, default=None, help="points per trajectory")
    p.add_argument("--noise", type=float, default=None, help="relative noise sigma")
    p.add_argument("--output", default="trajectories.csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("discover", help="detect a symmetry generator from a trajectory CSV")
    common(p)
    p.add_argument("--input", required=True, help="trajectory CSV (traj_id,t,x)")
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--neighbors", type=int, default=None)
    p.add_argument("--fit-degree", type=int, default=None)
    p.add_argument("--max-rows", type=int, default=None)
    p.add_argument("--allow-negative", action="store_true")
    p.add_argument("--readout", action="store_true",
                   help="evaluate xi_x/xi_t as a model of f on a grid")
    p.add_argument("--alignment-threshold", type=float, default=None)
    p.add_argument("--tau-rel", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--output", default="result.json")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("denoise", help="rank-denoise a matrix given as CSV")
    common(p)
    p.add_argument("--input", required=True, help="matrix CSV (numeric rows)")
    p.add_argument("--tau-rel", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--projections", type=int, default=None)
    p.add_argument("--eps-rank", type=float, default=None)
    p.add_argument("--output", default="spectra.json")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("complete", help="rank-reduce, corrupt and recover a PGM image")
    common(p)
    p.add_argument("--input", required=True, help="input PGM (P2 or P5)")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--tau-rel", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except handlers.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
