"""Pydantic request/response models shared by the HTTP service and the CLI.

Request models reject unknown keys so a config file with a typo fails
loudly instead of silently running with defaults.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from ..sparseopt import DenoiseConfig


class DenoiseConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mu: Optional[float] = Field(default=None, gt=0)
    projections_p: Optional[int] = Field(default=None, ge=1)
    step_a: Optional[float] = Field(default=None, gt=0)
    max_outer: int = Field(default=2000, ge=1)
    max_inner: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-8, gt=0)
    eps_rank: float = Field(default=1e-4, gt=0)
    seed: int = 0
    tau_rel: float = Field(default=0.02, gt=0)

    def to_core(self) -> DenoiseConfig:
        return DenoiseConfig(**self.model_dump())


class TrajectoryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    times: list[float]
    states: list[float]


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    equation: Optional[str] = None
    terms: Optional[list[tuple[float, int, int]]] = None  # (coefficient, a, b)
    t0: float = 1.0
    t1: float = 2.0
    x0: list[float] = Field(default_factory=lambda: [1.0])
    points: int = Field(default=400, ge=3)
    noise_sigma: float = Field(default=0.0, ge=0)
    seed: int = 0


class GenerateResponse(BaseModel):
    trajectories: list[TrajectoryModel]
    equation: str
    points: int
    noise_sigma: float
    seed: int
    truncated: list[str]


class DiscoverRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trajectories: Optional[list[TrajectoryModel]] = None
    max_degree: int = Field(default=3, ge=0)
    allow_negative: bool = False
    neighbors: int = Field(default=400, ge=4)
    fit_degree: int = Field(default=2, ge=1, le=3)
    max_rows: int = Field(default=200, ge=1)
    readout: bool = False
    readout_grid: int = Field(default=20, ge=2)
    alignment_threshold: float = 0.99
    denoise: DenoiseConfigModel = Field(default_factory=DenoiseConfigModel)

    def config_echo(self) -> dict:
        return self.model_dump(exclude={"trajectories"})


class ReadoutModel(BaseModel):
    refused: bool
    reason: Optional[str] = None
    grid_t: Optional[list[float]] = None
    grid_x: Optional[list[float]] = None
    field: Optional[list[list[Optional[float]]]] = None
    residual_rms: Optional[float] = None
    masked_points: Optional[int] = None


class DiscoverResponse(BaseModel):
    detected: bool
    basis_degree: int
    t_basis: Optional[list[list[int]]]
    x_basis: Optional[list[list[int]]]
    eta_t: Optional[list[float]]
    eta_x: Optional[list[float]]
    sigma: list[float]
    denoised_sigma: list[float]
    gap: Optional[float]
    alignment: float
    alignment_degenerate: bool
    multiplicity: bool
    skipped_rows: int
    dropped_samples: int
    generator: str
    readout: Optional[ReadoutModel] = None
    warnings: list[str]
    solver_converged: bool
    seed: int
    config: dict


class DenoiseRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    matrix: Optional[list[list[float]]] = None
    denoise: DenoiseConfigModel = Field(default_factory=DenoiseConfigModel)

    def config_echo(self) -> dict:
        return self.model_dump(exclude={"matrix"})


class DenoiseResponse(BaseModel):
    sigma_raw: list[float]
    sigma_denoised: list[float]
    deficient_by_one: bool
    gap: Optional[float]
    converged: bool
    iterations: int
    degenerate: bool
    config: dict


class ImageModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    pixels: list[float]  # row-major, values in [0, 1]


class CompleteRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image: Optional[ImageModel] = None
    rank: int = Field(default=3, ge=1)
    fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    seed: int = 0
    # completion runs constraint-dominated: a small threshold lets the
    # add-back loop pin the clean pixels quickly
    denoise: DenoiseConfigModel = Field(
        default_factory=lambda: DenoiseConfigModel(tau_rel=1e-3))

    def config_echo(self) -> dict:
        return self.model_dump(exclude={"image"})


class CompleteResponse(BaseModel):
    truncated: ImageModel
    corrupted: ImageModel
    recovered: ImageModel
    rank: int
    fraction: float
    n_corrupted: int
    rel_error_corrupted: float
    rel_error_recovered: float
    converged: bool
    outer_iterations: int
    inner_iterations: int
    config: dict


class HealthResponse(BaseModel):
    status: str
    version: str
