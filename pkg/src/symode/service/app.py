"""FastAPI application exposing the pipeline as JSON endpoints."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="symode",
        description="Symmetry-based discovery of first-order ODE structure",
        version=__version__,
    )

    @app.exception_handler(handlers.InputError)
    async def _input_error(request: Request, exc: handlers.InputError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        return handlers.run_generate(req)

    @app.post("/discover", response_model=schemas.DiscoverResponse)
    def discover(req: schemas.DiscoverRequest):
        return handlers.run_discover(req)

    @app.post("/denoise", response_model=schemas.DenoiseResponse)
    def denoise(req: schemas.DenoiseRequest):
        return handlers.run_denoise(req)

    @app.post("/complete", response_model=schemas.CompleteResponse)
    def complete(req: schemas.CompleteRequest):
        return handlers.run_complete(req)

    return app
