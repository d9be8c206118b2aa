"""FastAPI service wrapping the discovery pipeline; the CLI is a thin client."""

from .app import create_app

__all__ = ["create_app"]
