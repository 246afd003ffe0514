"""HTTP service exposing sessions, benchmarks, and action filtering."""

from .app import app, create_app

__all__ = ["app", "create_app"]
