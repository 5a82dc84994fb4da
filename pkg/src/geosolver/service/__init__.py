"""HTTP session service wrapping the solving engine."""

from .app import create_app

__all__ = ["create_app"]
