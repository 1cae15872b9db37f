"""HTTP session service: API app factory, settings, file-backed store."""
from .app import create_app, serve
from .store import Settings, Store

__all__ = ["Settings", "Store", "create_app", "serve"]
