from .app import create_app
from .storage import Storage

__all__ = ["create_app", "Storage"]
