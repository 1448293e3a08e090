from . import handlers, schemas
from .app import app

__all__ = ["app", "handlers", "schemas"]
