"""Application server: registry, event ingestion, metadata, sharing, queries."""

from .service import Coordinator
from .images import ImageStore

__all__ = ["Coordinator", "ImageStore"]
