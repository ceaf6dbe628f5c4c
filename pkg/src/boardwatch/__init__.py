"""boardwatch: desk-scale whiteboard capture, event detection, and retrieval."""

__version__ = "0.1.0"
