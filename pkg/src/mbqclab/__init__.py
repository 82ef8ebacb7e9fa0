"""Dense-state toolkit for measurement-based quantum computation."""

__version__ = "0.1.0"
