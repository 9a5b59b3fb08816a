"""tzpp: deterministic 2D coordinator-explorer navigation simulator."""

__version__ = "0.1.0"
