"""Fluctuation analysis for panels of currency exchange rates."""

__version__ = "0.1.0"

from .errors import FxTailsError  # noqa: E402

__all__ = ["__version__", "FxTailsError"]
