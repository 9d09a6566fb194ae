"""semlogue - semantic and context-aware dialogue generation objectives."""

__version__ = "1.0.0"
__author__ = "semlogue developers"
