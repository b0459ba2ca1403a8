"""Heisenberg-effect analysis and history-weighted target selection for ray-cast input."""

__version__ = "0.1.0"
