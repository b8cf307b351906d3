"""Contact-geometric optimal control with dissipation."""

__version__ = "0.1.0"
