"""Finite-horizon laboratory for average-error shadowing."""

__version__ = "0.1.0"
