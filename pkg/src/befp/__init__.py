"""Exact and numerical solutions of the 2D Bose-Einstein-Fokker-Planck equation."""

__version__ = "0.1.0"
