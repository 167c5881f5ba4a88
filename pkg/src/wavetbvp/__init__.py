"""Exact controls and closed-form solutions for two-point boundary value problems of the wave equation."""

__version__ = "0.1.0"
