"""Numerical laboratory for Orlicz-growth elliptic problems with measure data."""
__version__ = "0.1.0"
