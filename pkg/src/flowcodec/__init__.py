"""Lossless compression with invertible density models."""

__version__ = "0.1.0"
