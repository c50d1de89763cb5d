"""Compression with target lengths from invertible fingerprints."""

__version__ = "0.1.0"
