"""Approximation schemes for k-Median and uniform facility location on planar graphs."""

__version__ = "0.1.0"
