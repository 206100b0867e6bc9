"""Chebyshev-Picard strapdown inertial navigation in the ECEF frame."""

__version__ = "0.1.0"
