"""Interacting diffusions, determinantal kernels, GAF zeros and Loewner chains."""

__version__ = "0.1.0"
