"""Orientational order parameters for classical and quantum systems."""

__version__ = "0.1.0"
