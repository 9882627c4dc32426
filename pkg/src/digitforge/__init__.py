"""Digit expansions, sufficient-digit couplings and read-once perfect sampling."""

__version__ = "0.1.0"
