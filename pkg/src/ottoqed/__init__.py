"""Nonstationary cavity-QED quantum Otto engine simulator."""

__version__ = "0.1.0"
