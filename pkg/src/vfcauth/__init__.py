"""Blockchain-backed lightweight authentication for vehicular fog computing."""

__version__ = "0.1.0"
