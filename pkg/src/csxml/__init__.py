"""Interpretable ML toolkit for cybersickness classification and FMS regression."""

__version__ = "0.1.0"
