"""Cyclostationary feature detection for impulse-radio UWB signals."""

__version__ = "0.1.0"
