"""Deciding CP-divisibility of quantum dynamical maps and witnessing information backflow."""

__version__ = "0.1.0"
