"""Evaluation and design tools for multi-pulse (dynamical-decoupling) quantum sensing."""

__version__ = "0.1.0"
