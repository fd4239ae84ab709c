"""Refinement-type verification for a core Ruby-like language."""

__version__ = "0.1.0"
