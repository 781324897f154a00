"""Approximate Frank-Wolfe over graph-structured support sets."""
__version__ = "0.1.0"
