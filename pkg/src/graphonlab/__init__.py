"""graphonlab: geometric graphons, isospectral drums, and Kuramoto stability."""

__version__ = "0.1.0"
