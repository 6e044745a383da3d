"""cusped-flow: geodesic flow experiments on negatively curved surfaces with cusps."""

__version__ = "0.1.0"
