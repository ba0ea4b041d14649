"""Delta-connected components of Lalley-Gatzouras self-affine sponges."""

__version__ = "0.1.0"
