"""statman - numerical laboratory for statistical manifolds."""

__version__ = "0.1.0"
