"""Sparse Group LASSO solved and characterized by approximate message passing."""

__version__="0.1.0"
