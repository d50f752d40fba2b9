"""Naive two-step inference after the lasso."""
from ._kernels import BACKEND

__version__ = "0.1.0"
