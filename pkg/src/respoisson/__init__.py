"""Residue-type identities for the Laplace fundamental solution in R^n (n >= 3),
higher derivatives of the Newtonian potential, and Picard solvers for
Delta^m u = a(x, u, grad u, ..., grad^{2m} u) on small balls.
"""

from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
