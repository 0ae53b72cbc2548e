"""dynlie: a numerical workbench for finite-dimensional Lie quasi-bialgebras.

Construct canonical doubles and twists, evaluate canonical dynamical
l-matrix fields in closed form, verify the generalized classical dynamical
Yang-Baxter system, and compute dual quasi-bialgebras together with their
explicit algebroid trivializations.  Every structural statement is exposed
as a machine-checkable residual.
"""

__version__ = "0.1.0"
