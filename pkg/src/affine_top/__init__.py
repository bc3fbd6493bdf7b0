"""Certified computations for the self-affine IFS {(lam x, mu y), (mu x + 1 - mu, lam y + 1 - lam)}."""

__version__ = "0.1.0"
