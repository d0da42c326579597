"""Numerical laboratory for the renormalized self-intersection local time of
d-dimensional fractional Brownian motion.

Subpackages:

- ``fbm``        exact sampling of fBm paths (Cholesky and circulant embedding)
- ``geometry``   covariance geometry: lambda/rho/mu, regions, kernels
- ``quadrature`` deterministic adaptive integration (1-D, boxes, simplices)
- ``silt``       the approximated self-intersection local time and its regimes
- ``chaos``      Wiener-chaos combinatorics, projections and variances
- ``limits``     limit constants (Xi_T, per-chaos limits, sigma^2)
- ``mc``         seeded Monte Carlo experiments
- ``cli``        batch command-line front end
"""

__version__ = "0.1.0"
