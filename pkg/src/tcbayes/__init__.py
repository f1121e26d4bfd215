"""Chance-constrained Bayesian inversion of a transpiration-cooling model.

Library layout:

- ``porous_flow``: deterministic strip forward model (explicit Euler DAE).
- ``gpc``: Hermite polynomial chaos basis, quadrature, surrogate builder.
- ``heat_interface``: interface temperature assembly and 1D heat diffusion.
- ``chance_constraint``: probabilistic feasibility of a parameter value.
- ``bayes``: priors, synthetic observations, likelihood, gradients.
- ``samplers``: cRW, cHMC, cSVGD and projected SVGD.
- ``diagnostics``: reference density, histograms, L2 error, Brooks-Gelman.
- ``scenario``: wiring of the three shipped model configurations.
- ``cli``: command-line front end.
"""

__version__ = "0.1.0"
