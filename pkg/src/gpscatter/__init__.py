"""Numerical inverse scattering for the Gross-Pitaevskii equation."""

__version__ = "0.1.0"
