"""Strict solutions and regularity diagnostics for non-autonomous linear stochastic evolution equations."""
__version__ = "0.1.0"
