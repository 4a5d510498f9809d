"""Adversarial-robustness simulator for coded and learned wireless links."""

__version__ = "0.1.0"
