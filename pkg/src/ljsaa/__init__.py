"""Scenario reduction for two-stage stochastic programs via inscribed ellipsoids."""

__version__ = "0.1.0"
