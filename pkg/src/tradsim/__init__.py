"""Deterministic simulator for traffic-adaptive data dissemination in vehicular networks."""

__version__ = "0.1.0"
