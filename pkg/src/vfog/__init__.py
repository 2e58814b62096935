"""Vehicular multi-fog task offloading simulator with learned and baseline policies."""

__version__ = "0.1.0"
