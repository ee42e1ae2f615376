"""Operator-splitting and composition time integrators.

A library for building, verifying, and benchmarking splitting and
composition schemes: order-condition algebra over Lyndon words and
multi-indices, a validated scheme catalog, a composition engine, model
problems, linear stability analysis, and highly oscillatory averaging
tools.
"""

from opsplit import algebra, catalog, cli, engine, oscillatory, problems, stability

__all__ = [
    "algebra",
    "catalog",
    "cli",
    "engine",
    "oscillatory",
    "problems",
    "stability",
]

__version__ = "0.1.0"
