"""Desk-scale object-search planning under uncertainty.

The package bundles a hybrid-action online POMDP solver built on
k-center clustered action hyperspheres, a synthetic desk-scale
object-search domain, baseline solvers, a benchmark harness, and a
small HTTP service that exposes planning sessions and benchmark runs.
"""

__version__ = "0.1.0"
