"""
RVolMin project package.

Robust volume-minimization structured matrix factorization: solver library,
identifiability certifier, synthetic benchmark harness and management-command CLI.
"""

__version__ = '0.1.0'
