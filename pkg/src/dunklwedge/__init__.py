"""Hitting-time densities of radial Dunkl processes in dihedral wedges."""

__version__ = "0.1.0"
