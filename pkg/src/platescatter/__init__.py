"""Guided-wave scattering by a mid-plane-symmetric cavity in an elastic
plate, solved by FEM on a truncated cylinder closed with a modal
Dirichlet-to-Neumann boundary."""

__version__ = "0.1.0"
