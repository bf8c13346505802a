"""Generalised Klein bottles: quotient spaces, symmetric fields, equivariant
Fourier bases, and a spiking-network / topological-data pipeline."""

__version__ = "0.1.0"
