"""Bethe-ansatz states of the XXZ ring, their dynamics in a spin bath, and their entanglement."""

__version__ = "0.1.0"
