"""Simulation toolkit for fast bias-preserving gates on Kerr-cat qubits."""

__version__ = "0.1.0"
