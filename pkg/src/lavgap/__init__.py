"""Lavrentiev gap experiments for double-phase energies."""
__version__ = "0.1.0"
