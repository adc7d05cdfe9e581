"""Solveur SIR dégénéré à deux régions avec interface à confinement"""

__version__ = "0.1.0"
