"""Trampa atómica de espejos evanescentes: OQT frente a deBroglie-Bohm."""

__version__ = "0.1.0"
