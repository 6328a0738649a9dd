"""Rearrangements, Polya-Szego extremals and quantitative stability bounds."""

__version__ = "0.1.0"
