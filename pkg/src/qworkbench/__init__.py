"""Desk-scale workbench for quantum random sampling, verification and the QMC sign problem."""

__version__ = "0.1.0"
