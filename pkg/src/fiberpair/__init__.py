"""Desk-scale simulator for a pulsed fiber photon-pair source."""

__version__ = "0.1.0"
