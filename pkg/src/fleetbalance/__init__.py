"""Relocation planning for station-based electric vehicle sharing fleets."""

__version__ = "0.1.0"
