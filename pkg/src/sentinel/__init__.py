"""Collision-free intersection crossing: schedule-based safety verification and supervision."""

__version__ = "0.1.0"
