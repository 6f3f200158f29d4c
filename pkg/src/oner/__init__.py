"""Simulation of modulated optical control of the 87Sr nuclear spin qudit."""

from .atom import SR87, AtomSpec, DriveParams

__all__ = ["SR87", "AtomSpec", "DriveParams"]
__version__ = "0.1.0"
