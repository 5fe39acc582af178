"""Simulation, backprojection imaging, and resolution metrology for
chirp-sequence FMCW TDM-MIMO radar on a moving platform."""

__version__ = "0.1.0"
