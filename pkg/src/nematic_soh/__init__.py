"""Particle, kinetic-coefficient and macroscopic models of self-propelled
particles with nematic alignment."""

__version__ = "0.1.0"
