"""Seed-deterministic simulator of malware spreading among devices moving through a city grid."""

__version__ = "0.1.0"
