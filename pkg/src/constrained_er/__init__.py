"""One-to-one constrained entity resolution."""

__version__ = "0.1.0"
