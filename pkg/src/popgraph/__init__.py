"""Graph classification with an end-to-end learned latent population graph."""

__version__ = "0.1.0"
