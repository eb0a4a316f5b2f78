"""Multimodal stress detection with early and late fusion of dense networks."""

__version__ = "0.1.0"
