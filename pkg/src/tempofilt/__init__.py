"""Temporal graph filtrations, persistence diagrams and graph kernels for
classifying temporal networks."""

__version__ = "0.1.0"
