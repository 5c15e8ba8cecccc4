"""Sliding-window genuine multipartite entanglement probes on matrix product states."""

__version__ = "0.1.0"
