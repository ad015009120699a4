"""Checking and synthesis of martingale-style reachability certificates."""

__version__ = "0.1.0"
