"""Exact two-sample location tests for the Behrens-Fisher problem."""

__version__ = "0.1.0"
