"""Outcome-based evaluation of systematic review screening runs."""

__version__ = "0.1.0"
