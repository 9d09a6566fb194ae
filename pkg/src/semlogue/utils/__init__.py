"""Utility functions and helpers for semlogue."""
