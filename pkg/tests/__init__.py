"""Tests for the semlogue package."""
