"""Configuration and settings for semlogue."""
