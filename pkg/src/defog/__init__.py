"""Retinex bulk enhancement of foggy images with variance-based selection and ranking."""

__version__ = "0.1.0"
