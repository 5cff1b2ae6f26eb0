"""Chromatic subdivisions, partial protocols and an extension-based proof arena."""
__version__ = "0.1.0"
