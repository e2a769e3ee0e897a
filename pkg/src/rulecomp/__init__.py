"""Grammar-rule completion benchmark generation and evaluation for HDL code."""

__version__ = "0.1.0"
