"""
Formatters Package

Contains formatters that render run results as text.
"""

from .text_formatter import TextFormatter

__all__ = ["TextFormatter"]
