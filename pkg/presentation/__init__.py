"""
Presentation Layer

Renders gradient checks, condition reports and ablation summaries for the
terminal.
"""

from .formatters.text_formatter import TextFormatter

__all__ = ["TextFormatter"]
