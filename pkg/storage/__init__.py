"""Checkpoint and manifest persistence."""
