"""Synthetic data generation and dataset files."""
