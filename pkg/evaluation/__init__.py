"""Metrics, condition-wise reports, feature export and gradient checks."""
