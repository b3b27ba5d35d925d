"""Network building blocks and the two-stage architectures."""
