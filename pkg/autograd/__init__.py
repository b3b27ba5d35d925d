"""Minimal dense-tensor reverse-mode differentiation engine."""

from autograd.gradcheck import GradCheckReport, finite_difference_check
from autograd.ops import forward_primitive, registered_kinds
from autograd.tensor import GradientMap, Graph, Node, Tensor, backward, current_graph

__all__ = [
    "GradCheckReport",
    "GradientMap",
    "Graph",
    "Node",
    "Tensor",
    "backward",
    "current_graph",
    "finite_difference_check",
    "forward_primitive",
    "registered_kinds",
]
