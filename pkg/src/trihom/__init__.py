"""Label, structural and feature homophily for node classification graphs."""

from .errors import (
    ConstantInput,
    DegenerateGraph,
    DegenerateInput,
    EmptyGraph,
    MissingClass,
    NonConvergence,
    NotApplicable,
    TooFewNodes,
    TriHomError,
)
from .graph import Dataset, Graph, degrees, neighbor_distribution, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "ConstantInput", "DegenerateGraph", "DegenerateInput", "EmptyGraph", "MissingClass", "NonConvergence",
    "NotApplicable", "TooFewNodes", "TriHomError", "Dataset", "Graph", "degrees", "neighbor_distribution",
    "spectral_radius",
]
