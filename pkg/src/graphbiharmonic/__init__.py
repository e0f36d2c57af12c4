"""Two weak solutions of a forced biharmonic Dirichlet problem on weighted graphs."""

__version__ = "0.1.0"

from .graph import Domain, GraphFormatError, GraphValidationError, WeightedGraph, boundary_of, load_graph, make_graph
from .operators import BiharmonicForm, assemble_form, norm_H
from .constants import ConstantsReport, compute_constants, lambda1
from .functional import ProblemParams, energy, gradient, residual_norm
from .solvers import CriticalPoint, SolverConfig, SolverError, two_solutions

__all__ = [
    "BiharmonicForm",
    "ConstantsReport",
    "CriticalPoint",
    "Domain",
    "GraphFormatError",
    "GraphValidationError",
    "ProblemParams",
    "SolverConfig",
    "SolverError",
    "WeightedGraph",
    "assemble_form",
    "boundary_of",
    "compute_constants",
    "energy",
    "gradient",
    "lambda1",
    "load_graph",
    "make_graph",
    "norm_H",
    "residual_norm",
    "two_solutions",
]
