"""Classical and quantum dimension certification for prepare-and-measure statistics."""

from .errors import DimwitError, ResourceGuardError, SolverError, ValidationError
from .facets import (Facet, FacetCheck, FacetClass, SymmetryElement, classify_facets,
                     enumerate_facets, is_facet, symmetry_orbit)
from .polytope import (DeterministicVertex, MembershipCertificate, classical_dimension,
                       classical_max, enumerate_vertices, membership, vertex_count)
from .quantum import (BlochStrategy, QuantumStrategy, bloch_correlations,
                      correlations_from_quantum, j3_search, seesaw_maximize,
                      verify_orthogonality_at_algebraic_max)
from .scenario import (ClassicalStrategy, CorrelationMatrix, ProbabilityTable, Scenario,
                       apply_white_noise, correlations_from_probabilities,
                       probabilities_from_correlations, simulate_classical)
from .witness import Witness, algebraic_max, bound_LN, build_IN, evaluate, evaluate_J3

__version__ = "0.1.0"

__all__ = [
    "BlochStrategy", "ClassicalStrategy", "CorrelationMatrix", "DeterministicVertex",
    "DimwitError", "Facet", "FacetCheck", "FacetClass", "MembershipCertificate",
    "ProbabilityTable", "QuantumStrategy", "ResourceGuardError", "Scenario", "SolverError",
    "SymmetryElement", "ValidationError", "Witness", "algebraic_max", "apply_white_noise",
    "bloch_correlations", "bound_LN", "build_IN", "classical_dimension", "classical_max",
    "classify_facets", "correlations_from_probabilities", "correlations_from_quantum",
    "enumerate_facets", "enumerate_vertices", "evaluate", "evaluate_J3", "is_facet",
    "j3_search", "membership", "probabilities_from_correlations", "seesaw_maximize",
    "simulate_classical", "symmetry_orbit", "verify_orthogonality_at_algebraic_max",
    "vertex_count",
]
