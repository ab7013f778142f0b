"""Quasimodel machinery: types and candidates over closures, suitability,
acceptable sequences, k-trees, structure validation, bounded satisfiability
search, and witness-model extraction."""

from .extract import Extraction, extract_mf_model
from .ktree import KTree, tree_formula, tree_step_check, validate_ktree
from .oracle import OracleBudget, OracleVerdict, consistent, search_model
from .pool import TypePool, build_pool
from .search import SearchResult, bounded_sat_search
from .sequences import CandidateLasso, acceptable_sequence_check
from .structure import (
    ObjectTrack, Quasimodel, load_quasimodel, target_formula,
    validate_quasimodel,
)
from .suitable import (
    concordant, fuse, phi_conjunction, phi_points, suitable_epi,
    suitable_next,
)
from .types import (
    IndexedType, QPoint, QuasiError, StateCandidate, TypeSet, alpha_of,
    beta_of, coherence_check, enumerate_types,
)

__all__ = [
    "CandidateLasso", "Extraction", "IndexedType", "KTree", "ObjectTrack",
    "OracleBudget", "OracleVerdict", "QPoint", "Quasimodel", "QuasiError",
    "SearchResult", "StateCandidate", "TypePool", "TypeSet",
    "acceptable_sequence_check", "alpha_of", "beta_of", "bounded_sat_search",
    "build_pool", "coherence_check", "concordant", "consistent",
    "enumerate_types", "extract_mf_model", "fuse", "load_quasimodel",
    "phi_conjunction", "phi_points", "search_model", "suitable_epi",
    "suitable_next", "target_formula", "tree_formula", "tree_step_check",
    "validate_ktree", "validate_quasimodel",
]
