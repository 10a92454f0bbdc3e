"""
Eigenvalue and trace minimization of noncommutative polynomials with
correlative sparsity.

The main entry points are :func:`build_eig`, :func:`build_trace`,
:func:`solve_relaxation` and :func:`sparse_gns`.
"""

from .ncpoly import (NCPolynomial, ParseError, cyclic_canonical, cyclic_degree, evaluate,
                     newton_chip, parse, star, words_up_to)
from .relax import (MomentRelaxation, RelaxationResult, UnboundedBelow, build_eig,
                    build_trace, solve_relaxation)
from .sdpa import read_sdpa, write_sdpa
from .sdpsolver import BlockSDP, SDPBlock, SolverOptions, SolverStatus, solve
from .sparsity import (PatternError, SparsityPattern, add_ball_constraints,
                       assemble_pattern, check_rip, chordal_cliques, csp_graph)
from .gns import (ExtractedSolution, ExtractionUnavailable, NumericalFailure, sparse_gns,
                  verify_extraction)

__version__ = "0.1.0"

__all__ = [
    "NCPolynomial", "ParseError", "parse", "star", "words_up_to", "cyclic_canonical",
    "cyclic_degree", "newton_chip", "evaluate",
    "MomentRelaxation", "RelaxationResult", "UnboundedBelow", "build_eig", "build_trace",
    "solve_relaxation",
    "read_sdpa", "write_sdpa",
    "BlockSDP", "SDPBlock", "SolverOptions", "SolverStatus", "solve",
    "PatternError", "SparsityPattern", "add_ball_constraints", "assemble_pattern",
    "check_rip", "chordal_cliques", "csp_graph",
    "ExtractedSolution", "ExtractionUnavailable", "NumericalFailure", "sparse_gns",
    "verify_extraction",
]
