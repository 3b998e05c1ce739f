"""Closed 2-forms on almost abelian Lie algebras ``ℝe ⋉ ℝᴺ``.

A 2-form is closed exactly when its ``N × N`` minor ``B`` solves
``B J + Jᵗ B = 0`` for the real Jordan matrix ``J = ad_e``.  The package
computes the rank bounds for such forms, constructs witnesses of every
attainable rank, checks closedness, and reduces maximal-rank solutions to
a signed-permutation normal form.
"""

from .constructor import (
    EquivalenceMap,
    LiftedForm,
    apply_equivalence,
    check_closed,
    construct_max,
    lift,
    lower_rank,
)
from .jordan import ComplexBlock, JordanSpec, RealBlock, build_jordan, make_spec, parse_spec
from .linalg import FloatMatrix, Permutation, RationalMatrix, rank
from .oracle import achievable_ranks, errata_report, generic_rank
from .ranks import exists_presymplectic, max_rank, max_rank_complex, max_rank_real, symplectic_admissible
from .reducer import (
    CanonicalResult,
    ReductionError,
    ReductionTrace,
    extract_permutation,
    moduli_class,
    reduce_to_canonical,
    toeplitz_inv_sqrt,
)
from .structured import StructuredSolution, blockstar, commutant_basis, lyapunov_basis, membership

__all__ = [
    "CanonicalResult",
    "ComplexBlock",
    "EquivalenceMap",
    "FloatMatrix",
    "JordanSpec",
    "LiftedForm",
    "Permutation",
    "RationalMatrix",
    "RealBlock",
    "ReductionError",
    "ReductionTrace",
    "StructuredSolution",
    "achievable_ranks",
    "apply_equivalence",
    "blockstar",
    "build_jordan",
    "check_closed",
    "commutant_basis",
    "construct_max",
    "errata_report",
    "exists_presymplectic",
    "extract_permutation",
    "generic_rank",
    "lift",
    "lower_rank",
    "lyapunov_basis",
    "make_spec",
    "max_rank",
    "max_rank_complex",
    "max_rank_real",
    "membership",
    "moduli_class",
    "parse_spec",
    "rank",
    "reduce_to_canonical",
    "symplectic_admissible",
    "toeplitz_inv_sqrt",
]
