"""Closed-form rank bounds and existence tests for closed 2-forms."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

from .jordan import JordanSpec


@dataclass(frozen=True)
class BlockCounts:
    """``real[(n, λ)]`` and ``complex[(m, (a, b))]`` block multiplicities."""

    real: Counter
    complex: Counter

    @classmethod
    def of(cls, spec: JordanSpec) -> "BlockCounts":
        return cls(
            Counter((b.size, b.eig) for b in spec.real_blocks),
            Counter((b.half_size, (b.re, b.im)) for b in spec.complex_blocks),
        )


def manhattan(u: Sequence[int], v: Sequence[int]) -> int:
    if len(u) != len(v):
        raise ValueError(f"vectors of different lengths {len(u)} and {len(v)}")
    return sum(abs(a - b) for a, b in zip(u, v))


def pairing_vectors(plus: Sequence[int], minus: Sequence[int]) -> tuple[list[int], list[int]]:
    """Sort both size lists in descending order and pad with zeros to equal length."""
    width = max(len(plus), len(minus))
    p = sorted(plus, reverse=True) + [0] * (width - len(plus))
    m = sorted(minus, reverse=True) + [0] * (width - len(minus))
    return p, m


def _real_groups(spec: JordanSpec) -> dict[Fraction, tuple[list[int], list[int]]]:
    groups: dict[Fraction, tuple[list[int], list[int]]] = {}
    for b in spec.real_blocks:
        if b.eig == 0:
            continue
        plus, minus = groups.setdefault(abs(b.eig), ([], []))
        (plus if b.eig > 0 else minus).append(b.size)
    return groups


def _complex_groups(spec: JordanSpec) -> dict[tuple, tuple[list[int], list[int]]]:
    groups: dict[tuple, tuple[list[int], list[int]]] = {}
    for b in spec.complex_blocks:
        if b.re == 0:
            continue
        plus, minus = groups.setdefault((abs(b.re), b.im), ([], []))
        (plus if b.re > 0 else minus).append(b.half_size)
    return groups


def odd_zero_defect(spec: JordanSpec) -> int:
    """Number of odd sizes ``l`` with an odd count of eigenvalue-0 blocks of size ``l``."""
    counts = Counter(b.size for b in spec.real_blocks if b.eig == 0)
    return sum(c % 2 for l, c in counts.items() if l % 2)


def odd_imaginary_defect(spec: JordanSpec) -> int:
    counts = Counter((b.half_size, b.im) for b in spec.complex_blocks if b.re == 0)
    return sum(c % 2 for (l, _), c in counts.items() if l % 2)


def max_rank_real(spec: JordanSpec) -> int:
    dist = sum(manhattan(*pairing_vectors(p, m)) for p, m in _real_groups(spec).values())
    return spec.n_real - (odd_zero_defect(spec) + dist)


def max_rank_complex(spec: JordanSpec) -> int:
    """The complex bound read literally, including the odd purely-imaginary deduction."""
    dist = sum(manhattan(*pairing_vectors(p, m)) for p, m in _complex_groups(spec).values())
    return spec.n_complex - 2 * odd_imaginary_defect(spec) - 2 * dist


def max_rank(spec: JordanSpec) -> int:
    return max_rank_real(spec) + max_rank_complex(spec)


def _check_rank(spec: JordanSpec, R: int) -> None:
    if R % 2:
        raise ValueError(f"rank of a 2-form must be even, got {R}")
    if R < 0:
        raise ValueError(f"negative rank {R}")
    if R > spec.D:
        raise ValueError(f"rank exceeds dimension: {R} > {spec.D}")


def exists_presymplectic(spec: JordanSpec, R: int,
                         backend: Literal["formula", "oracle"] = "formula") -> bool:
    """Whether a closed 2-form of rank ``R`` exists on the algebra of ``spec``."""
    _check_rank(spec, R)
    if R == 0:
        return True
    if backend == "formula":
        return R <= 2 + max_rank(spec)
    if backend != "oracle":
        raise ValueError(f"unknown backend {backend!r}")
    from .oracle import solution_ranks

    ranks = solution_ranks(spec)
    if R == spec.D:
        return spec.D - 2 in ranks
    return R in ranks or R - 2 in ranks


@dataclass(frozen=True)
class SymplecticVerdict:
    admissible: bool
    clause: str
    detail: str

    def __bool__(self):
        return self.admissible


def symplectic_admissible(spec: JordanSpec) -> SymplecticVerdict:
    """Decide existence of a symplectic form and name the matching case.

    Clause codes: ``3a`` (one odd zero block count is odd), ``3b-i`` (one
    unmatched 1x1 block), ``3b-ii`` (sizes ``l`` and ``l+1`` mismatched across
    ``±α``); ``none`` when no case applies.
    """
    if spec.D % 2:
        raise ValueError(f"symplectic forms need even dimension, D = {spec.D}")
    by_formula = max_rank(spec) >= spec.D - 2
    if odd_imaginary_defect(spec):
        clause, detail = "none", "clause 1 fails: odd count of odd imaginary blocks"
    elif any(manhattan(*pairing_vectors(p, m)) for p, m in _complex_groups(spec).values()):
        clause, detail = "none", "clause 2 fails: unbalanced complex ±a blocks"
    else:
        zero_defect = odd_zero_defect(spec)
        mismatches = []
        for p, m in _real_groups(spec).values():
            pv, mv = pairing_vectors(p, m)
            mismatches += [(a, b) for a, b in zip(pv, mv) if a != b]
        dist = sum(abs(a - b) for a, b in mismatches)
        if zero_defect == 1 and dist == 0:
            clause, detail = "3a", "balanced ±λ blocks, one odd zero-block count"
        elif zero_defect == 0 and dist == 1:
            (a, b), = mismatches
            if min(a, b) == 0:
                clause, detail = "3b-i", "one unmatched block of size 1"
            else:
                clause, detail = "3b-ii", f"sizes {min(a, b)} and {max(a, b)} mismatched"
        else:
            clause, detail = "none", f"clause 3 fails: zero defect {zero_defect}, distance {dist}"
    admissible = clause != "none"
    if admissible != by_formula:
        raise AssertionError("case analysis disagrees with the rank bound")
    return SymplecticVerdict(admissible, clause, detail)
