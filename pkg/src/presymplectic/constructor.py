"""Explicit closed 2-forms: maximal-rank solutions, rank lowering, lifting and equivalences."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .jordan import ComplexBlock, JordanSpec, RealBlock, build_jordan
from .linalg import RationalMatrix, as_fraction, rank, skew_check
from .structured import (
    Placement,
    StructuredSolution,
    membership,
    placement_rank,
    simple_form,
)

ONE = Fraction(1)
ZERO = Fraction(0)
REAL_UNIT = (ONE, ZERO)
IMAG_UNIT = (ZERO, ONE)
MAX_LIFT_RETRIES = 8


def _self_paired_placements(indices: list[int], sizes: list[int], unit) -> list[Placement]:
    """Pair blocks sharing a self-paired eigenvalue (0, or purely imaginary)."""
    out = []
    used = set()
    for pos, i in enumerate(indices):
        if i in used:
            continue
        n = sizes[pos]
        if n % 2 == 0:
            out.append(Placement(i, i, 1, unit))
            used.add(i)
            continue
        partner = next(
            (j for q, j in enumerate(indices) if q > pos and j not in used and sizes[q] == n), None
        )
        if partner is not None:
            out.append(Placement(i, partner, 1, unit))
            used.update({i, partner})
        elif n >= 3:
            out.append(Placement(i, i, 2, unit))
            used.add(i)
    return out


def _mirror_placements(plus: list[int], minus: list[int], unit) -> list[Placement]:
    """Pair ``+`` and ``-`` blocks in order; both lists are already sorted by size."""
    return [Placement(p, m, 1, unit) for p, m in zip(plus, minus)]


def maximal_placements(spec: JordanSpec) -> list[Placement]:
    blocks = spec.blocks
    out: list[Placement] = []
    real = [(k, b) for k, b in enumerate(blocks) if isinstance(b, RealBlock)]
    zero = [k for k, b in real if b.eig == 0]
    out += _self_paired_placements(zero, [blocks[k].size for k in zero], ONE)
    for lam in sorted({abs(b.eig) for _, b in real if b.eig != 0}):
        plus = [k for k, b in real if b.eig == lam]
        minus = [k for k, b in real if b.eig == -lam]
        out += _mirror_placements(plus, minus, ONE)
    cplx = [(k, b) for k, b in enumerate(blocks) if isinstance(b, ComplexBlock)]
    for im in sorted({b.im for _, b in cplx if b.re == 0}):
        group = [k for k, b in cplx if b.re == 0 and b.im == im]
        out += _self_paired_placements(group, [blocks[k].half_size for k in group], REAL_UNIT)
    for key in sorted({(abs(b.re), b.im) for _, b in cplx if b.re != 0}):
        plus = [k for k, b in cplx if (b.re, b.im) == key]
        minus = [k for k, b in cplx if (-b.re, b.im) == key]
        out += _mirror_placements(plus, minus, REAL_UNIT)
    return sorted(out)


def construct_max(spec: JordanSpec) -> StructuredSolution:
    """Simple-form solution whose rank equals the closed-form maximal rank."""
    return StructuredSolution.from_placements(maximal_placements(spec), spec)


def _width(spec: JordanSpec, p: Placement) -> int:
    bl, bm = spec.blocks[p.l], spec.blocks[p.m]
    size = (lambda b: b.size if isinstance(b, RealBlock) else b.half_size)
    return min(size(bl), size(bm)) - p.k + 1


def _moves(spec: JordanSpec, p: Placement) -> list[Placement]:
    """Shifted versions of a placement, each with strictly smaller rank."""
    cells = isinstance(spec.blocks[p.l], ComplexBlock)
    if p.l != p.m:
        return [p._replace(k=p.k + 1)]
    if not cells:
        return [p._replace(k=p.k + 2)]
    out = []
    for step in (2, 1):
        q = p._replace(k=p.k + step)
        width = _width(spec, q)
        out.append(q._replace(value=REAL_UNIT if width % 2 == 0 else IMAG_UNIT))
    return out


def lower_rank(sol: StructuredSolution, target: int, spec: JordanSpec) -> StructuredSolution:
    """Shift leading diagonals until the rank drops to ``target``.

    Each shift corresponds to congruence by a block shift matrix.  When no
    single shift fits the remaining gap the next placement is tried, so a
    shift that would overshoot is never applied.
    """
    if target % 2 or target < 0:
        raise ValueError(f"target rank must be a nonnegative even integer, got {target}")
    if target > sol.rank:
        raise ValueError(f"target {target} exceeds the current rank {sol.rank}")
    placements = list(sol.placements if sol.placements is not None else simple_form(sol.matrix, spec))
    current = sum(placement_rank(spec, p) for p in placements)
    if current != sol.rank:
        raise ValueError("placements do not account for the solution's rank")
    while current > target:
        gap = current - target
        for idx, p in enumerate(placements):
            before = placement_rank(spec, p)
            options = [q for q in _moves(spec, p) if before - placement_rank(spec, q) <= gap]
            if options:
                q = options[0]
                current -= before - placement_rank(spec, q)
                if placement_rank(spec, q) == 0:
                    del placements[idx]
                else:
                    placements[idx] = q
                break
        else:
            raise ValueError(f"unreachable target rank {target}: every shift overshoots")
    return StructuredSolution.from_placements(placements, spec)


@dataclass(frozen=True)
class LiftedForm:
    """A skew ``D × D`` matrix ``[[0, vᵗ], [-v, B]]`` whose minor ``B`` solves the equation."""

    matrix: RationalMatrix
    rank: int
    v_in_image: bool
    spec: JordanSpec = field(repr=False)
    retries: int = 0

    @property
    def minor(self) -> RationalMatrix:
        n = self.matrix.rows
        return self.matrix.submatrix(range(1, n), range(1, n))

    def to_json(self) -> dict:
        doc = self.matrix.to_json()
        doc.update({"dim": self.matrix.rows, "rank": self.rank, "spec_hash": self.spec.spec_hash()})
        return doc


def bordered(b: RationalMatrix, v: Sequence) -> RationalMatrix:
    n = b.rows
    a = RationalMatrix.zeros(n + 1).array
    a[1:, 1:] = b.array
    for i, x in enumerate(v):
        a[0, i + 1] = as_fraction(x)
        a[i + 1, 0] = -as_fraction(x)
    return RationalMatrix._wrap(a)


def lift(sol: StructuredSolution, R: int, spec: JordanSpec, seed: int = 0) -> LiftedForm:
    """Border a solution by a vector so that the ``D × D`` form has rank ``R``."""
    if R not in (sol.rank, sol.rank + 2):
        raise ValueError(f"rank {R} cannot be reached from a solution of rank {sol.rank}")
    if R > spec.D:
        raise ValueError(f"rank exceeds dimension: {R} > {spec.D}")
    b = sol.matrix
    n = b.rows
    rng = random.Random(seed)
    if R == sol.rank:
        w = RationalMatrix([[rng.randint(-3, 3)] for _ in range(n)])
        v = [row[0] for row in (b @ w).array]
        form = bordered(b, v)
        return LiftedForm(form, rank(form), True, spec)
    if sol.rank >= n:
        raise ValueError("no room: the solution is already nonsingular")
    candidates = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(MAX_LIFT_RETRIES)]
    # unit vectors guarantee termination; one of them always leaves the image
    candidates += [[int(i == k) for i in range(n)] for k in range(n)]
    for attempt, v in enumerate(candidates):
        col = RationalMatrix([[x] for x in v])
        if rank(b.hstack(col)) > sol.rank:
            form = bordered(b, v)
            return LiftedForm(form, rank(form), False, spec, attempt)
    raise AssertionError("unreachable: some unit vector lies outside the image")


@dataclass(frozen=True)
class ClosedCheck:
    closed: bool
    residual: RationalMatrix
    triple_residual: Fraction

    def __bool__(self):
        return self.closed


def _triple_check(form: np.ndarray, jordan: np.ndarray) -> Fraction:
    """Largest ``|dω(e_a, e_b, e_c)|`` over all basis triples."""
    d = form.shape[0]
    ad = np.zeros((d, d), dtype=object)
    ad[1:, 1:] = jordan

    def bracket(a: int, b: int) -> np.ndarray:
        out = np.zeros(d, dtype=object)
        if a == 0:
            out = out + ad[:, b]
        if b == 0:
            out = out - ad[:, a]
        return out

    worst = Fraction(0)
    for a in range(d):
        for b in range(a + 1, d):
            for c in range(b + 1, d):
                val = (form[a, :].dot(bracket(b, c)) + form[c, :].dot(bracket(a, b))
                       + form[b, :].dot(bracket(c, a)))
                worst = max(worst, abs(Fraction(val)))
    return worst


def check_closed(form: RationalMatrix, spec: JordanSpec) -> ClosedCheck:
    """Closedness of a 2-form, by the minor equation and by ``dω`` on all triples."""
    if form.shape != (spec.D, spec.D):
        raise ValueError(f"expected a {spec.D}x{spec.D} form, got {form.shape}")
    if not skew_check(form):
        raise ValueError("form is not skew-symmetric")
    n = spec.N
    minor = form.submatrix(range(1, n + 1), range(1, n + 1))
    j = build_jordan(spec)
    residual = minor @ j + j.T @ minor
    triple = _triple_check(form.array, j.array)
    if residual.is_zero() != (triple == 0):
        raise AssertionError("minor equation and dω disagree")
    return ClosedCheck(residual.is_zero(), residual, triple)


@dataclass(frozen=True)
class EquivalenceMap:
    """The map ``[[α, 0], [v, A]]`` with ``A`` commuting with the Jordan matrix."""

    alpha: Fraction
    v: tuple[Fraction, ...]
    A: RationalMatrix

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        object.__setattr__(self, "v", tuple(as_fraction(x) for x in self.v))
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")
        if self.A.rows != self.A.cols or self.A.rows != len(self.v):
            raise ValueError("A must be square with the size of v")

    @classmethod
    def identity(cls, n: int) -> "EquivalenceMap":
        return cls(ONE, (ZERO,) * n, RationalMatrix.identity(n))

    def validate(self, spec: JordanSpec) -> None:
        if self.A.rows != spec.N:
            raise ValueError("A has the wrong size for this spec")
        if not membership(self.A, spec, "commutant"):
            raise ValueError("A does not commute with the Jordan matrix")
        if rank(self.A) != spec.N:
            raise ValueError("singular A")

    def matrix(self) -> RationalMatrix:
        n = self.A.rows
        a = RationalMatrix.zeros(n + 1).array
        a[0, 0] = self.alpha
        a[1:, 0] = list(self.v)
        a[1:, 1:] = self.A.array
        return RationalMatrix._wrap(a)


def apply_equivalence(form: RationalMatrix, eq: EquivalenceMap) -> RationalMatrix:
    if rank(eq.A) != eq.A.rows:
        raise ValueError("singular A")
    bar = eq.matrix()
    if bar.rows != form.rows:
        raise ValueError("form and equivalence sizes differ")
    return bar.T @ form @ bar


def random_commutant(spec: JordanSpec, rng: random.Random, span: int = 2) -> RationalMatrix:
    """Seeded nonsingular element of the commutant with small integer parameters."""
    from .structured import commutant_basis

    basis = commutant_basis(spec)
    while True:
        acc = np.zeros((spec.N, spec.N), dtype=object)
        for b in basis:
            c = rng.randint(-span, span)
            if c:
                acc = acc + c * b.array
        a = RationalMatrix._wrap(acc)
        if rank(a) == spec.N:
            return a


def random_equivalence(spec: JordanSpec, rng: random.Random) -> EquivalenceMap:
    alpha = rng.choice([-3, -2, -1, 1, 2, 3])
    v = tuple(rng.randint(-3, 3) for _ in range(spec.N))
    return EquivalenceMap(Fraction(alpha), v, random_commutant(spec, rng))


def direct_sum(parts: Sequence[StructuredSolution], spec: JordanSpec) -> StructuredSolution:
    """Block-diagonal combination of solutions for consecutive pieces of ``spec``."""
    matrix = RationalMatrix.block_diag([p.matrix for p in parts])
    placements = None
    if all(p.placements is not None for p in parts):
        placements, offset = [], 0
        for p in parts:
            placements += [q._replace(l=q.l + offset, m=q.m + offset) for q in p.placements]
            offset += len(p.spec.blocks)
    return StructuredSolution.of(matrix, spec, placements)
