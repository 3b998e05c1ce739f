"""Structured descriptions of the commutant and of the skew Lyapunov-type solutions.

Blocks are indexed in the spec's canonical order.  A solution ``B`` of
``B J + Jᵗ B = 0`` is handled on its *Toeplitz side* ``C = P B`` where ``P``
is the blockwise reversal: there every nonzero block is an alternating upper
Toeplitz block and ``C`` is skew for the block star ``X ↦ P Xᵗ P``.

Complex blocks are handled cell by cell; a cell ``αI + βJ₂`` is written as
the pair ``(α, β)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .jordan import ComplexBlock, JordanSpec, RealBlock, build_jordan, reversal_matrix
from .linalg import RationalMatrix, rank, skew_check

Scalar = Fraction | tuple  # real coefficient, or an (α, β) cell

ZERO = Fraction(0)
ONE = Fraction(1)


def _cell(value) -> np.ndarray:
    a, b = value
    return np.array([[a, b], [-b, a]], dtype=object)


def toeplitz_positions(n_rows: int, n_cols: int, t: int) -> list[tuple[int, int]]:
    """Entries of diagonal ``t`` (1-based) of an upper Toeplitz ``n_rows × n_cols`` block.

    The square Toeplitz part sits on the right when ``n_rows <= n_cols`` and on
    top otherwise.
    """
    n = min(n_rows, n_cols)
    shift = n_cols - n_rows if n_rows <= n_cols else 0
    return [(r, shift + r + t - 1) for r in range(n - t + 1)]


def toeplitz_block(n_rows: int, n_cols: int, coeffs: Sequence, cells: bool = False,
                   alternating: bool = False) -> np.ndarray:
    """Dense block from diagonal coefficients ``coeffs[t-1]``.

    With ``cells`` the sizes count 2x2 cells and each coefficient is an
    ``(α, β)`` pair.  With ``alternating`` row ``r`` is multiplied by ``(-1)^r``.
    """
    unit = 2 if cells else 1
    out = np.empty((n_rows * unit, n_cols * unit), dtype=object)
    out.fill(ZERO)
    for t, c in enumerate(coeffs, start=1):
        if (c == (0, 0)) if cells else (c == 0):
            continue
        for r, col in toeplitz_positions(n_rows, n_cols, t):
            sign = -1 if alternating and r % 2 else 1
            if cells:
                out[2 * r:2 * r + 2, 2 * col:2 * col + 2] = sign * _cell(c)
            else:
                out[r, col] = sign * c
    return out


def _eig(block):
    return block.eig if isinstance(block, RealBlock) else (block.re, block.im)


def commutes_allowed(bi, bj) -> bool:
    """Whether a nonzero commutant block may join blocks ``bi`` and ``bj``."""
    return type(bi) is type(bj) and _eig(bi) == _eig(bj)


def lyapunov_allowed(bi, bj) -> bool:
    """Whether a nonzero solution block may join ``bi`` and ``bj``."""
    if isinstance(bi, RealBlock) and isinstance(bj, RealBlock):
        return bi.eig == -bj.eig
    if isinstance(bi, ComplexBlock) and isinstance(bj, ComplexBlock):
        return bi.re == -bj.re and bi.im == bj.im
    return False


def _cell_count(b) -> int:
    return b.size if isinstance(b, RealBlock) else b.half_size


def _place(full: np.ndarray, spec: JordanSpec, i: int, j: int, block: np.ndarray) -> None:
    part = spec.partition
    full[part.slice(i), part.slice(j)] = block


def _empty(spec: JordanSpec) -> np.ndarray:
    a = np.empty((spec.N, spec.N), dtype=object)
    a.fill(ZERO)
    return a


def commutant_basis(spec: JordanSpec) -> list[RationalMatrix]:
    """One matrix per free Toeplitz parameter of ``{A : A J = J A}``."""
    basis = []
    blocks = spec.blocks
    for i, bi in enumerate(blocks):
        for j, bj in enumerate(blocks):
            if not commutes_allowed(bi, bj):
                continue
            ni, nj = _cell_count(bi), _cell_count(bj)
            cells = isinstance(bi, ComplexBlock)
            units = [(ONE, ZERO), (ZERO, ONE)] if cells else [ONE]
            for t in range(1, min(ni, nj) + 1):
                for u in units:
                    coeffs = [(ZERO, ZERO) if cells else ZERO] * (t - 1) + [u]
                    full = _empty(spec)
                    _place(full, spec, i, j, toeplitz_block(ni, nj, coeffs, cells))
                    basis.append(RationalMatrix._wrap(full))
    return basis


def blockstar(m: RationalMatrix, spec: JordanSpec) -> RationalMatrix:
    """``P mᵗ P`` with ``P`` the blockwise reversal of ``spec``."""
    if m.shape != (spec.N, spec.N):
        raise ValueError(f"matrix shape {m.shape} does not match the partition of size {spec.N}")
    p = reversal_matrix(spec)
    return p @ m.T @ p


def _block_star(block: np.ndarray, bi, bj) -> np.ndarray:
    """Star of a single ``(i, j)`` block, landing in position ``(j, i)``."""
    ni, nj = block.shape
    cell = 2 if isinstance(bi, ComplexBlock) else 1
    pi = _rev(ni, cell)
    pj = _rev(nj, cell)
    return pj.dot(block.T).dot(pi)


def _rev(n: int, cell: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    out.fill(ZERO)
    k = n // cell
    for i in range(k):
        for r in range(cell):
            out[(k - 1 - i) * cell + r, i * cell + r] = ONE
    return out


class Placement(NamedTuple):
    """A single leading diagonal ``k`` with value ``value`` on Toeplitz block ``(l, m)``.

    ``value`` is a Fraction for real blocks and an ``(α, β)`` pair for complex ones.
    """

    l: int
    m: int
    k: int
    value: Scalar


def placement_rank(spec: JordanSpec, p: Placement) -> int:
    bl, bm = spec.blocks[p.l], spec.blocks[p.m]
    width = min(_cell_count(bl), _cell_count(bm)) - p.k + 1
    if width <= 0:
        return 0
    unit = 2 if isinstance(bl, ComplexBlock) else 1
    return unit * width * (1 if p.l == p.m else 2)


def diagonal_value_ok(spec: JordanSpec, p: Placement) -> bool:
    """Self-placements must respect the star skew-symmetry of the diagonal block."""
    b = spec.blocks[p.l]
    width = _cell_count(b) - p.k + 1
    if isinstance(b, RealBlock):
        return width % 2 == 0
    a, beta = p.value
    return beta == 0 if width % 2 == 0 else a == 0


def toeplitz_side(placements: Sequence[Placement], spec: JordanSpec) -> RationalMatrix:
    """Assemble the Toeplitz-side matrix ``C`` of a simple-form solution."""
    full = _empty(spec)
    blocks = spec.blocks
    for p in placements:
        bl, bm = blocks[p.l], blocks[p.m]
        if not lyapunov_allowed(bl, bm):
            raise ValueError(f"blocks {p.l} and {p.m} cannot be paired")
        if p.l == p.m and not diagonal_value_ok(spec, p):
            raise ValueError(f"placement {p} breaks skew-symmetry of the diagonal block")
        nl, nm = _cell_count(bl), _cell_count(bm)
        if not 1 <= p.k <= min(nl, nm):
            continue
        cells = isinstance(bl, ComplexBlock)
        zero = (ZERO, ZERO) if cells else ZERO
        value = tuple(Fraction(x) for x in p.value) if cells else Fraction(p.value)
        block = toeplitz_block(nl, nm, [zero] * (p.k - 1) + [value], cells, alternating=True)
        _place(full, spec, p.l, p.m, block)
        if p.l != p.m:
            _place(full, spec, p.m, p.l, -_block_star(block, bl, bm))
    return RationalMatrix._wrap(full)


def from_toeplitz_side(c: RationalMatrix, spec: JordanSpec) -> RationalMatrix:
    return reversal_matrix(spec) @ c


def lyapunov_basis(spec: JordanSpec) -> list[RationalMatrix]:
    """Basis of the skew solutions of ``B J + Jᵗ B = 0``, built block by block."""
    basis = []
    blocks = spec.blocks
    for l, bl in enumerate(blocks):
        for m in range(l, len(blocks)):
            bm = blocks[m]
            if not lyapunov_allowed(bl, bm):
                continue
            cells = isinstance(bl, ComplexBlock)
            units = [(ONE, ZERO), (ZERO, ONE)] if cells else [ONE]
            for k in range(1, min(_cell_count(bl), _cell_count(bm)) + 1):
                for u in units:
                    p = Placement(l, m, k, u)
                    if l == m and not diagonal_value_ok(spec, p):
                        continue
                    basis.append(from_toeplitz_side(toeplitz_side([p], spec), spec))
    return basis


@dataclass(frozen=True)
class Membership:
    ok: bool
    residual: RationalMatrix

    def __bool__(self):
        return self.ok


def lyapunov_residual(m: RationalMatrix, spec: JordanSpec) -> RationalMatrix:
    j = build_jordan(spec)
    return m @ j + j.T @ m


def membership(m: RationalMatrix, spec: JordanSpec,
               which: Literal["commutant", "lyapunov"] = "lyapunov") -> Membership:
    """Exact test for the commutant or for the skew solution space."""
    if m.shape != (spec.N, spec.N):
        raise ValueError(f"expected a {spec.N}x{spec.N} matrix, got {m.shape}")
    j = build_jordan(spec)
    if which == "commutant":
        res = m @ j - j @ m
        return Membership(res.is_zero(), res)
    if which != "lyapunov":
        raise ValueError(f"unknown membership kind {which!r}")
    if not skew_check(m):
        return Membership(False, m + m.T)
    res = m @ j + j.T @ m
    return Membership(res.is_zero(), res)


def toeplitz_ext(a: RationalMatrix, n: int, m: int) -> RationalMatrix:
    """Embed the diagonals of a square upper Toeplitz matrix into an ``n × m`` Toeplitz block."""
    k = a.rows
    if a.cols != k:
        raise ValueError("toeplitz_ext needs a square matrix")
    if k > min(n, m):
        raise ValueError(f"cannot extend a {k}x{k} matrix into {n}x{m}")
    arr = a.array
    coeffs = [arr[0, t] for t in range(k)]
    for i in range(k):
        for jj in range(k):
            expect = coeffs[jj - i] if jj >= i else ZERO
            if arr[i, jj] != expect:
                raise ValueError("toeplitz_ext needs an upper Toeplitz matrix")
    return RationalMatrix._wrap(toeplitz_block(n, m, coeffs))


@dataclass(frozen=True)
class StructuredSolution:
    """A skew solution of ``B J + Jᵗ B = 0`` together with its rank.

    ``placements`` is set when the solution is in simple form, i.e. given by
    one leading diagonal per paired block.
    """

    matrix: RationalMatrix
    rank: int
    spec: JordanSpec = field(repr=False)
    placements: tuple[Placement, ...] | None = None

    @classmethod
    def of(cls, matrix: RationalMatrix, spec: JordanSpec,
           placements: Sequence[Placement] | None = None) -> "StructuredSolution":
        check = membership(matrix, spec, "lyapunov")
        if not check:
            raise ValueError("matrix is not a skew solution for this spec")
        return cls(matrix, rank(matrix), spec, None if placements is None else tuple(placements))

    @classmethod
    def from_placements(cls, placements: Sequence[Placement], spec: JordanSpec) -> "StructuredSolution":
        c = toeplitz_side(placements, spec)
        return cls.of(from_toeplitz_side(c, spec), spec, placements)

    @property
    def toeplitz(self) -> RationalMatrix:
        return reversal_matrix(self.spec) @ self.matrix


def block_coefficients(c: np.ndarray, spec: JordanSpec, i: int, j: int, alternating: bool = True) -> list:
    """Read the diagonal coefficients of block ``(i, j)`` of a Toeplitz-side matrix.

    Works on exact or float arrays; only the first row of the square part is read.
    """
    bi, bj = spec.blocks[i], spec.blocks[j]
    part = spec.partition
    block = c[part.slice(i), part.slice(j)]
    ni, nj = _cell_count(bi), _cell_count(bj)
    cells = isinstance(bi, ComplexBlock)
    out = []
    for t in range(1, min(ni, nj) + 1):
        r, col = toeplitz_positions(ni, nj, t)[0]
        if cells:
            out.append((block[2 * r, 2 * col], block[2 * r, 2 * col + 1]))
        else:
            out.append(block[r, col])
    return out


def simple_form(sol_matrix: RationalMatrix, spec: JordanSpec) -> tuple[Placement, ...]:
    """Recover placements from a solution in simple form.

    Raises ``ValueError`` if the Toeplitz side is not a set of single-diagonal
    pairings with at most one partner per block.
    """
    c = from_toeplitz_side(sol_matrix, spec)  # the reversal is an involution
    arr = c.array
    used: set[int] = set()
    out = []
    n_blocks = len(spec.blocks)
    for l in range(n_blocks):
        for m in range(l, n_blocks):
            coeffs = block_coefficients(arr, spec, l, m)
            cells = isinstance(spec.blocks[l], ComplexBlock)
            nz = [t for t, x in enumerate(coeffs, start=1) if (x != (0, 0) if cells else x != 0)]
            part = spec.partition
            if not nz:
                if any(x != 0 for x in arr[part.slice(l), part.slice(m)].ravel()):
                    raise ValueError(f"block ({l}, {m}) is not alternating Toeplitz")
                continue
            if len(nz) > 1 or l in used or m in used:
                raise ValueError("solution is not in simple form")
            p = Placement(l, m, nz[0], coeffs[nz[0] - 1])
            out.append(p)
            used.update({l, m})
    rebuilt = toeplitz_side(out, spec)
    if rebuilt != c:
        raise ValueError("solution is not in simple form")
    return tuple(out)
