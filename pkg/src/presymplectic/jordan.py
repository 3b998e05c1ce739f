"""Jordan data for the derivation ``ad_e``: parsing, ordering and materialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .linalg import Permutation, RationalMatrix, as_fraction, format_fraction


@dataclass(frozen=True)
class RealBlock:
    size: int
    eig: Fraction

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"block size must be positive, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "eig", as_fraction(self.eig))

    @property
    def rows(self) -> int:
        return self.size


@dataclass(frozen=True)
class ComplexBlock:
    """Real Jordan block of ``a ± bi``; ``half_size`` counts 2x2 cells."""

    half_size: int
    re: Fraction
    im: Fraction

    def __post_init__(self):
        if int(self.half_size) < 1:
            raise ValueError(f"half_size must be positive, got {self.half_size}")
        re, im = as_fraction(self.re), as_fraction(self.im)
        if im == 0:
            raise ValueError("complex block with zero imaginary part; use a real block")
        object.__setattr__(self, "half_size", int(self.half_size))
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", abs(im))

    @property
    def rows(self) -> int:
        return 2 * self.half_size


Block = RealBlock | ComplexBlock


class BlockPartition(NamedTuple):
    block_sizes: tuple[int, ...]
    offsets: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    def slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i] + self.block_sizes[i])


def _real_key(b: RealBlock):
    return (abs(b.eig), 0 if b.eig >= 0 else 1, -b.size)


def _complex_key(b: ComplexBlock):
    return (0 if b.re == 0 else 1, abs(b.re), b.im, 0 if b.re >= 0 else 1, -b.half_size)


@dataclass(frozen=True)
class JordanSpec:
    """Real blocks followed by complex blocks.

    ``order[k]`` is the index, in the user's listing (real blocks first, then
    complex ones), of the k-th block held here.
    """

    real_blocks: tuple[RealBlock, ...] = ()
    complex_blocks: tuple[ComplexBlock, ...] = ()
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "real_blocks", tuple(self.real_blocks))
        object.__setattr__(self, "complex_blocks", tuple(self.complex_blocks))
        count = len(self.real_blocks) + len(self.complex_blocks)
        if count == 0:
            raise ValueError("empty Jordan specification")
        order = tuple(range(count)) if self.order is None else tuple(self.order)
        if sorted(order) != list(range(count)):
            raise ValueError("order must be a permutation of the block indices")
        object.__setattr__(self, "order", order)
        if not self.complex_blocks and all(b.eig == 0 and b.size == 1 for b in self.real_blocks):
            raise ValueError("abelian Lie algebra: ad_e is the zero map")

    @property
    def blocks(self) -> tuple[Block, ...]:
        return self.real_blocks + self.complex_blocks

    @property
    def n_real(self) -> int:
        return sum(b.size for b in self.real_blocks)

    @property
    def n_complex(self) -> int:
        return sum(2 * b.half_size for b in self.complex_blocks)

    @property
    def N(self) -> int:
        return self.n_real + self.n_complex

    @property
    def D(self) -> int:
        return self.N + 1

    @property
    def partition(self) -> BlockPartition:
        sizes = tuple(b.rows for b in self.blocks)
        offsets, acc = [], 0
        for s in sizes:
            offsets.append(acc)
            acc += s
        return BlockPartition(sizes, tuple(offsets))

    def real_part(self) -> "JordanSpec | None":
        return _sub_spec(self.real_blocks, ())

    def complex_part(self) -> "JordanSpec | None":
        return _sub_spec((), self.complex_blocks)

    def is_canonical(self) -> bool:
        return canonical_order(self).blocks == self.blocks

    def to_json(self) -> dict:
        doc: dict = {}
        if self.real_blocks:
            doc["real_blocks"] = [
                {"size": b.size, "eig": format_fraction(b.eig)} for b in self.real_blocks
            ]
        if self.complex_blocks:
            doc["complex_blocks"] = [
                {"half_size": b.half_size, "re": format_fraction(b.re), "im": format_fraction(b.im)}
                for b in self.complex_blocks
            ]
        return doc

    def spec_hash(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def label(self) -> str:
        parts = [f"J{b.size}({format_fraction(b.eig)})" for b in self.real_blocks]
        parts += [
            f"C{b.half_size}({format_fraction(b.re)},{format_fraction(b.im)})"
            for b in self.complex_blocks
        ]
        return "+".join(parts)


def _sub_spec(real, cplx) -> JordanSpec | None:
    if not real and not cplx:
        return None
    spec = object.__new__(JordanSpec)
    object.__setattr__(spec, "real_blocks", tuple(real))
    object.__setattr__(spec, "complex_blocks", tuple(cplx))
    object.__setattr__(spec, "order", tuple(range(len(real) + len(cplx))))
    return spec


def make_spec(real: Sequence[tuple] = (), complex_: Sequence[tuple] = ()) -> JordanSpec:
    """Build a canonically ordered spec from ``(size, eig)`` and ``(m, a, b)`` tuples."""
    spec = JordanSpec(
        tuple(RealBlock(n, as_fraction(e) if not isinstance(e, Fraction) else e) for n, e in real),
        tuple(ComplexBlock(m, as_fraction(a), as_fraction(b)) for m, a, b in complex_),
    )
    return canonical_order(spec)


def canonical_order(spec: JordanSpec) -> JordanSpec:
    """Sort blocks: eigenvalue 0 first, then ``+λ`` before ``-λ`` by ``|λ|``; sizes descending."""
    n_real = len(spec.real_blocks)
    real_idx = sorted(range(n_real), key=lambda i: (_real_key(spec.real_blocks[i]), i))
    cplx_idx = sorted(
        range(len(spec.complex_blocks)), key=lambda i: (_complex_key(spec.complex_blocks[i]), i)
    )
    order = tuple(spec.order[i] for i in real_idx) + tuple(
        spec.order[n_real + i] for i in cplx_idx
    )
    out = object.__new__(JordanSpec)
    object.__setattr__(out, "real_blocks", tuple(spec.real_blocks[i] for i in real_idx))
    object.__setattr__(out, "complex_blocks", tuple(spec.complex_blocks[i] for i in cplx_idx))
    object.__setattr__(out, "order", order)
    return out


def coordinate_permutation(spec: JordanSpec) -> Permutation:
    """Map coordinates of ``spec`` to those of the user's original listing.

    With ``Q`` this permutation and ``U`` the user's spec,
    ``build_jordan(spec) == Qᵗ build_jordan(U) Q``.
    """
    user_sizes = [0] * len(spec.order)
    for b, k in zip(spec.blocks, spec.order):
        user_sizes[k] = b.rows
    user_offsets = [sum(user_sizes[:k]) for k in range(len(user_sizes))]
    images = []
    for b, k in zip(spec.blocks, spec.order):
        images.extend(range(user_offsets[k], user_offsets[k] + b.rows))
    return Permutation(tuple(images))


def user_spec(spec: JordanSpec) -> JordanSpec:
    """The blocks of ``spec`` in the user's original order."""
    blocks = [None] * len(spec.order)
    for b, k in zip(spec.blocks, spec.order):
        blocks[k] = b
    real = tuple(b for b in blocks if isinstance(b, RealBlock))
    cplx = tuple(b for b in blocks if isinstance(b, ComplexBlock))
    if [isinstance(b, RealBlock) for b in blocks] != [True] * len(real) + [False] * len(cplx):
        raise ValueError("user listing interleaves real and complex blocks")
    return JordanSpec(real, cplx)


class SpecFormatError(ValueError):
    """The spec document is not shaped like a spec file."""


def parse_spec(doc: dict | str) -> JordanSpec:
    """Read the spec-file JSON and return it validated and canonically ordered."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecFormatError("spec document must be a JSON object")
    unknown = set(doc) - {"real_blocks", "complex_blocks"}
    if unknown:
        raise SpecFormatError(f"unknown spec fields: {sorted(unknown)}")
    real, cplx = [], []
    for field, fn, out in (("real_blocks", _read_real, real), ("complex_blocks", _read_complex, cplx)):
        entries = doc.get(field, [])
        if not isinstance(entries, list):
            raise SpecFormatError(f"{field}: expected a list")
        for k, entry in enumerate(entries):
            try:
                cls, args = fn(entry)
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecFormatError(f"{field}[{k}]: missing or malformed field {exc}") from exc
            try:
                out.append(cls(*args))
            except ValueError as exc:
                raise ValueError(f"{field}[{k}]: {exc}") from exc
    return canonical_order(JordanSpec(real, cplx))


def _read_real(entry: dict):
    return RealBlock, (_read_int(entry["size"]), as_fraction(entry["eig"]))


def _read_complex(entry: dict):
    return ComplexBlock, (_read_int(entry["half_size"]), as_fraction(entry["re"]), as_fraction(entry["im"]))


def _read_int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError(f"expected an integer, got {x!r}")
    return x


def _cell(a: Fraction, b: Fraction) -> list[list[Fraction]]:
    return [[a, b], [-b, a]]


def build_jordan(spec: JordanSpec) -> RationalMatrix:
    parts = []
    for blk in spec.real_blocks:
        n = blk.size
        parts.append(
            RationalMatrix.from_entries(
                n, n, [(i, i, blk.eig) for i in range(n)] + [(i, i + 1, 1) for i in range(n - 1)]
            )
        )
    for blk in spec.complex_blocks:
        m = blk.half_size
        entries = []
        for c in range(m):
            o = 2 * c
            entries += [(o, o, blk.re), (o, o + 1, blk.im), (o + 1, o, -blk.im), (o + 1, o + 1, blk.re)]
            if c + 1 < m:
                entries += [(o, o + 2, 1), (o + 1, o + 3, 1)]
        parts.append(RationalMatrix.from_entries(2 * m, 2 * m, entries))
    return RationalMatrix.block_diag(parts)


def _per_block(spec: JordanSpec, real_fn, cplx_fn) -> RationalMatrix:
    parts = [real_fn(b.size) for b in spec.real_blocks]
    parts += [cplx_fn(b.half_size) for b in spec.complex_blocks]
    return RationalMatrix.block_diag(parts)


def _reversal(n: int, cell: int = 1) -> RationalMatrix:
    return RationalMatrix.from_entries(
        n * cell, n * cell, [((n - 1 - i) * cell + r, i * cell + r, 1) for i in range(n) for r in range(cell)]
    )


def _alternating(n: int, cell: int = 1) -> RationalMatrix:
    return RationalMatrix.from_entries(
        n * cell, n * cell, [(i * cell + r, i * cell + r, (-1) ** i) for i in range(n) for r in range(cell)]
    )


def _upper_shift(n: int, cell: int = 1) -> RationalMatrix:
    return RationalMatrix.from_entries(
        n * cell, n * cell, [(i * cell + r, (i + 1) * cell + r, 1) for i in range(n - 1) for r in range(cell)]
    )


def reversal_matrix(spec: JordanSpec) -> RationalMatrix:
    """Blockwise anti-diagonal reversal (2x2 identity cells on complex blocks)."""
    return _per_block(spec, _reversal, lambda m: _reversal(m, 2))


def alternating_identity(spec: JordanSpec) -> RationalMatrix:
    """Blockwise ``diag(1, -1, 1, ...)`` (with ``±I_2`` cells on complex blocks)."""
    return _per_block(spec, _alternating, lambda m: _alternating(m, 2))


def canonical_two_form(dim: int, rank_: int) -> RationalMatrix:
    """``J_R ⊕ 0`` of size ``dim`` with ``J_R = [[0, I], [-I, 0]]``."""
    if rank_ % 2:
        raise ValueError(f"rank of a skew form must be even, got {rank_}")
    if not 0 <= rank_ <= dim:
        raise ValueError(f"rank {rank_} outside 0..{dim}")
    r = rank_ // 2
    return RationalMatrix.from_entries(
        dim, dim, [(i, r + i, 1) for i in range(r)] + [(r + i, i, -1) for i in range(r)]
    )


def shift_matrix(spec: JordanSpec, block: int) -> RationalMatrix:
    """Identity except for the upper shift on one block (a cell shift on complex blocks)."""
    if not 0 <= block < len(spec.blocks):
        raise ValueError(f"block index {block} out of range")
    parts = []
    for k, b in enumerate(spec.blocks):
        if k == block:
            parts.append(_upper_shift(b.size) if isinstance(b, RealBlock) else _upper_shift(b.half_size, 2))
        else:
            parts.append(RationalMatrix.identity(b.rows))
    return RationalMatrix.block_diag(parts)


class AuxMatrices(NamedTuple):
    P: RationalMatrix
    I_pm: RationalMatrix
    D: int

    def J_canonical(self, rank_: int) -> RationalMatrix:
        return canonical_two_form(self.D, rank_)


def aux_matrices(spec: JordanSpec) -> AuxMatrices:
    return AuxMatrices(reversal_matrix(spec), alternating_identity(spec), spec.D)
