"""Exact rational and float matrix kernels.

Exact matrices are immutable wrappers around numpy object arrays holding
``fractions.Fraction`` entries.  Float matrices carry a zero tolerance used
when snapping back to an exact grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"-3/4"`` and Fractions to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class RationalMatrix:
    """Dense immutable matrix over the rationals."""

    __slots__ = ("_a",)

    def __init__(self, rows: Iterable[Iterable] | np.ndarray):
        a = np.array([[as_fraction(x) for x in row] for row in rows], dtype=object)
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError("a matrix needs at least one row and one column")
        a.flags.writeable = False
        self._a = a

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "RationalMatrix":
        m = cls.__new__(cls)
        a = np.asarray(a, dtype=object)
        a.flags.writeable = False
        m._a = a
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> "RationalMatrix":
        cols = rows if cols is None else cols
        a = np.empty((rows, cols), dtype=object)
        a.fill(Fraction(0))
        return cls._wrap(a)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        a = cls.zeros(n).array
        for i in range(n):
            a[i, i] = Fraction(1)
        return cls._wrap(a)

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "RationalMatrix":
        """Build from ``(i, j, value)`` triples; unspecified entries are zero."""
        a = cls.zeros(rows, cols).array
        for i, j, v in entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"entry ({i}, {j}) outside a {rows}x{cols} matrix")
            a[i, j] = as_fraction(v)
        return cls._wrap(a)

    @classmethod
    def block_diag(cls, blocks: Sequence["RationalMatrix"]) -> "RationalMatrix":
        n = sum(b.rows for b in blocks)
        m = sum(b.cols for b in blocks)
        a = cls.zeros(n, m).array
        r = c = 0
        for b in blocks:
            a[r:r + b.rows, c:c + b.cols] = b._a
            r += b.rows
            c += b.cols
        return cls._wrap(a)

    @property
    def array(self) -> np.ndarray:
        """A writable copy of the entries."""
        return self._a.copy()

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix._wrap(self._a.T.copy())

    def __getitem__(self, key):
        out = self._a[key]
        if isinstance(out, np.ndarray):
            if out.ndim == 1:
                return tuple(out)
            return RationalMatrix._wrap(out.copy())
        return out

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, RationalMatrix):
            if other.shape != self.shape:
                raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
            return other._a
        raise TypeError(f"expected RationalMatrix, got {type(other).__name__}")

    def __add__(self, other):
        return RationalMatrix._wrap(self._a + self._coerce(other))

    def __sub__(self, other):
        return RationalMatrix._wrap(self._a - self._coerce(other))

    def __neg__(self):
        return RationalMatrix._wrap(-self._a)

    def __mul__(self, scalar):
        return RationalMatrix._wrap(self._a * as_fraction(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        return RationalMatrix._wrap(self._a.dot(other._a))

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.all(self._a == other._a))

    def __hash__(self):
        return hash((self.shape, tuple(self._a.ravel())))

    def __repr__(self):
        body = "; ".join(" ".join(format_fraction(x) for x in row) for row in self._a)
        return f"RationalMatrix([{body}])"

    def is_zero(self) -> bool:
        return not any(x != 0 for x in self._a.ravel())

    def max_abs(self) -> Fraction:
        return max((abs(x) for x in self._a.ravel()), default=Fraction(0))

    def nonzero_entries(self) -> list[tuple[int, int, Fraction]]:
        return [(i, j, x) for (i, j), x in np.ndenumerate(self._a) if x != 0]

    def to_float(self) -> np.ndarray:
        return np.array(self._a, dtype=float)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix._wrap(self._a[np.ix_(list(rows), list(cols))].copy())

    def hstack(self, other: "RationalMatrix") -> "RationalMatrix":
        if other.rows != self.rows:
            raise ValueError("row counts differ")
        return RationalMatrix._wrap(np.hstack([self._a, other._a]))

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[i, j, format_fraction(x)] for i, j, x in self.nonzero_entries()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RationalMatrix":
        try:
            rows, cols = int(doc["rows"]), int(doc["cols"])
            entries = [(int(i), int(j), v) for i, j, v in doc.get("entries", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed matrix document: {exc}") from exc
        return cls.from_entries(rows, cols, entries)


def _integer_rows(a: np.ndarray) -> list[list[int]]:
    out = []
    for row in a:
        scale = lcm(*(x.denominator for x in row)) if len(row) else 1
        out.append([int(x * scale) for x in row])
    return out


def rank(m: RationalMatrix) -> int:
    """Exact rank by Bareiss fraction-free elimination."""
    a = _integer_rows(m.array)
    n_rows, n_cols = len(a), len(a[0])
    r = 0
    prev = 1
    for c in range(n_cols):
        if r == n_rows:
            break
        pivot = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][c]
        for i in range(r + 1, n_rows):
            f = a[i][c]
            row_i, row_r = a[i], a[r]
            for j in range(c + 1, n_cols):
                row_i[j] = (p * row_i[j] - f * row_r[j]) // prev
            row_i[c] = 0
        prev = p
        r += 1
    return r


def nullspace(m: RationalMatrix) -> list[tuple[Fraction, ...]]:
    """Exact basis of {x : m x = 0} from the reduced row echelon form."""
    a = m.array
    n_rows, n_cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        pivot = next((i for i in range(r, n_rows) if a[i, c] != 0), None)
        if pivot is None:
            continue
        if pivot != r:
            a[[r, pivot]] = a[[pivot, r]]
        a[r] = a[r] / a[r, c]
        for i in range(n_rows):
            if i != r and a[i, c] != 0:
                a[i] = a[i] - a[i, c] * a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(n_cols) if c not in set(pivots)]
    basis = []
    for f in free:
        x = [Fraction(0)] * n_cols
        x[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            x[pc] = -a[row, f]
        basis.append(tuple(x))
    return basis


def congruence(s: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    """Return ``sᵗ b s``."""
    if s.rows != s.cols or b.rows != b.cols or s.rows != b.rows:
        raise ValueError(f"dimension mismatch: s is {s.shape}, b is {b.shape}")
    return s.T @ b @ s


def skew_check(m: RationalMatrix) -> bool:
    return m.rows == m.cols and m.T == -m


@dataclass(frozen=True)
class FloatMatrix:
    """A binary64 matrix together with the tolerance used to read it exactly."""

    entries: np.ndarray
    zero_tol: float = DEFAULT_TOL

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("FloatMatrix needs a 2-d array")
        if not np.all(np.isfinite(a)):
            raise ValueError("FloatMatrix entries must be finite")
        if self.zero_tol < 0:
            raise ValueError("zero_tol must be nonnegative")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def to_json(self, digits: int = 17) -> dict:
        rows, cols = self.shape
        return {
            "rows": rows,
            "cols": cols,
            "entries": [
                [i, j, float(f"{x:.{digits}g}")]
                for (i, j), x in np.ndenumerate(self.entries)
                if x != 0.0
            ],
        }


def float_of(m: RationalMatrix, zero_tol: float = DEFAULT_TOL) -> FloatMatrix:
    return FloatMatrix(m.to_float(), zero_tol)


def rational_snap(m: FloatMatrix, grid: Iterable = (-1, 0, 1)) -> RationalMatrix:
    """Round every entry to the nearest grid value, failing if any is too far."""
    values = sorted(as_fraction(g) for g in grid)
    points = np.array([float(g) for g in values])
    rows, cols = m.shape
    out = RationalMatrix.zeros(rows, cols).array
    for (i, j), x in np.ndenumerate(m.entries):
        k = int(np.argmin(np.abs(points - x)))
        dist = abs(points[k] - x)
        if dist > m.zero_tol:
            raise ValueError(f"entry off-grid at ({i}, {j}): value {x!r}, distance {dist:.3g}")
        out[i, j] = values[k]
    return RationalMatrix._wrap(out)


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., n-1}``; its matrix sends ``e_p`` to ``e_images[p]``."""

    images: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        imgs = tuple(int(i) for i in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise ValueError(f"not a permutation: {imgs}")
        object.__setattr__(self, "images", imgs)

    def __len__(self):
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def matrix(self) -> RationalMatrix:
        n = len(self.images)
        return RationalMatrix.from_entries(n, n, [(img, p, 1) for p, img in enumerate(self.images)])

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for p, img in enumerate(self.images):
            inv[img] = p
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        return Permutation(tuple(self.images[i] for i in other.images))

    @classmethod
    def from_matrix(cls, m: RationalMatrix) -> "Permutation":
        if m.rows != m.cols:
            raise ValueError("permutation matrix must be square")
        images = []
        a = m.array
        for p in range(m.cols):
            col = [i for i in range(m.rows) if a[i, p] != 0]
            if len(col) != 1 or a[col[0], p] != 1:
                raise ValueError("not a permutation matrix")
            images.append(col[0])
        return cls(tuple(images))
