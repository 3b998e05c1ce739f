"""Float reduction of maximal-rank solutions to a signed-permutation normal form.

The solution ``B`` is moved to its Toeplitz side ``C = P B`` and transformed
by congruences ``C ↦ S^⊠ C S`` with ``S`` in the commutant of the Jordan
matrix, which is the same as ``B ↦ Sᵗ B S``.  Pivots are normalized with
inverse square roots in the algebra of upper Toeplitz matrices and their
block rows are cleared.  A last pass brings the result to a normal form that
depends only on the congruence class, so that different representatives of
one class reduce to the same matrix.

The real and complex parts of the spec are reduced separately.  The complex
part is handled in complex coordinates: the 2x2 cell ``αI + βJ₂`` becomes
the number ``α + iβ``, transposition becomes conjugate transposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .jordan import JordanSpec, RealBlock, canonical_two_form, reversal_matrix
from .linalg import (
    DEFAULT_TOL,
    FloatMatrix,
    Permutation,
    RationalMatrix,
    rank,
    rational_snap,
    skew_check,
)
from .structured import StructuredSolution, membership, toeplitz_positions

ACCEPT = 1e-6
SNAP_TOL = 1e-6
PIVOT_REL = 1e-7

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class TraceStep:
    tag: str
    pivot: tuple[int, int]
    k: int
    t: int
    transform: FloatMatrix

    def to_json(self) -> dict:
        return {
            "lemma": self.tag,
            "pivot": list(self.pivot),
            "k": self.k,
            "t": self.t,
            "transform": self.transform.to_json(),
        }


@dataclass(frozen=True)
class ReductionTrace:
    steps: tuple[TraceStep, ...]
    accumulated_S: FloatMatrix
    residual: float

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "accumulated_S": self.accumulated_S.to_json(),
            "residual": float(f"{self.residual:.17g}"),
        }


@dataclass(frozen=True)
class CanonicalResult:
    """``canonical_matrix`` is the Toeplitz-side normal form ``M``; ``b_form = P_N M``."""

    permutation: Permutation
    rank: int
    canonical_matrix: RationalMatrix
    b_form: RationalMatrix
    sign_pattern: tuple[int, ...]
    residual: float

    @property
    def permutation_D(self) -> Permutation:
        """Extension to ``D`` coordinates fixing the first one."""
        return Permutation((0,) + tuple(i + 1 for i in self.permutation.images))

    def to_json(self) -> dict:
        return {
            "permutation": list(self.permutation.images),
            "permutation_D": list(self.permutation_D.images),
            "rank": self.rank,
            "sign_pattern": list(self.sign_pattern),
            "canonical_matrix": self.canonical_matrix.to_json(),
            "b_form": self.b_form.to_json(),
            "residual": float(f"{self.residual:.17g}"),
        }


# ---------------------------------------------------------------------------
# Toeplitz algebra helpers

def _binom_half(j: int) -> float:
    """Generalized binomial coefficient ``C(-1/2, j)``."""
    out = 1.0
    for i in range(j):
        out *= (-0.5 - i) / (i + 1)
    return out


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)[: len(a)]


def inv_sqrt_coeffs(g: Sequence[complex]) -> np.ndarray:
    """Coefficients of ``g^{-1/2}`` in the truncated polynomial algebra.

    Uses ``g = c (1 + M)`` with ``M`` nilpotent and the binomial series, which
    terminates after ``len(g)`` terms.  The principal square root of ``c`` is
    taken.
    """
    g = np.asarray(g)
    c = g[0]
    if c == 0:
        raise ReductionError("zero constant diagonal: pivot not usable")
    m = g / c
    m = m.astype(np.result_type(m, float))
    m[0] = 0
    out = np.zeros_like(m)
    term = np.zeros_like(m)
    term[0] = 1
    for j in range(len(g)):
        out = out + _binom_half(j) * term
        term = _poly_mul(term, m)
    root = np.sqrt(c + 0j) if np.iscomplexobj(g) else np.sqrt(c)
    return out / root


def _sign_rule(c, cells: bool) -> int:
    if not cells:
        return 1 if c > 0 else -1
    return -1 if abs(c.imag) <= 1e-12 * max(1.0, abs(c)) and c.real < 0 else 1


def toeplitz_inv_sqrt(t: FloatMatrix) -> tuple[FloatMatrix, int]:
    """Inverse square root of an upper Toeplitz matrix, after a sign choice.

    ``t`` is either a scalar upper Toeplitz matrix or one built from 2x2 cells
    ``αI + βJ₂`` (detected when every cell has that shape and the size is even).
    Returns ``X`` and ``s`` with ``X (s t) X = I``.
    """
    a = np.asarray(t.entries)
    n = a.shape[0]
    cells = n % 2 == 0 and n > 0 and _is_cell_matrix(a) and not _is_scalar_toeplitz(a)
    if cells:
        z = a[0::2, 0::2] + 1j * a[0::2, 1::2]
        g = z[0]
    else:
        if not _is_scalar_toeplitz(a):
            raise ValueError("expected an upper Toeplitz matrix")
        g = a[0]
    if abs(g[0]) <= t.zero_tol:
        raise ReductionError("zero constant diagonal: pivot not usable")
    s = _sign_rule(g[0], cells)
    f = inv_sqrt_coeffs(s * g)
    dense = _toeplitz_dense(len(g), len(g), f)
    if cells:
        dense = _realify(dense)
    return FloatMatrix(dense, t.zero_tol), s


def _is_scalar_toeplitz(a: np.ndarray) -> bool:
    n = a.shape[0]
    if a.shape != (n, n) or np.any(np.abs(np.tril(a, -1)) > 1e-12):
        return False
    return all(np.allclose(np.diagonal(a, t), a[0, t]) for t in range(n))


def _is_cell_matrix(a: np.ndarray) -> bool:
    return np.allclose(a[0::2, 0::2], a[1::2, 1::2]) and np.allclose(a[0::2, 1::2], -a[1::2, 0::2])


def _toeplitz_dense(n_rows: int, n_cols: int, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    out = np.zeros((n_rows, n_cols), dtype=coeffs.dtype if coeffs.size else float)
    for t, c in enumerate(coeffs, start=1):
        if c == 0:
            continue
        for r, col in toeplitz_positions(n_rows, n_cols, t):
            out[r, col] = c
    return out


def _realify(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.kron(z.real, np.eye(2)) + np.kron(z.imag, J2)


def _complexify(a: np.ndarray) -> np.ndarray:
    return a[0::2, 0::2] + 1j * a[0::2, 1::2]


# ---------------------------------------------------------------------------
# Block layout of one part (real or complex) in cell coordinates

class _Layout:
    def __init__(self, part: JordanSpec):
        self.cells = bool(part.complex_blocks)
        blocks = part.blocks
        self.sizes = [b.size if isinstance(b, RealBlock) else b.half_size for b in blocks]
        self.keys = [b.eig if isinstance(b, RealBlock) else (b.re, b.im) for b in blocks]
        self.offsets = list(np.cumsum([0] + self.sizes[:-1]))
        self.n = sum(self.sizes)
        self.count = len(blocks)
        self.dtype = complex if self.cells else float
        self.P = np.zeros((self.n, self.n))
        self.alt = np.zeros(self.n)
        for i, (o, s) in enumerate(zip(self.offsets, self.sizes)):
            self.P[o:o + s, o:o + s] = np.fliplr(np.eye(s))
            self.alt[o:o + s] = [(-1) ** r for r in range(s)]
        self._build_projection()

    def sl(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i] + self.sizes[i])

    def paired(self, i: int, j: int) -> bool:
        ki, kj = self.keys[i], self.keys[j]
        if self.cells:
            return ki[0] == -kj[0] and ki[1] == kj[1]
        return ki == -kj

    def self_paired(self, i: int) -> bool:
        return self.paired(i, i)

    def star(self, x: np.ndarray) -> np.ndarray:
        return self.P @ x.conj().T @ self.P

    def block(self, c: np.ndarray, i: int, j: int) -> np.ndarray:
        return c[self.sl(i), self.sl(j)]

    def coeffs(self, c: np.ndarray, i: int, j: int) -> np.ndarray:
        """Diagonal parameters of the alternating Toeplitz block ``(i, j)``."""
        ni, nj = self.sizes[i], self.sizes[j]
        blk = self.alt[self.sl(i), None] * self.block(c, i, j)
        return np.array([blk[toeplitz_positions(ni, nj, t)[0]] for t in range(1, min(ni, nj) + 1)])

    def toeplitz(self, i: int, j: int, coeffs) -> np.ndarray:
        return _toeplitz_dense(self.sizes[i], self.sizes[j], np.asarray(coeffs, dtype=self.dtype))

    def _build_projection(self):
        """Index groups for projecting onto alternating Toeplitz blocks allowed by the eigenvalues."""
        group = -np.ones((self.n, self.n), dtype=int)
        sign = np.zeros((self.n, self.n))
        gid = 0
        for i in range(self.count):
            for j in range(self.count):
                if not self.paired(i, j):
                    continue
                oi, oj = self.offsets[i], self.offsets[j]
                for t in range(1, min(self.sizes[i], self.sizes[j]) + 1):
                    for r, col in toeplitz_positions(self.sizes[i], self.sizes[j], t):
                        group[oi + r, oj + col] = gid
                        sign[oi + r, oj + col] = (-1) ** r
                    gid += 1
        self._group = group.ravel()
        self._sign = sign.ravel()
        self._mask = self._group >= 0
        self._ngroups = gid
        self._counts = np.bincount(self._group[self._mask], minlength=gid).astype(float)

    def project(self, c: np.ndarray) -> np.ndarray:
        """Nearest structured matrix: alternating Toeplitz blocks, star-skew."""
        flat = c.ravel()
        idx = self._group[self._mask]
        vals = self._sign[self._mask] * flat[self._mask]
        mean = np.bincount(idx, weights=vals.real, minlength=self._ngroups)
        if self.cells:
            mean = mean + 1j * np.bincount(idx, weights=vals.imag, minlength=self._ngroups)
        mean = mean / np.maximum(self._counts, 1)
        out = np.zeros(self.n * self.n, dtype=self.dtype)
        out[self._mask] = self._sign[self._mask] * mean[idx]
        out = out.reshape(self.n, self.n)
        return (out - self.star(out)) / 2


def _lead(coeffs: np.ndarray, thr: float):
    """First diagonal with a coefficient above ``thr`` as ``(k, value)``."""
    for t, x in enumerate(coeffs, start=1):
        if abs(x) > thr:
            return t, x
    return None


# ---------------------------------------------------------------------------
# The reduction of one part

class _PartReduction:
    def __init__(self, layout: _Layout, c: np.ndarray, zero_tol: float):
        self.lay = layout
        self.c = layout.project(c.astype(layout.dtype))
        self.s = np.eye(layout.n, dtype=layout.dtype)
        self.steps: list[tuple[str, tuple[int, int], int, int, np.ndarray]] = []
        self.signs: list[int] = []
        self.zero_tol = zero_tol
        self.done: set[int] = set()

    @property
    def thr(self) -> float:
        return PIVOT_REL * max(1.0, float(np.max(np.abs(self.c))))

    def tag(self, base: str) -> str:
        return base + "C" if self.lay.cells and base in ("step1", "firstlemma", "secondlemma") else base

    def apply(self, s: np.ndarray, tag: str, pivot, k: int, t: int) -> None:
        if tag == "reorder" and np.array_equal(s, np.eye(self.lay.n)):
            return
        self.c = self.lay.project(self.lay.star(s) @ self.c @ s)
        self.s = self.s @ s
        self.steps.append((self.tag(tag), pivot, k, t, s))

    def clear_rows(self, rows: Sequence[int]) -> None:
        """Zero out the rounding left in finished block rows and columns (outside pivots)."""
        lay = self.lay
        keep = set(rows)
        for l in rows:
            for q in range(lay.count):
                if q in keep:
                    continue
                if np.max(np.abs(lay.block(self.c, l, q)), initial=0) <= self.thr:
                    self.c[lay.sl(l), lay.sl(q)] = 0
                    self.c[lay.sl(q), lay.sl(l)] = 0

    # -- lemmas --------------------------------------------------------------

    def normalize(self, l: int, m: int, k: int, tag: str = "step1") -> complex:
        """Bring block ``(l, m)`` to ``κ I^± Z^{k-1}`` and return ``κ``."""
        lay = self.lay
        g = lay.coeffs(self.c, l, m)[k - 1:]
        unit = 1
        if l == m and lay.cells and len(g) % 2:
            unit = 1j
        h = g / unit
        if l == m:
            lead = h[0].real
            t = 1 if lead > 0 else -1
        else:
            t = _sign_rule(h[0], lay.cells)
        f = inv_sqrt_coeffs(t * h)
        s = np.eye(lay.n, dtype=lay.dtype)
        if l == m:
            s[lay.sl(l), lay.sl(l)] = lay.toeplitz(l, l, f)
        else:
            hat = np.conj(f) * np.array([(-1) ** j for j in range(len(f))])
            s[lay.sl(l), lay.sl(l)] = lay.toeplitz(l, l, hat)
            s[lay.sl(m), lay.sl(m)] = lay.toeplitz(m, m, f)
        self.apply(s, tag, (l, m), k, t)
        self.signs.append(t)
        return t * unit

    def first_lemma(self, l: int, k: int) -> None:
        """Clear block row ``l`` using the normalized diagonal pivot ``C_ll``."""
        lay = self.lay
        kappa = self.normalize(l, l, k)
        s = np.eye(lay.n, dtype=lay.dtype)
        for j in range(lay.count):
            if j == l or not lay.paired(l, j):
                continue
            tail = lay.coeffs(self.c, l, j)[k - 1:]
            s[lay.sl(l), lay.sl(j)] = lay.toeplitz(l, j, -tail / kappa)
        self.apply(s, "firstlemma", (l, l), k, 1)
        self.done.add(l)
        self.clear_rows([l])

    def _kill_diagonal_blocks(self, l: int, m: int, tag: str) -> None:
        """Remove ``C_ll`` and ``C_mm`` by first-order corrections ``S_lm``, ``S_ml``.

        Each pass solves the linearized equations exactly; the remainder is of
        higher order, so the index of the first nonzero diagonal grows.
        """
        lay = self.lay
        previous = 0
        for _ in range(2 * max(lay.sizes[l], lay.sizes[m]) + 2):
            first = self._first_diagonal(l, m)
            if first is None:
                return
            if first <= previous:
                raise ReductionError(f"cleanup of blocks {l},{m} is not making progress")
            previous = first
            self._linear_correction(l, m, tag)
        if self._first_diagonal(l, m) is not None:
            raise ReductionError(f"diagonal blocks {l},{m} did not vanish")

    def _first_diagonal(self, l: int, m: int):
        lay = self.lay
        firsts = [
            lead[0]
            for b in (l, m)
            if lay.self_paired(b) and (lead := _lead(lay.coeffs(self.c, b, b), self.thr)) is not None
        ]
        return min(firsts) if firsts else None

    def _linear_correction(self, l: int, m: int, tag: str) -> None:
        lay = self.lay
        p = min(lay.sizes[l], lay.sizes[m])
        unknowns = []
        for pos in ((l, m), (m, l)):
            for t in range(p):
                for unit in ((1.0, 1j) if lay.cells else (1.0,)):
                    e = np.zeros((lay.n, lay.n), dtype=lay.dtype)
                    coeffs = np.zeros(p, dtype=lay.dtype)
                    coeffs[t] = unit
                    e[lay.sl(pos[0]), lay.sl(pos[1])] = lay.toeplitz(pos[0], pos[1], coeffs)
                    unknowns.append(e)

        def observe(x: np.ndarray) -> np.ndarray:
            parts = [lay.block(x, l, l).ravel(), lay.block(x, m, m).ravel()]
            v = np.concatenate(parts)
            return np.concatenate([v.real, v.imag]) if lay.cells else v

        cols = [observe(lay.star(e) @ self.c + self.c @ e) for e in unknowns]
        a = np.array(cols).T
        rhs = -observe(self.c)
        sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
        if np.max(np.abs(a @ sol - rhs), initial=0) > 1e-6 * max(1.0, np.max(np.abs(rhs))):
            raise ReductionError(f"no first-order correction clears blocks {l},{m}")
        e = sum(x * u for x, u in zip(sol, unknowns))
        self.apply(np.eye(lay.n, dtype=lay.dtype) + e, tag, (l, m), 0, 1)

    def second_lemma(self, l: int, m: int, k: int) -> None:
        """Clear block rows ``l`` and ``m`` around the off-diagonal pivot ``C_lm``."""
        lay = self.lay
        self.normalize(l, m, k)
        self._kill_diagonal_blocks(l, m, "secondlemma")
        self.normalize(l, m, k)
        k_lm = lay.coeffs(self.c, l, m)[k - 1]
        k_ml = lay.coeffs(self.c, m, l)[k - 1]
        s = np.eye(lay.n, dtype=lay.dtype)
        for q in range(lay.count):
            if q in (l, m):
                continue
            if lay.paired(l, q):
                s[lay.sl(m), lay.sl(q)] = lay.toeplitz(m, q, -lay.coeffs(self.c, l, q)[k - 1:] / k_lm)
            if lay.paired(m, q):
                s[lay.sl(l), lay.sl(q)] = lay.toeplitz(l, q, -lay.coeffs(self.c, m, q)[k - 1:] / k_ml)
        self.apply(s, "secondlemma", (l, m), k, 1)
        self.done.update({l, m})
        self.clear_rows([l, m])

    def special(self, l: int, m: int) -> None:
        """Blocks of sizes ``n`` and ``n+1`` left over in the odd case."""
        self.normalize(l, m, 1)
        self._kill_diagonal_blocks(l, m, "special4dim")
        self.normalize(l, m, 1)
        self.done.update({l, m})
        self.clear_rows([l, m])

    # -- driver ----------------------------------------------------------------

    def run(self) -> None:
        lay = self.lay
        while True:
            thr = self.thr
            todo = [i for i in range(lay.count) if i not in self.done]
            diag = [
                l for l in todo
                if lay.self_paired(l) and abs(lay.coeffs(self.c, l, l)[0]) > thr
            ]
            if diag:
                self.first_lemma(diag[0], 1)
                continue
            pair = None
            for l in todo:
                partners = [
                    (abs(lay.coeffs(self.c, l, m)[0]), m)
                    for m in todo
                    if m != l and lay.paired(l, m) and lay.sizes[m] == lay.sizes[l]
                    and abs(lay.coeffs(self.c, l, m)[0]) > thr
                ]
                if partners:
                    pair = (l, max(partners, key=lambda x: (x[0], -x[1]))[1])
                    break
            if pair is not None:
                self.second_lemma(*pair, 1)
                continue
            break
        self._leftovers()

    def _leftovers(self) -> None:
        lay = self.lay
        thr = self.thr
        todo = [i for i in range(lay.count) if i not in self.done]
        live = [
            i for i in todo
            if any(np.max(np.abs(lay.block(self.c, i, j)), initial=0) > thr for j in todo)
        ]
        if not live:
            return
        if len(live) == 1:
            (t,) = live
            lead = _lead(lay.coeffs(self.c, t, t), thr)
            if lead is None:
                raise ReductionError("non-maximal-rank input")
            self.first_lemma(t, lead[0])
            return
        if len(live) == 2:
            l, m = live
            if (abs(lay.sizes[l] - lay.sizes[m]) == 1 and lay.paired(l, m)
                    and abs(lay.coeffs(self.c, l, m)[0]) > thr):
                self.special(l, m)
                return
        raise ReductionError("non-maximal-rank input")

    # -- class normal form -----------------------------------------------------

    def pairing(self):
        """Leading data of the reduced matrix: ``{block: (partner, k, value)}``."""
        lay = self.lay
        thr = self.thr
        out = {}
        for i in range(lay.count):
            for j in range(lay.count):
                if not lay.paired(i, j):
                    continue
                lead = _lead(lay.coeffs(self.c, i, j), thr)
                if lead is not None:
                    if i in out:
                        raise ReductionError("reduced matrix has two blocks in one row")
                    out[i] = (j, lead[0], lead[1])
        return out

    def normal_form(self) -> None:
        """Congruence to a representative depending only on the class."""
        lay = self.lay
        pairs = self.pairing()
        s = np.zeros((lay.n, lay.n), dtype=lay.dtype)

        def put(new: int, old: int, scale=1.0):
            s[lay.sl(old), lay.sl(new)] = scale * np.eye(lay.sizes[old])

        groups: dict = {}
        for i in range(lay.count):
            key = lay.keys[i]
            if lay.cells:
                fam = (abs(key[0]), key[1])
            else:
                fam = abs(key)
            groups.setdefault((fam, lay.sizes[i]), []).append(i)

        for (fam, size), members in groups.items():
            if lay.self_paired(members[0]):
                hermitian = lay.cells or size % 2 == 0
                if hermitian:
                    self._hermitian_group(members, size, pairs, s)
                else:
                    self._odd_group(members, pairs, put)
            else:
                self._mirror_group(members, pairs, put)
        self.apply(s, "reorder", (0, 0), 0, 1)

    def _hermitian_group(self, members, size, pairs, s) -> None:
        lay = self.lay
        unit = 1j if lay.cells and size % 2 else 1.0
        active = [i for i in members if i in pairs and pairs[i][1] == 1 and pairs[i][0] in members]
        rest = [i for i in members if i not in active]
        pos = {b: a for a, b in enumerate(active)}
        h = np.zeros((len(active), len(active)), dtype=lay.dtype)
        for i in active:
            j, _, value = pairs[i]
            if j not in pos:
                raise ReductionError("pairing leaves its size group")
            h[pos[i], pos[j]] = value / unit
        h = (h + h.conj().T) / 2
        if np.allclose(h, np.diag(np.sort(np.diag(h).real)[::-1])) and np.allclose(np.abs(np.diag(h)), 1):
            g = np.eye(len(active))
        else:
            w, v = np.linalg.eigh(h)
            order = np.argsort(-w, kind="stable")
            w, v = w[order], v[:, order]
            for c in range(v.shape[1]):
                big = np.argmax(np.abs(v[:, c]))
                v[:, c] = v[:, c] * (abs(v[big, c]) / v[big, c])
            g = v / np.sqrt(np.abs(w))
        for a, new in enumerate(active):
            for b, old in enumerate(active):
                s[lay.sl(old), lay.sl(members[a])] = g[b, a] * np.eye(size)
        for new, old in zip(members[len(active):], rest):
            s[lay.sl(old), lay.sl(new)] = np.eye(size)

    def _odd_group(self, members, pairs, put) -> None:
        order, seen = [], set()
        signs = {}
        for i in members:
            if i in seen or i not in pairs or pairs[i][1] != 1 or pairs[i][0] not in members:
                continue
            j = pairs[i][0]
            order += [i, j]
            seen.update({i, j})
            signs[j] = 1 if pairs[i][2].real > 0 else -1
        order += [i for i in members if i not in seen]
        for new, old in zip(members, order):
            put(new, old, signs.get(old, 1))

    def _mirror_group(self, members, pairs, put) -> None:
        """Blocks of one size for ``±λ``.

        Matched ``+`` blocks come first and unmatched ones last; on the ``-``
        side the unmatched blocks come first, followed by the partners in the
        order of the ``+`` blocks.  With this layout the standard form
        ``J_{(D,D)}`` is its own normal form whenever its minor is a solution.
        """
        lay = self.lay
        size = lay.sizes[members[0]]
        plus = [i for i in members if (lay.keys[i][0] if lay.cells else lay.keys[i]) > 0]
        minus = [i for i in members if i not in plus]
        matched = [i for i in plus if i in pairs and lay.sizes[pairs[i][0]] == size and pairs[i][1] == 1]
        partners = [pairs[i][0] for i in matched]
        new_plus = matched + [i for i in plus if i not in matched]
        new_minus = [i for i in minus if i not in partners] + partners
        for new, old in zip(plus + minus, new_plus + new_minus):
            put(new, old)


def _mirror_sign_fix(lay: _Layout, c: np.ndarray):
    """Scale blocks so that every off-diagonal pivot has positive value."""
    thr = PIVOT_REL * max(1.0, float(np.max(np.abs(c))))
    s = np.eye(lay.n, dtype=lay.dtype)
    flipped = set()
    for i in range(lay.count):
        for j in range(i + 1, lay.count):
            if not lay.paired(i, j) or (lay.self_paired(i) and lay.sizes[i] == lay.sizes[j]):
                continue
            lead = _lead(lay.coeffs(c, i, j), thr)
            if lead is not None and np.real(lead[1]) < 0 and j not in flipped:
                s[lay.sl(j), lay.sl(j)] *= -1
                flipped.add(j)
    return s


# ---------------------------------------------------------------------------
# Public entry points

def _required_rank(spec: JordanSpec) -> tuple[int, int]:
    real = spec.n_real - (spec.n_real % 2)
    return real, spec.n_complex


def _reduce_part(part: JordanSpec, b: np.ndarray, zero_tol: float) -> _PartReduction:
    lay = _Layout(part)
    c = lay.P @ (_complexify(b) if lay.cells else b)
    red = _PartReduction(lay, c, zero_tol)
    red.run()
    red.normal_form()
    fix = _mirror_sign_fix(lay, red.c)
    red.apply(fix, "reorder", (0, 0), 0, 1)
    return red


def reduce_to_canonical(sol: StructuredSolution, spec: JordanSpec,
                        zero_tol: float = DEFAULT_TOL) -> tuple[CanonicalResult, ReductionTrace]:
    """Reduce a maximal-rank solution to ``Pᵗ J P`` by commutant congruences."""
    b = sol.matrix
    if not membership(b, spec, "lyapunov"):
        raise ReductionError("input is not a skew solution for this spec")
    nr, nc = spec.n_real, spec.n_complex
    need_r, need_c = _required_rank(spec)
    real_rank = rank(b.submatrix(range(nr), range(nr))) if nr else 0
    cplx_rank = rank(b.submatrix(range(nr, nr + nc), range(nr, nr + nc))) if nc else 0
    if real_rank != need_r or cplx_rank != need_c:
        raise ReductionError(
            f"non-maximal-rank input: real part rank {real_rank} (need {need_r}), "
            f"complex part rank {cplx_rank} (need {need_c})"
        )
    bf = b.to_float()
    n = spec.N
    s_full = np.zeros((n, n))
    m_full = np.zeros((n, n))
    steps: list[TraceStep] = []
    signs: list[int] = []
    for part, sl in ((spec.real_part(), slice(0, nr)), (spec.complex_part(), slice(nr, n))):
        if part is None:
            continue
        red = _reduce_part(part, bf[sl, sl], zero_tol)
        conv = _realify if red.lay.cells else np.real
        s_full[sl, sl] = conv(red.s)
        m_full[sl, sl] = conv(red.c)
        signs += red.signs
        for tag, pivot, k, t, s in red.steps:
            full = np.eye(n)
            full[sl, sl] = conv(s)
            offset = 0 if sl.start == 0 else len(spec.real_blocks)
            steps.append(TraceStep(tag, (pivot[0] + offset, pivot[1] + offset), k, t,
                                   FloatMatrix(full, zero_tol)))
    p_n = reversal_matrix(spec).to_float()
    c_full = p_n @ bf
    star_s = p_n @ s_full.T @ p_n
    residual = float(np.max(np.abs(star_s @ c_full @ s_full - m_full), initial=0.0))
    try:
        canonical = rational_snap(FloatMatrix(m_full, SNAP_TOL))
    except ValueError as exc:
        raise ReductionError(f"off-grid after reduction: {exc}") from exc
    residual = max(residual, float(np.max(np.abs(m_full - canonical.to_float()), initial=0.0)))
    b_form = reversal_matrix(spec) @ canonical
    perm, k = extract_permutation(b_form)
    result = CanonicalResult(perm, k, canonical, b_form, tuple(signs), residual)
    trace = ReductionTrace(tuple(steps), FloatMatrix(s_full, zero_tol), residual)
    return result, trace


def _pairs_of(a: np.ndarray) -> tuple[list[tuple[int, int]], list[int]]:
    n = a.shape[0]
    pairs, zero = [], []
    for p in range(n):
        nz = [q for q in range(n) if a[p, q] != 0]
        if len(nz) > 1:
            raise ValueError(f"row {p} has more than one nonzero entry")
        if not nz:
            zero.append(p)
            continue
        q = nz[0]
        if a[p, q] not in (1, -1):
            raise ValueError(f"entry ({p}, {q}) is not ±1")
        if a[p, q] == 1:
            pairs.append((p, q))
    pairs.sort(key=lambda pq: min(pq))
    return pairs, zero


def extract_permutation(a: RationalMatrix, template: RationalMatrix | None = None) -> tuple[Permutation, int]:
    """Find ``P`` with ``Pᵗ T P = a`` where ``T`` defaults to ``J_{(N,K)}``.

    ``a`` must be skew with at most one entry ``±1`` in each row and column.
    Pairs are taken in order of their smaller index; the ``+1`` entry of the
    k-th pair of ``a`` is sent to the ``+1`` entry of the k-th pair of ``T``.
    """
    if not skew_check(a):
        raise ValueError("matrix is not skew-symmetric")
    arr = a.array
    for q in range(a.cols):
        if sum(1 for p in range(a.rows) if arr[p, q] != 0) > 1:
            raise ValueError(f"column {q} has more than one nonzero entry")
    pairs, zero = _pairs_of(arr)
    k = 2 * len(pairs)
    if template is None:
        template = canonical_two_form(a.rows, k)
    t_pairs, t_zero = _pairs_of(template.array)
    if len(t_pairs) != len(pairs) or template.shape != a.shape:
        raise ValueError("template and matrix have different ranks")
    images = [0] * a.rows
    for (p, q), (i, j) in zip(pairs, t_pairs):
        images[p], images[q] = i, j
    for p, i in zip(zero, t_zero):
        images[p] = i
    perm = Permutation(tuple(images))
    pm = perm.matrix()
    if pm.T @ template @ pm != a:
        raise AssertionError("permutation does not reproduce the matrix")
    return perm, k


# ---------------------------------------------------------------------------
# Moduli of symplectic forms

@dataclass(frozen=True)
class ModuliClass:
    permutation: Permutation
    result: CanonicalResult = field(repr=False)
    trace: ReductionTrace = field(repr=False)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(enumerate(self.permutation.images)))

    def __eq__(self, other):
        if not isinstance(other, ModuliClass):
            return NotImplemented
        return self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def to_json(self) -> dict:
        return {
            "permutation": list(self.permutation.images),
            "pairs": [list(p) for p in self.pairs],
            "reduction": self.result.to_json(),
        }


def moduli_class(form, spec: JordanSpec, zero_tol: float = DEFAULT_TOL) -> ModuliClass:
    """Permutation ``P̄`` fixing ``e₁`` with the form equivalent to ``P̄`` applied to ``ω₀``."""
    from .constructor import check_closed

    matrix = getattr(form, "matrix", form)
    if spec.D % 2:
        raise ReductionError(f"not symplectic: odd dimension {spec.D}")
    if matrix.shape != (spec.D, spec.D) or not skew_check(matrix):
        raise ReductionError("not symplectic: form is not a skew D x D matrix")
    if rank(matrix) != spec.D:
        raise ReductionError("not symplectic: form is degenerate")
    if not check_closed(matrix, spec):
        raise ReductionError("not symplectic: form is not closed")
    n = spec.N
    minor = matrix.submatrix(range(1, n + 1), range(1, n + 1))
    sol = StructuredSolution.of(minor, spec)
    result, trace = reduce_to_canonical(sol, spec, zero_tol)
    omega0 = canonical_two_form(spec.D, spec.D)
    template = omega0.submatrix(range(1, spec.D), range(1, spec.D))
    perm, _ = extract_permutation(result.b_form, template)
    full = Permutation((0,) + tuple(i + 1 for i in perm.images))
    return ModuliClass(full, result, trace)


def commutant_defect(trace: ReductionTrace, spec: JordanSpec) -> float:
    """Largest ``|S J - J S|`` entry over all recorded transforms."""
    from .jordan import build_jordan

    j = build_jordan(spec).to_float()
    worst = 0.0
    for step in trace.steps + (TraceStep("total", (0, 0), 0, 1, trace.accumulated_S),):
        s = np.asarray(step.transform.entries)
        worst = max(worst, float(np.max(np.abs(s @ j - j @ s), initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# Single steps on a full Toeplitz-side matrix

def _local(c: FloatMatrix, spec: JordanSpec, blocks: Sequence[int]):
    nr = len(spec.real_blocks)
    real = [b < nr for b in blocks]
    if any(real) != all(real):
        raise ReductionError("pivot mixes real and complex blocks")
    arr = np.asarray(c.entries, dtype=float)
    if all(real):
        part, sl, offset = spec.real_part(), slice(0, spec.n_real), 0
    else:
        part, sl, offset = spec.complex_part(), slice(spec.n_real, spec.N), nr
    lay = _Layout(part)
    local = arr[sl, sl]
    red = _PartReduction(lay, _complexify(local) if lay.cells else local, c.zero_tol)
    return red, sl, offset


def _export(red: _PartReduction, c: FloatMatrix, sl: slice, offset: int, first_step: int):
    conv = _realify if red.lay.cells else np.real
    n = c.shape[0]
    arr = np.array(c.entries, dtype=float)
    arr[sl, sl] = conv(red.c)
    steps = []
    for tag, pivot, k, t, s in red.steps[first_step:]:
        full = np.eye(n)
        full[sl, sl] = conv(s)
        steps.append(TraceStep(tag, (pivot[0] + offset, pivot[1] + offset), k, t, FloatMatrix(full, c.zero_tol)))
    total = np.eye(n)
    total[sl, sl] = conv(red.s)
    return FloatMatrix(arr, c.zero_tol), steps, FloatMatrix(total, c.zero_tol)


def normalize_pivot(c: FloatMatrix, spec: JordanSpec, l: int, m: int, k: int) -> tuple[FloatMatrix, TraceStep]:
    """Bring block ``(l, m)`` of the Toeplitz-side matrix ``c`` to ``t I^± Z^{k-1}``."""
    red, sl, offset = _local(c, spec, (l, m))
    lead = _lead(red.lay.coeffs(red.c, l - offset, m - offset), red.thr)
    if lead is None or lead[0] != k:
        raise ReductionError(f"pivot diagonal {k} of block ({l}, {m}) is zero")
    red.normalize(l - offset, m - offset, k)
    out, steps, _ = _export(red, c, sl, offset, 0)
    return out, steps[0]


def eliminate_row_col(c: FloatMatrix, spec: JordanSpec, l: int, m: int, k: int) -> tuple[FloatMatrix, ReductionTrace]:
    """Clear block rows ``l`` and ``m`` around the pivot ``(l, m)``.

    Diagonal pivots use one elimination step; equal-size off-diagonal pivots
    first remove ``C_ll`` and ``C_mm`` and then clear the rows; blocks of sizes
    ``n`` and ``n+1`` only get the first phase.
    """
    red, sl, offset = _local(c, spec, (l, m))
    lay = red.lay
    li, mi = l - offset, m - offset
    lead = _lead(lay.coeffs(red.c, li, mi), red.thr)
    if lead is None or lead[0] != k:
        raise ReductionError(f"hypotheses violated: block ({l}, {m}) has no pivot on diagonal {k}")
    if li == mi:
        red.first_lemma(li, k)
    elif lay.sizes[li] == lay.sizes[mi]:
        red.second_lemma(li, mi, k)
    elif abs(lay.sizes[li] - lay.sizes[mi]) == 1 and k == 1:
        red.special(li, mi)
    else:
        raise ReductionError(f"hypotheses violated: block ({l}, {m}) has sizes "
                             f"{lay.sizes[li]} and {lay.sizes[mi]}")
    out, steps, total = _export(red, c, sl, offset, 0)
    p_n = reversal_matrix(spec).to_float()
    before = np.asarray(c.entries, dtype=float)
    s = np.asarray(total.entries)
    residual = float(np.max(np.abs(p_n @ s.T @ p_n @ before @ s - np.asarray(out.entries)), initial=0.0))
    return out, ReductionTrace(tuple(steps), total, residual)
