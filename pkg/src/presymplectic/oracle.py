"""Brute-force ground truth for the skew solution space.

Nothing here uses the block structure: solutions come from the dense linear
system over the ``N(N-1)/2`` skew coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .jordan import JordanSpec, build_jordan
from .linalg import RationalMatrix, nullspace, rank
from .ranks import max_rank

DENSE_GUARD = 16
EXHAUSTIVE_GUARD = 10


def _skew_coords(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _skew_from_coords(n: int, coords, values) -> RationalMatrix:
    entries = []
    for (i, j), x in zip(coords, values):
        if x != 0:
            entries += [(i, j, x), (j, i, -x)]
    return RationalMatrix.from_entries(n, n, entries)


@lru_cache(maxsize=256)
def dense_solution_space(spec: JordanSpec) -> tuple[RationalMatrix, ...]:
    """Exact basis of ``{B skew : B J + Jᵗ B = 0}`` by dense elimination."""
    n = spec.N
    if n > DENSE_GUARD:
        raise ValueError(f"dense oracle limited to N <= {DENSE_GUARD}, got {n}")
    j = build_jordan(spec).array
    coords = _skew_coords(n)
    columns = []
    for a, b in coords:
        img = np.empty((n, n), dtype=object)
        img.fill(Fraction(0))
        # (E_ab - E_ba) J + Jᵗ (E_ab - E_ba)
        img[a, :] += j[b, :]
        img[b, :] -= j[a, :]
        img[:, b] += j[a, :]
        img[:, a] -= j[b, :]
        columns.append([img[p, q] for p, q in coords])
    if not coords:
        return ()
    system = RationalMatrix(np.array(columns, dtype=object).T)
    return tuple(_skew_from_coords(n, coords, v) for v in nullspace(system))


def dense_commutant(spec: JordanSpec) -> tuple[RationalMatrix, ...]:
    n = spec.N
    if n > DENSE_GUARD:
        raise ValueError(f"dense oracle limited to N <= {DENSE_GUARD}, got {n}")
    j = build_jordan(spec).array
    columns = []
    for a in range(n):
        for b in range(n):
            img = np.empty((n, n), dtype=object)
            img.fill(Fraction(0))
            # E_ab J - J E_ab
            img[a, :] += j[b, :]
            img[:, b] -= j[:, a]
            columns.append(list(img.ravel()))
    system = RationalMatrix(np.array(columns, dtype=object).T)
    return tuple(
        RationalMatrix(np.array(v, dtype=object).reshape(n, n)) for v in nullspace(system)
    )


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def random_member(spec: JordanSpec, seed: int, trial: int, span: int = 9) -> RationalMatrix:
    """Integer combination of the dense basis with coefficients in ``[-span, span]``."""
    basis = dense_solution_space(spec)
    if not basis:
        return RationalMatrix.zeros(spec.N)
    coeffs = _trial_rng(seed, trial).integers(-span, span + 1, size=len(basis))
    acc = np.zeros((spec.N, spec.N), dtype=object)
    for c, b in zip(coeffs, basis):
        if c:
            acc = acc + int(c) * b.array
    return RationalMatrix._wrap(acc)


def _generic(spec: JordanSpec, trials: int, seed: int) -> tuple[int, RationalMatrix]:
    if trials < 1:
        raise ValueError("need at least one trial")
    best, witness = -1, None
    for t in range(trials):
        m = random_member(spec, seed, t)
        r = rank(m)
        if r > best:
            best, witness = r, m
    return best, witness


def generic_rank(spec: JordanSpec, trials: int = 25, seed: int = 0) -> int:
    """Largest rank seen over seeded random members of the solution space."""
    return _generic(spec, trials, seed)[0]


def _search_rank(spec: JordanSpec, target: int, seed: int, attempts: int = 200) -> RationalMatrix | None:
    """Look for a member of the given rank among sparse random combinations."""
    basis = dense_solution_space(spec)
    if target == 0:
        return RationalMatrix.zeros(spec.N)
    for t in range(attempts):
        rng = _trial_rng(seed, 10_000 + t)
        size = int(rng.integers(1, len(basis) + 1))
        chosen = rng.choice(len(basis), size=size, replace=False)
        acc = np.zeros((spec.N, spec.N), dtype=object)
        for idx in chosen:
            acc = acc + int(rng.integers(1, 4)) * basis[idx].array
        m = RationalMatrix._wrap(acc)
        if rank(m) == target:
            return m
    return None


def achievable_witnesses(spec: JordanSpec, trials: int = 25, seed: int = 0) -> dict[int, RationalMatrix]:
    """A verified witness for every even rank up to the generic rank, where one was found.

    Witnesses come from the constructor when it reaches the rank and from a
    random sparse search in the dense solution space otherwise.
    """
    from .constructor import construct_max, lower_rank
    from .structured import membership

    if spec.N > EXHAUSTIVE_GUARD:
        raise ValueError(f"achievable ranks limited to N <= {EXHAUSTIVE_GUARD}, got {spec.N}")
    top, generic_witness = _generic(spec, trials, seed)
    found: dict[int, RationalMatrix] = {top: generic_witness}
    try:
        start = construct_max(spec)
    except ValueError:
        start = None
    for k in range(0, top + 1, 2):
        if k in found:
            continue
        witness = None
        if start is not None and k <= start.rank:
            try:
                witness = lower_rank(start, k, spec).matrix
            except ValueError:
                witness = None
        if witness is None:
            witness = _search_rank(spec, k, seed)
        if witness is not None:
            found[k] = witness
    for k, w in found.items():
        if not membership(w, spec, "lyapunov") or rank(w) != k:
            raise AssertionError(f"witness for rank {k} failed verification")
    return dict(sorted(found.items()))


def achievable_ranks(spec: JordanSpec, trials: int = 25, seed: int = 0) -> frozenset[int]:
    return frozenset(achievable_witnesses(spec, trials, seed))


def solution_ranks(spec: JordanSpec, trials: int = 25, seed: int = 0) -> frozenset[int]:
    """Ranks of skew solutions as seen by the oracle.

    Within the exhaustive guard the witnessed set is used; beyond it every even
    rank up to the generic rank is assumed attainable.
    """
    if spec.N <= EXHAUSTIVE_GUARD:
        return achievable_ranks(spec, trials, seed)
    return frozenset(range(0, generic_rank(spec, trials, seed) + 1, 2))


@dataclass(frozen=True)
class OracleReport:
    spec: JordanSpec
    basis_dim: int
    generic_rank: int
    achievable_ranks: frozenset[int]
    formula_rank: int
    agreement: bool
    trials: int
    seed: int
    downward_closed: bool
    witness: RationalMatrix | None = field(default=None, repr=False)
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        doc = {
            "spec": self.spec.to_json(),
            "basis_dim": self.basis_dim,
            "generic_rank": self.generic_rank,
            "achievable_ranks": sorted(self.achievable_ranks),
            "formula_rank": self.formula_rank,
            "agreement": self.agreement,
            "downward_closed": self.downward_closed,
            "trials": self.trials,
            "seed": self.seed,
            "notes": list(self.notes),
        }
        if self.witness is not None:
            doc["witness"] = self.witness.to_json()
        return doc


def errata_report(corpus, trials: int = 25, seed: int = 0) -> list[OracleReport]:
    """Compare the closed-form maximal rank with the oracle on each spec."""
    reports = []
    for spec in corpus:
        basis = dense_solution_space(spec)
        top, witness = _generic(spec, trials, seed)
        formula = max_rank(spec)
        if spec.N <= EXHAUSTIVE_GUARD:
            ranks = achievable_ranks(spec, trials, seed)
        else:
            ranks = frozenset({top})
        expected = frozenset(range(0, top + 1, 2))
        closed = ranks == expected
        notes = []
        if top != formula:
            notes.append(f"formula gives {formula}, a sampled member has rank {top}")
        if not closed:
            missing = sorted(expected - ranks)
            notes.append(f"no witness found for ranks {missing}")
        reports.append(OracleReport(
            spec=spec,
            basis_dim=len(basis),
            generic_rank=top,
            achievable_ranks=ranks,
            formula_rank=formula,
            agreement=top == formula,
            trials=trials,
            seed=seed,
            downward_closed=closed,
            witness=witness if top > formula else None,
            notes=tuple(notes),
        ))
    return reports
