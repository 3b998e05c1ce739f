"""Acceptance checks, one test per criterion.

Each test records a pass/fail line in ``conftest.ACCEPTANCE``; the lines are
printed at the end of the pytest run, or directly when this file is executed
as a script.
"""

import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from presymplectic.cli import build_form
from presymplectic.constructor import (
    apply_equivalence,
    check_closed,
    construct_max,
    direct_sum,
    lift,
    lower_rank,
    random_equivalence,
)
from presymplectic.jordan import canonical_two_form, make_spec, reversal_matrix
from presymplectic.linalg import RationalMatrix, rank
from presymplectic.oracle import (
    achievable_ranks,
    achievable_witnesses,
    dense_solution_space,
    errata_report,
    generic_rank,
    random_member,
)
from presymplectic.ranks import max_rank, max_rank_complex, max_rank_real, symplectic_admissible
from presymplectic.reducer import commutant_defect, moduli_class, reduce_to_canonical
from presymplectic.structured import (
    StructuredSolution,
    from_toeplitz_side,
    lyapunov_basis,
    lyapunov_residual,
    membership,
)

import conftest
from conftest import COMPLEX_SPECS, real_corpus

REAL = make_spec(real=[(3, 1), (2, -1)])
CPLX = make_spec(complex_=[(4, 0, 1)])
BOTH = make_spec(real=[(3, 1), (2, -1)], complex_=[(4, 0, 1)])

A1 = RationalMatrix([[0, 0, 0, 1, 0], [0, 0, 0, 0, -1], [0, 0, 0, 0, 0],
                     [0, 1, 0, 0, 0], [0, 0, -1, 0, 0]])
A2 = RationalMatrix([[0, 0, 0, 0, 1], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0],
                     [0, 0, -1, 0, 0], [0, 0, 0, 0, 0]])
B1 = RationalMatrix([
    [1, 1, 0, 0, 1, 1, 0, 0], [-1, 1, 0, 0, -1, 1, 0, 0],
    [0, 0, -1, -1, 0, 0, -1, -1], [0, 0, 1, -1, 0, 0, 1, -1],
    [0, 0, 0, 0, 1, 1, 0, 0], [0, 0, 0, 0, -1, 1, 0, 0],
    [0, 0, 0, 1, 0, 0, -1, -1], [0, 0, 0, 1, 0, 0, 1, -1],
])
B2 = RationalMatrix([
    [0, 0, 0, 0, 1, 1, 0, 0], [0, 0, 0, 0, -1, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, -1, -1], [0, 0, 0, 0, 0, 0, 1, -1],
] + [[0] * 8] * 4)


def record(k: int, ok: bool, detail: str) -> None:
    conftest.ACCEPTANCE[k] = (ok, detail)
    assert ok, detail


def _max_abs(m: RationalMatrix):
    return max((abs(x) for row in m.array for x in row), default=0)


def test_criterion_1_real_example():
    t0 = time.perf_counter()
    sol = construct_max(REAL)
    low = lower_rank(sol, 2, REAL)
    a_side = [from_toeplitz_side(a, REAL) for a in (A1, A2)]
    checks = {
        "max_rank_real == 4": max_rank_real(REAL) == 4,
        "construct_max rank 4 in solution space": sol.rank == 4 == rank(sol.matrix) and bool(membership(sol.matrix, REAL)),
        "lower_rank reaches 2": rank(low.matrix) == 2 and bool(membership(low.matrix, REAL)),
        "P A_1, P A_2 members with zero residual": all(membership(b, REAL).residual.is_zero() for b in a_side)
        and all(membership(b, REAL) for b in a_side),
        "ranks 4 and 2": [rank(a) for a in (A1, A2)] == [4, 2],
    }
    elapsed = time.perf_counter() - t0
    checks["under 1 s"] = elapsed < 1
    failed = [k for k, v in checks.items() if not v]
    record(1, not failed, f"{elapsed:.2f}s; A_i read as Toeplitz-side, checked as P A_i; "
              + ("all checks hold" if not failed else f"failed: {failed}"))


def test_criterion_2_complex_example():
    t0 = time.perf_counter()
    sol = construct_max(CPLX)
    ranks = achievable_ranks(CPLX)
    p = reversal_matrix(CPLX)
    notes = []
    for name, b in (("B_1", B1), ("B_2", B2)):
        for side, m in (("as printed", b), ("times P", p @ b)):
            member = bool(membership(m, CPLX))
            skew = _max_abs(m + m.T)
            lyap = _max_abs(lyapunov_residual(m, CPLX))
            notes.append(f"{name} {side}: member={member}, max |B+Bt| = {skew}, max |BJ+JtB| = {lyap}")
    elapsed = time.perf_counter() - t0
    ok = (max_rank_complex(CPLX) == 8 and sol.rank == 8 and ranks == set(range(0, 9, 2))
          and elapsed < 5)
    record(2, ok, f"{elapsed:.2f}s; max 8, constructed rank {sol.rank}, achievable {sorted(ranks)}; "
                  + "; ".join(notes))


def _table_rows():
    a_sols = [StructuredSolution.of(from_toeplitz_side(a, REAL), REAL) for a in (A1, A2)]
    top = construct_max(CPLX)
    b_sols = [top, lower_rank(top, 4, CPLX)]
    rows = {}
    for i, a in enumerate(a_sols, 1):
        for j, b in enumerate(b_sols, 1):
            sol = direct_sum([a, b], BOTH)
            rows[(i, j)] = [lift(sol, sol.rank, BOTH, seed=i * 10 + j), lift(sol, sol.rank + 2, BOTH, seed=i * 10 + j)]
    return rows


def test_criterion_3_dimension_14_table():
    t0 = time.perf_counter()
    expected = {(1, 1): (12, 14), (2, 1): (10, 12), (1, 2): (8, 10), (2, 2): (6, 8)}
    got, closed = {}, True
    for key, (in_im, out_im) in _table_rows().items():
        got[key] = (rank(in_im.matrix), rank(out_im.matrix))
        closed &= bool(check_closed(in_im.matrix, BOTH)) and bool(check_closed(out_im.matrix, BOTH))
        closed &= in_im.v_in_image and not out_im.v_in_image
    elapsed = time.perf_counter() - t0
    ok = got == expected and closed and elapsed < 10
    table = ", ".join(f"A{i}+B{j}: {a}/{b}" for (i, j), (a, b) in sorted(got.items()))
    record(3, ok, f"{elapsed:.2f}s; {table}; all closed={closed}")


def test_criterion_4_structure_vs_oracle():
    t0 = time.perf_counter()
    specs = real_corpus()
    dim_bad, rank_bad = [], []
    for spec in specs:
        if len(lyapunov_basis(spec)) != len(dense_solution_space(spec)):
            dim_bad.append(spec.label())
        for seed in (0, 1):
            if max_rank(spec) != generic_rank(spec, trials=50, seed=seed):
                rank_bad.append((spec.label(), seed))
    elapsed = time.perf_counter() - t0
    ok = not dim_bad and not rank_bad and elapsed < 120
    record(4, ok, f"{elapsed:.1f}s; {len(specs)} specs, dimension mismatches {len(dim_bad)}, "
                  f"rank mismatches {len(rank_bad)} {dim_bad[:3]}{rank_bad[:3]}")


def test_criterion_5_complex_errata():
    specs = [make_spec(complex_=[(m, 0, 1)]) for m in (1, 2, 3)] + [make_spec(complex_=[(1, 1, 1), (1, -1, 1)])]
    reports = errata_report(specs)
    complete = len(reports) == len(specs)
    valid = True
    lines = []
    for rep in reports:
        doc = rep.to_json()
        complete &= {"formula_rank", "generic_rank", "achievable_ranks", "notes"} <= set(doc)
        witnesses = achievable_witnesses(rep.spec)
        valid &= all(bool(membership(w, rep.spec)) and rank(w) == k for k, w in witnesses.items())
        if rep.witness is not None:
            valid &= bool(membership(rep.witness, rep.spec)) and rank(rep.witness) == rep.generic_rank
        complete &= rep.generic_rank in witnesses
        lines.append(f"{rep.spec.label()}: formula {rep.formula_rank} oracle {rep.generic_rank} "
                     f"ranks {sorted(rep.achievable_ranks)}")
    c1 = reports[0]
    expected_disagreement = c1.formula_rank == 0 and c1.generic_rank == 2 and c1.witness is not None
    record(5, complete and valid and expected_disagreement,
           f"complete={complete} witnesses valid={valid}; " + "; ".join(lines))


def _symplectic_corpus():
    return [s for s in real_corpus() if s.D % 2 == 0 and symplectic_admissible(s)]


@pytest.mark.slow
def test_criterion_6_finite_moduli():
    t0 = time.perf_counter()
    specs = _symplectic_corpus()
    bad, worst = [], 0.0
    for spec in specs:
        form = build_form(spec, spec.D, 0).matrix
        rng = random.Random(spec.spec_hash())
        classes = set()
        for _ in range(100):
            cls = moduli_class(apply_equivalence(form, random_equivalence(spec, rng)), spec)
            res = cls.result
            p = res.permutation.matrix()
            worst = max(worst, res.residual)
            if res.residual >= 1e-6 or res.b_form != p.T @ canonical_two_form(spec.N, res.rank) @ p:
                bad.append(spec.label())
            classes.add(cls)
        if len(classes) != 1:
            bad.append(f"{spec.label()} ({len(classes)} classes)")
    elapsed = time.perf_counter() - t0
    record(6, not bad and elapsed < 300,
           f"{elapsed:.1f}s; {len(specs)} specs x 100 scrambles, worst residual {worst:.1e}, failures {bad[:3]}")


def _soundness_specs():
    extra = [make_spec(real=[(3, 1), (3, -1), (2, 0)]), make_spec(real=[(2, 0), (2, 0), (2, 1), (1, -1)]),
             make_spec(real=[(3, 0), (3, 0), (1, 2)]), make_spec(real=[(2, 1), (2, 1), (2, -1), (2, -1)])]
    return real_corpus() + extra + [s for s in COMPLEX_SPECS if s.N <= 8]


def _reducible_rank(spec):
    return spec.n_real - spec.n_real % 2 + spec.n_complex


@pytest.mark.slow
def test_criterion_7_reduction_soundness():
    t0 = time.perf_counter()
    used, instances, bad, worst = 0, 0, [], 0.0
    for spec in _soundness_specs():
        target = _reducible_rank(spec)
        if generic_rank(spec) != target:
            continue  # reduction needs full rank on each part
        used += 1
        for trial in range(30):
            m = random_member(spec, 7, trial)
            if rank(m) != target:
                continue
            instances += 1
            result, trace = reduce_to_canonical(StructuredSolution.of(m, spec), spec)
            again, trace2 = reduce_to_canonical(StructuredSolution.of(result.b_form, spec), spec)
            s = np.asarray(trace.accumulated_S.entries)
            worst = max(worst, result.residual)
            sound = (result.residual < 1e-6 and commutant_defect(trace, spec) < 1e-8
                     and abs(np.linalg.det(s)) > 1e-12
                     and again.permutation == result.permutation
                     and np.allclose(np.asarray(trace2.accumulated_S.entries), np.eye(spec.N)))
            if not sound:
                bad.append((spec.label(), trial))
    elapsed = time.perf_counter() - t0
    record(7, not bad and instances > 0,
           f"{elapsed:.1f}s; {used} specs, {instances} instances, worst residual {worst:.1e}, failures {bad[:3]}")


def test_criterion_8_property_suites():
    here = Path(__file__).parent
    code = pytest.main(["-q", "-p", "no:cacheprovider", str(here / "test_properties.py")])
    record(8, code == 0, f"property suite exit code {int(code)}; non-closed rank sets are flagged by errata_report")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for test in tests:
        try:
            test()
        except AssertionError:
            pass
    for k in sorted(conftest.ACCEPTANCE):
        ok, detail = conftest.ACCEPTANCE[k]
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(0 if all(ok for ok, _ in conftest.ACCEPTANCE.values()) else 1)
