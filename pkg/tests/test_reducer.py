import json
import random

import numpy as np
import pytest

from presymplectic.constructor import apply_equivalence, construct_max, lift, random_commutant, random_equivalence
from presymplectic.jordan import canonical_two_form, make_spec, reversal_matrix
from presymplectic.linalg import FloatMatrix, Permutation, RationalMatrix
from presymplectic.reducer import (
    J2,
    ReductionError,
    commutant_defect,
    eliminate_row_col,
    extract_permutation,
    inv_sqrt_coeffs,
    moduli_class,
    normalize_pivot,
    reduce_to_canonical,
    toeplitz_inv_sqrt,
)
from presymplectic.structured import StructuredSolution, from_toeplitz_side

from conftest import COMPLEX_SPECS

REAL_EXAMPLE = make_spec(real=[(3, 1), (2, -1)])


def fm(a):
    return FloatMatrix(np.asarray(a, dtype=float))


class TestInverseSquareRoot:
    def test_identity(self):
        x, s = toeplitz_inv_sqrt(fm(np.eye(3)))
        assert s == 1 and np.allclose(x.entries, np.eye(3))

    def test_two_by_two(self):
        x, s = toeplitz_inv_sqrt(fm([[4, 1], [0, 4]]))
        assert s == 1 and np.allclose(x.entries, [[0.5, -1 / 16], [0, 0.5]])

    def test_rotation_cell(self):
        x, s = toeplitz_inv_sqrt(fm(J2))
        assert s == 1
        assert np.allclose(x.entries, np.sqrt(0.5) * np.array([[1, -1], [1, 1]]))
        assert np.allclose(x.entries @ J2 @ x.entries, np.eye(2))

    def test_negative_constant_flips_sign(self):
        t = np.array([[-2, 1, 3], [0, -2, 1], [0, 0, -2]], dtype=float)
        x, s = toeplitz_inv_sqrt(fm(t))
        assert s == -1
        assert np.allclose(x.entries @ (s * t) @ x.entries, np.eye(3))

    def test_zero_constant_is_rejected(self):
        with pytest.raises(ReductionError):
            toeplitz_inv_sqrt(fm([[0, 1], [0, 0]]))

    def test_series_for_complex_polynomials(self):
        g = np.array([1 + 2j, -0.5j, 3.0, 1j])
        f = inv_sqrt_coeffs(g)
        prod = np.convolve(np.convolve(f, f)[:4], g)[:4]
        assert np.allclose(prod, [1, 0, 0, 0])


def test_normalize_pivot_scales_a_single_pair():
    spec = make_spec(real=[(1, 1), (1, -1)])
    out, step = normalize_pivot(fm([[0, 5], [-5, 0]]), spec, 0, 1, 1)
    assert np.allclose(out.entries, [[0, 1], [-1, 0]])
    assert np.allclose(step.transform.entries, np.eye(2) / np.sqrt(5))
    assert step.t == 1 and step.tag == "step1"


def test_normalize_pivot_on_a_normalized_pivot_is_trivial():
    c = fm(construct_max(REAL_EXAMPLE).toeplitz.to_float())
    out, step = normalize_pivot(c, REAL_EXAMPLE, 0, 1, 1)
    assert np.allclose(step.transform.entries, np.eye(5))
    assert np.allclose(out.entries, c.entries)


def test_normalize_pivot_needs_a_nonzero_diagonal():
    c = fm(construct_max(REAL_EXAMPLE).toeplitz.to_float())
    with pytest.raises(ReductionError):
        normalize_pivot(c, REAL_EXAMPLE, 0, 1, 2)


def test_eliminate_row_col_on_a_scrambled_pair_of_nilpotent_blocks():
    spec = make_spec(real=[(2, 0), (2, 0)])
    b = construct_max(spec).matrix
    s = random_commutant(spec, random.Random(5))
    c = reversal_matrix(spec) @ (s.T @ b @ s)
    out, trace = eliminate_row_col(fm(c.to_float()), spec, 0, 0, 1)
    a = out.entries
    assert np.allclose(a[0:2, 2:4], 0) and np.allclose(a[2:4, 0:2], 0)
    assert trace.residual < 1e-9
    assert {st.tag for st in trace.steps} <= {"step1", "firstlemma"}


def test_eliminate_row_col_off_diagonal_pivot():
    spec = make_spec(real=[(3, 0), (3, 0)])
    b = construct_max(spec).matrix
    s = random_commutant(spec, random.Random(2))
    c = reversal_matrix(spec) @ (s.T @ b @ s)
    out, trace = eliminate_row_col(fm(c.to_float()), spec, 0, 1, 1)
    a = out.entries
    assert np.allclose(a[0:3, 0:3], 0, atol=1e-9) and np.allclose(a[3:6, 3:6], 0, atol=1e-9)
    assert any(st.tag == "secondlemma" for st in trace.steps)


def test_eliminate_row_col_rejects_missing_pivot():
    spec = make_spec(real=[(2, 0), (2, 0)])
    with pytest.raises(ReductionError, match="hypotheses"):
        eliminate_row_col(fm(np.zeros((4, 4))), spec, 0, 1, 1)


class TestExtractPermutation:
    def test_standard_form(self):
        assert extract_permutation(RationalMatrix([[0, 1], [-1, 0]])) == (Permutation((0, 1)), 2)

    def test_sign_flip_is_a_transposition(self):
        assert extract_permutation(RationalMatrix([[0, -1], [1, 0]])) == (Permutation((1, 0)), 2)

    def test_five_by_five(self):
        a = RationalMatrix.from_entries(5, 5, [(0, 1, 1), (1, 0, -1), (3, 4, -1), (4, 3, 1)])
        p, k = extract_permutation(a)
        assert k == 4
        assert p.matrix().T @ canonical_two_form(5, 4) @ p.matrix() == a
        assert p.images == (0, 2, 4, 3, 1)

    def test_errors(self):
        with pytest.raises(ValueError):
            extract_permutation(RationalMatrix([[0, 2], [-2, 0]]))
        with pytest.raises(ValueError):
            extract_permutation(RationalMatrix.from_entries(3, 3, [(0, 1, 1), (1, 0, -1), (0, 2, 1), (2, 0, -1)]))


def test_printed_real_example_reduces_to_itself():
    a1 = RationalMatrix([[0, 0, 0, 1, 0], [0, 0, 0, 0, -1], [0, 0, 0, 0, 0],
                         [0, 1, 0, 0, 0], [0, 0, -1, 0, 0]])
    sol = StructuredSolution.of(from_toeplitz_side(a1, REAL_EXAMPLE), REAL_EXAMPLE)
    result, trace = reduce_to_canonical(sol, REAL_EXAMPLE)
    assert result.canonical_matrix == a1
    assert result.rank == 4 and result.residual < 1e-12
    p = result.permutation.matrix()
    assert result.canonical_matrix == reversal_matrix(REAL_EXAMPLE) @ p.T @ canonical_two_form(5, 4) @ p
    assert np.allclose(trace.accumulated_S.entries, np.eye(5))


def test_non_maximal_input_is_rejected():
    sol = StructuredSolution.of(RationalMatrix.zeros(5), REAL_EXAMPLE)
    with pytest.raises(ReductionError, match="non-maximal-rank"):
        reduce_to_canonical(sol, REAL_EXAMPLE)


SCRAMBLE_SPECS = [
    REAL_EXAMPLE,
    make_spec(real=[(2, 0), (2, 0)]),
    make_spec(real=[(3, 0), (3, 0)]),
    make_spec(real=[(3, 0)]),
    make_spec(real=[(2, 0), (1, 0), (1, 0), (1, 0)]),
    make_spec(real=[(3, 1), (2, 1), (2, -1), (2, -1)]),
] + COMPLEX_SPECS


@pytest.mark.parametrize("spec", SCRAMBLE_SPECS, ids=lambda s: s.label())
def test_scrambles_reduce_to_one_class(spec):
    sol = construct_max(spec)
    if sol.rank < spec.N - spec.n_real % 2:
        pytest.skip("no maximal-rank solution in the reducible regime")
    forms = set()
    for seed in range(10):
        s = random_commutant(spec, random.Random(seed))
        result, trace = reduce_to_canonical(StructuredSolution.of(s.T @ sol.matrix @ s, spec), spec)
        assert result.residual < 1e-6
        assert commutant_defect(trace, spec) < 1e-8
        forms.add(result.b_form)
    assert len(forms) == 1


def test_trace_json_uses_full_precision():
    spec = make_spec(real=[(2, 0), (2, 0)])
    b = construct_max(spec).matrix
    s = random_commutant(spec, random.Random(1))
    _, trace = reduce_to_canonical(StructuredSolution.of(s.T @ b @ s, spec), spec)
    doc = trace.to_json()
    assert doc["steps"] and {"lemma", "pivot", "k", "t", "transform"} <= set(doc["steps"][0])
    values = [e[2] for st in doc["steps"] for e in st["transform"]["entries"]]
    assert any(len(repr(v)) > 10 for v in values)
    json.dumps(doc)


class TestModuli:
    def test_scrambles_give_one_class(self):
        form = lift(construct_max(REAL_EXAMPLE), 6, REAL_EXAMPLE)
        base = moduli_class(form, REAL_EXAMPLE)
        rng = random.Random(0)
        for _ in range(5):
            eq = random_equivalence(REAL_EXAMPLE, rng)
            assert moduli_class(apply_equivalence(form.matrix, eq), REAL_EXAMPLE) == base
        assert base.permutation.images[0] == 0

    def test_standard_form_is_the_identity_class(self):
        spec = make_spec(real=[(1, 1), (1, 1), (1, -1), (1, -1), (1, -1)])
        cls = moduli_class(canonical_two_form(6, 6), spec)
        assert cls.permutation == Permutation.identity(6)

    def test_rejects_degenerate_forms(self):
        form = lift(construct_max(REAL_EXAMPLE), 4, REAL_EXAMPLE)
        with pytest.raises(ReductionError, match="not symplectic"):
            moduli_class(form, REAL_EXAMPLE)
        with pytest.raises(ReductionError, match="odd dimension"):
            moduli_class(RationalMatrix.zeros(3), make_spec(real=[(2, 0)]))
