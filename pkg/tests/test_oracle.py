import pytest

from presymplectic.jordan import make_spec
from presymplectic.linalg import RationalMatrix, rank
from presymplectic.oracle import (
    DENSE_GUARD,
    achievable_ranks,
    achievable_witnesses,
    dense_solution_space,
    errata_report,
    generic_rank,
    random_member,
)
from presymplectic.structured import membership


def test_random_members_are_seeded_and_valid():
    spec = make_spec(real=[(3, 1), (2, -1)])
    a = random_member(spec, 0, 3)
    assert a == random_member(spec, 0, 3)
    assert membership(a, spec)


def test_generic_rank_examples():
    assert generic_rank(make_spec(real=[(3, 1), (2, -1)])) == 4
    assert generic_rank(make_spec(complex_=[(4, 0, 1)])) == 8
    assert generic_rank(make_spec(complex_=[(1, 0, 1)])) == 2


def test_generic_rank_is_stable_across_seeds():
    for spec in (make_spec(real=[(3, 0), (3, 0)]), make_spec(complex_=[(3, 0, 1)])):
        assert generic_rank(spec, 25, 0) == generic_rank(spec, 25, 1)


def test_achievable_ranks_and_witnesses():
    spec = make_spec(real=[(3, 1), (2, -1)])
    assert achievable_ranks(spec) == {0, 2, 4}
    for k, w in achievable_witnesses(spec).items():
        assert rank(w) == k and membership(w, spec)


def test_cross_pair_of_complex_blocks_skips_rank_two():
    spec = make_spec(complex_=[(1, 1, 1), (1, -1, 1)])
    assert achievable_ranks(spec) == {0, 4}


def test_guard():
    with pytest.raises(ValueError):
        dense_solution_space(make_spec(real=[(DENSE_GUARD + 1, 0)]))


def test_errata_report_flags_the_odd_imaginary_block():
    (rep,) = errata_report([make_spec(complex_=[(1, 0, 1)])])
    assert (rep.formula_rank, rep.generic_rank, rep.agreement) == (0, 2, False)
    assert rep.witness is not None and rank(rep.witness) == 2
    j2 = RationalMatrix([[0, 1], [-1, 0]])
    assert rep.witness.array[0, 1] != 0 and rep.witness == j2 * rep.witness.array[0, 1]
    doc = rep.to_json()
    assert doc["formula_rank"] == 0 and doc["notes"]


def test_errata_report_agreement_case():
    (rep,) = errata_report([make_spec(complex_=[(2, 0, 1)])])
    assert rep.agreement and rep.generic_rank == 4 and rep.downward_closed
