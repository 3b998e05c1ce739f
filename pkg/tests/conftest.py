import itertools

import pytest
from hypothesis import settings

from presymplectic.jordan import make_spec

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def real_corpus(max_size: int = 3, eigs=(-1, 0, 1), max_n: int = 6):
    """All real-only specs with the given block sizes and eigenvalues, up to reordering."""
    blocks = [(n, e) for n in range(1, max_size + 1) for e in eigs]
    seen, out = set(), []
    for r in range(1, max_n + 1):
        for combo in itertools.combinations_with_replacement(blocks, r):
            if sum(n for n, _ in combo) > max_n:
                continue
            try:
                spec = make_spec(real=list(combo))
            except ValueError:
                continue  # abelian
            if spec not in seen:
                seen.add(spec)
                out.append(spec)
    return out


COMPLEX_SPECS = [
    make_spec(complex_=[(1, 0, 1), (1, 0, 1)]),
    make_spec(complex_=[(2, 0, 1)]),
    make_spec(complex_=[(2, 0, 1), (2, 0, 1)]),
    make_spec(complex_=[(4, 0, 1)]),
    make_spec(complex_=[(3, 0, 1), (1, 0, 1)]),
    make_spec(complex_=[(1, 1, 1), (1, -1, 1)]),
    make_spec(complex_=[(2, 1, 1), (2, -1, 1)]),
    make_spec(real=[(2, 0), (1, 1)], complex_=[(2, 0, 2)]),
    make_spec(real=[(3, 1), (2, -1)], complex_=[(1, 0, 1), (1, 0, 1)]),
]


@pytest.fixture(scope="session")
def corpus():
    return real_corpus()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40)
settings.load_profile("repo")
