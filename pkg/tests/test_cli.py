import json

import pytest
from click.testing import CliRunner

from presymplectic.cli import main

FOURTEEN = {
    "real_blocks": [{"size": 3, "eig": "1"}, {"size": 2, "eig": "-1"}],
    "complex_blocks": [{"half_size": 4, "re": "0", "im": "1"}],
}


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(path)
    return write


def run(*args):
    return CliRunner().invoke(main, list(args))


def test_analyze_fourteen_dimensional_spec(files):
    res = run("analyze", files("s.json", FOURTEEN))
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert (doc["N"], doc["D"], doc["max_rank_real"], doc["max_rank_complex"]) == (13, 14, 4, 8)
    table = {row["rank"]: row["formula"] for row in doc["ranks"]}
    assert all(table[r] for r in (6, 8, 10, 12, 14))
    assert doc["symplectic"]["clause"] == "3b-ii"


def test_analyze_nilpotent_block_with_oracle(files):
    res = run("analyze", files("s.json", {"real_blocks": [{"size": 2, "eig": "0"}]}), "--oracle")
    doc = json.loads(res.output)
    assert doc["D"] == 3 and [r["rank"] for r in doc["ranks"]] == [0, 2]
    assert all(r["formula"] and r["oracle"] for r in doc["ranks"])
    assert doc["symplectic"] is None


def test_pretty_format(files):
    res = run("analyze", files("s.json", FOURTEEN), "--format", "pretty")
    assert res.exit_code == 0 and "symplectic: yes [3b-ii]" in res.output


def test_error_exit_codes(files):
    abelian = files("a.json", {"real_blocks": [{"size": 1, "eig": "0"}, {"size": 1, "eig": "0"}]})
    assert run("analyze", abelian).exit_code == 2
    assert run("analyze", files("bad.json", "{nope")).exit_code == 1
    assert run("analyze", "does-not-exist.json").exit_code == 1
    res = run("construct", files("s.json", FOURTEEN), "--rank", "16")
    assert res.exit_code == 2 and "rank exceeds dimension" in res.output


def test_construct_check_round_trip(files):
    spec = files("s.json", FOURTEEN)
    for r in (6, 10, 14):
        res = run("construct", spec, "--rank", str(r))
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["rank"] == r and doc["dim"] == 14
        checked = run("check", spec, files(f"f{r}.json", res.output))
        assert checked.exit_code == 0 and json.loads(checked.output)["closed"]


def test_construct_is_byte_identical(files):
    spec = files("s.json", FOURTEEN)
    assert run("construct", spec, "--rank", "12", "--seed", "4").output == \
        run("construct", spec, "--rank", "12", "--seed", "4").output


def test_check_rejects_open_forms(files):
    spec = files("s.json", {"real_blocks": [{"size": 2, "eig": "1"}]})
    form = {"rows": 3, "cols": 3, "entries": [[1, 2, "1"], [2, 1, "-1"]]}
    res = run("check", spec, files("f.json", form))
    assert res.exit_code == 2 and json.loads(res.output)["closed"] is False


def test_user_block_order_is_respected(files):
    spec = files("s.json", {"real_blocks": [{"size": 2, "eig": "-1"}, {"size": 3, "eig": "1"}]})
    res = run("construct", spec, "--rank", "6")
    assert run("check", spec, files("f.json", res.output)).exit_code == 0


def test_reduce_and_moduli(files):
    spec = files("s.json", FOURTEEN)
    form = files("f.json", run("construct", spec, "--rank", "14").output)
    res = run("reduce", spec, form)
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["residual"] < 1e-6 and doc["trace"]["steps"] is not None
    assert doc["result"]["rank"] == 12 and doc["moduli"][0] == 0
    mod = json.loads(run("moduli", spec, form).output)
    assert mod["permutation"] == doc["moduli"]
    assert run("reduce", spec, form).output == res.output


def test_reduce_rejects_low_rank(files):
    spec = files("s.json", FOURTEEN)
    form = files("f.json", run("construct", spec, "--rank", "6").output)
    res = run("reduce", spec, form)
    assert res.exit_code == 2 and "non-maximal" in res.output
    assert run("moduli", spec, form).exit_code == 2


def test_oracle_verb(files):
    s1 = files("c1.json", {"complex_blocks": [{"half_size": 1, "re": "0", "im": "1"}]})
    s2 = files("c2.json", {"complex_blocks": [{"half_size": 2, "re": "0", "im": "1"}]})
    res = run("oracle", s1, s2, "--trials", "10")
    assert res.exit_code == 0
    first, second = json.loads(res.output)
    assert (first["formula_rank"], first["generic_rank"], first["agreement"]) == (0, 2, False)
    assert second["agreement"]
