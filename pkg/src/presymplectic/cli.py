"""Command-line interface: ``presymplectic VERB SPEC [FORM] [options]``.

Spec files may list blocks in any order.  Forms read and written by the CLI
use the coordinates of that listing; reductions report permutations in the
canonical block order and include the coordinate map between the two.

Exit codes: 0 success, 1 unreadable or malformed input, 2 mathematical
rejection (nonexistent rank, form not closed, reduction hypotheses fail).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .constructor import check_closed, construct_max, lift, lower_rank
from .jordan import JordanSpec, SpecFormatError, coordinate_permutation, parse_spec
from .linalg import DEFAULT_TOL, Permutation, RationalMatrix, rank
from .oracle import errata_report
from .ranks import exists_presymplectic, max_rank, max_rank_complex, max_rank_real, symplectic_admissible
from .reducer import moduli_class, reduce_to_canonical
from .structured import StructuredSolution


class Rejected(Exception):
    """A well-formed request with no mathematical answer."""


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise click.FileError(path, hint=exc.strerror) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.FileError(path, hint=f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _load_spec(path: str) -> JordanSpec:
    try:
        return parse_spec(_load_json(path))
    except SpecFormatError as exc:
        raise click.FileError(path, hint=str(exc)) from exc
    except ValueError as exc:
        raise Rejected(f"{path}: {exc}") from exc


def _full_perm(spec: JordanSpec) -> Permutation:
    q = coordinate_permutation(spec)
    return Permutation((0,) + tuple(i + 1 for i in q.images))


def _to_user(m: RationalMatrix, spec: JordanSpec) -> RationalMatrix:
    q = (_full_perm(spec) if m.rows == spec.D else coordinate_permutation(spec)).matrix()
    return q @ m @ q.T


def _to_canonical(m: RationalMatrix, spec: JordanSpec) -> RationalMatrix:
    q = (_full_perm(spec) if m.rows == spec.D else coordinate_permutation(spec)).matrix()
    return q.T @ m @ q


def _load_form(path: str, spec: JordanSpec) -> RationalMatrix:
    doc = _load_json(path)
    try:
        m = RationalMatrix.from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise click.FileError(path, hint=f"not a matrix document: {exc}") from exc
    if m.shape not in ((spec.D, spec.D), (spec.N, spec.N)):
        raise Rejected(f"{path}: a {m.rows}x{m.cols} matrix does not fit dimension {spec.D}")
    if "spec_hash" in doc and m.rows == spec.D and doc["spec_hash"] != spec.spec_hash():
        raise Rejected(f"{path}: form was written for a different spec")
    return _to_canonical(m, spec)


def _emit(doc, fmt: str, pretty=None) -> None:
    if fmt == "pretty" and pretty is not None:
        click.echo(pretty(doc))
    else:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))


def _run(fn):
    try:
        fn()
    except Rejected as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except click.FileError as exc:
        click.echo(f"error: {exc.ui_filename}: {exc.message}", err=True)
        sys.exit(1)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


format_option = click.option("--format", "fmt", type=click.Choice(["json", "pretty"]), default="json",
                             show_default=True, help="Output style.")
tol_option = click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True,
                          help="Zero tolerance for floating-point stages.")
seed_option = click.option("--seed", type=int, default=0, show_default=True)
trials_option = click.option("--trials", type=int, default=25, show_default=True)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Closed 2-forms on almost abelian Lie algebras."""


def _analyze_doc(spec: JordanSpec, oracle: bool, trials: int, seed: int) -> dict:
    from .oracle import EXHAUSTIVE_GUARD, solution_ranks

    rows = []
    ranks = solution_ranks(spec, trials, seed) if oracle and spec.N <= EXHAUSTIVE_GUARD else None
    for r in range(0, spec.D + 1, 2):
        row = {"rank": r, "formula": exists_presymplectic(spec, r)}
        if oracle:
            if ranks is None:
                row["oracle"] = exists_presymplectic(spec, r, backend="oracle")
            elif r == 0:
                row["oracle"] = True
            elif r == spec.D:
                row["oracle"] = spec.D - 2 in ranks
            else:
                row["oracle"] = r in ranks or r - 2 in ranks
        rows.append(row)
    doc = {
        "spec": spec.to_json(),
        "label": spec.label(),
        "N": spec.N,
        "D": spec.D,
        "max_rank_real": max_rank_real(spec),
        "max_rank_complex": max_rank_complex(spec),
        "max_rank": max_rank(spec),
        "ranks": rows,
        "symplectic": None,
    }
    if spec.D % 2 == 0:
        v = symplectic_admissible(spec)
        doc["symplectic"] = {"admissible": v.admissible, "clause": v.clause, "detail": v.detail}
    return doc


def _analyze_pretty(doc: dict) -> str:
    lines = [
        f"spec      {doc['label']}",
        f"N = {doc['N']}, D = {doc['D']}",
        f"max rank  real {doc['max_rank_real']}, complex {doc['max_rank_complex']}, total {doc['max_rank']}",
        "",
        "rank  formula" + ("  oracle" if doc["ranks"] and "oracle" in doc["ranks"][0] else ""),
    ]
    for row in doc["ranks"]:
        line = f"{row['rank']:>4}  {'yes' if row['formula'] else 'no':>7}"
        if "oracle" in row:
            line += f"  {'yes' if row['oracle'] else 'no':>6}"
        lines.append(line)
    sym = doc["symplectic"]
    lines.append("")
    if sym is None:
        lines.append("symplectic: no (odd dimension)")
    else:
        verdict = "yes" if sym["admissible"] else "no"
        lines.append(f"symplectic: {verdict} [{sym['clause']}] {sym['detail']}")
    return "\n".join(lines)


@main.command()
@click.argument("spec_path")
@click.option("--oracle", is_flag=True, help="Add the brute-force oracle column.")
@trials_option
@seed_option
@format_option
def analyze(spec_path, oracle, trials, seed, fmt):
    """Dimensions, rank bounds and the existence table for every even rank."""
    def go():
        spec = _load_spec(spec_path)
        _emit(_analyze_doc(spec, oracle, trials, seed), fmt, _analyze_pretty)
    _run(go)


def build_form(spec: JordanSpec, R: int, seed: int):
    """A closed form of rank ``R``: lowered maximal solution, bordered by a vector."""
    if R % 2 or R < 0:
        raise Rejected(f"rank must be a nonnegative even integer, got {R}")
    if R > spec.D:
        raise Rejected(f"rank exceeds dimension: {R} > {spec.D}")
    if not exists_presymplectic(spec, R):
        raise Rejected(f"no closed 2-form of rank {R} exists for {spec.label()}")
    top = construct_max(spec)
    errors = []
    for k, extend in ((R, False), (R - 2, True)):
        if k < 0 or k > top.rank or (extend and k >= spec.N):
            continue
        try:
            sol = lower_rank(top, k, spec) if k < top.rank else top
            return lift(sol, R, spec, seed)
        except ValueError as exc:
            errors.append(str(exc))
    raise Rejected(f"no construction reaches rank {R}: " + "; ".join(errors))


@main.command()
@click.argument("spec_path")
@click.option("--rank", "R", type=int, required=True, help="Rank of the 2-form.")
@seed_option
@format_option
def construct(spec_path, R, seed, fmt):
    """Write a closed 2-form of the requested rank as matrix JSON."""
    def go():
        spec = _load_spec(spec_path)
        form = build_form(spec, R, seed)
        doc = form.to_json()
        doc.update(_to_user(form.matrix, spec).to_json())
        doc["v_in_image"] = form.v_in_image
        _emit(doc, fmt)
    _run(go)


@main.command()
@click.argument("spec_path")
@click.argument("form_path")
@format_option
def check(spec_path, form_path, fmt):
    """Verify that a form is skew and closed; exit 2 when it is not."""
    def go():
        spec = _load_spec(spec_path)
        m = _load_form(form_path, spec)
        if m.rows != spec.D:
            raise Rejected(f"expected a {spec.D}x{spec.D} form")
        try:
            result = check_closed(m, spec)
        except ValueError as exc:
            raise Rejected(str(exc)) from exc
        doc = {
            "closed": result.closed,
            "dim": spec.D,
            "rank": rank(m),
            "triple_residual": str(result.triple_residual),
            "minor_residual": result.residual.to_json(),
        }
        _emit(doc, fmt, lambda d: f"closed: {d['closed']}\nrank:   {d['rank']} of {d['dim']}")
        if not result.closed:
            sys.exit(2)
    _run(go)


@main.command()
@click.argument("spec_path")
@click.argument("form_path")
@tol_option
@format_option
def reduce(spec_path, form_path, tol, fmt):
    """Reduce a maximal-rank form (or its minor) to its permutation normal form."""
    def go():
        spec = _load_spec(spec_path)
        m = _load_form(form_path, spec)
        doc = {"coordinate_permutation": list(coordinate_permutation(spec).images)}
        if m.rows == spec.D and spec.D % 2 == 0 and rank(m) == spec.D:
            cls = moduli_class(m, spec, tol)
            doc["moduli"] = list(cls.permutation.images)
            result, trace = cls.result, cls.trace
        else:
            minor = m.submatrix(range(1, spec.N + 1), range(1, spec.N + 1)) if m.rows == spec.D else m
            result, trace = reduce_to_canonical(StructuredSolution.of(minor, spec), spec, tol)
        doc.update({"result": result.to_json(), "trace": trace.to_json(), "residual": result.residual})
        _emit(doc, fmt, lambda d: (
            f"permutation: {d['result']['permutation']}\nrank: {d['result']['rank']}\n"
            f"residual: {d['residual']:.3e}\nsteps: {len(d['trace']['steps'])}"))
    _run(go)


@main.command()
@click.argument("spec_path")
@click.argument("form_path")
@tol_option
@format_option
def moduli(spec_path, form_path, tol, fmt):
    """Permutation class of a symplectic form."""
    def go():
        spec = _load_spec(spec_path)
        m = _load_form(form_path, spec)
        if m.rows != spec.D:
            raise Rejected(f"expected a {spec.D}x{spec.D} form")
        cls = moduli_class(m, spec, tol)
        doc = cls.to_json()
        doc["coordinate_permutation"] = list(coordinate_permutation(spec).images)
        _emit(doc, fmt, lambda d: f"class: {d['permutation']}")
    _run(go)


@main.command()
@click.argument("spec_paths", nargs=-1, required=True)
@trials_option
@seed_option
@format_option
def oracle(spec_paths, trials, seed, fmt):
    """Compare the closed-form maximal rank with brute force on each spec."""
    def go():
        specs = [_load_spec(p) for p in spec_paths]
        reports = [r.to_json() | {"label": s.label()} for r, s in zip(errata_report(specs, trials, seed), specs)]

        def pretty(docs):
            out = []
            for d in docs:
                mark = "agree" if d["agreement"] else "MISMATCH"
                out.append(f"{d['label']:<24} formula {d['formula_rank']:>3}  oracle {d['generic_rank']:>3}  "
                           f"{mark}  ranks {d['achievable_ranks']}")
                out += [f"    {n}" for n in d["notes"]]
            return "\n".join(out)

        _emit(reports, fmt, pretty)
    _run(go)


if __name__ == "__main__":
    main()
