"""Manifest-driven command line front end.

A manifest is a single JSON document describing one chart and named objects
over it; all mathematical values are strings in the expression grammar
(floats appear only inside flow configs).  Index keys are 0-based, bivector
and form coefficient tables are keyed "i,j" with i < j.

    {
      "chart": ["x", "y", "z"],
      "expressions":  {"f": "x^2+y^2+z^2"},
      "bivectors":    {"pi": {"0,1": "z", "1,2": "x", "0,2": "-y"}},
      "forms":        {"B": {"0,1": "1"}},
      "lie_algebras": {"so3": {"dim": 3, "constants": [[0,1,2,"1"], ...]}},
      "constraints":  {"n": {"bivector": "pi", "psi": ["x"], "level": ["1"],
                             "samples": [["1","0","0"]]}},
      "flow":         {"dt": 1e-3, "t_max": 10.0, "tol": 1e-6},
      "tasks":        [{"task": "is_poisson", "bivector": "pi"}, ...]
    }

Reports are deterministic line streams prefixed PASS/FAIL/INFO; exit status
is 0 iff no FAIL line was produced.  ``--json`` emits a structured dump
instead.  ``--parallel`` runs independent tasks on a thread pool with
deterministic, input-ordered output.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import dirac, fixtures, flow, liealg, poisson
from .expr import Chart, ExprError, Fraction as Rational, RatFunc, chart as make_chart, parse_expr
from .multivec import DiffForm, MultiVec


class ManifestError(ExprError):
    pass


@dataclass
class Manifest:
    chart: Chart
    expressions: dict
    bivectors: dict
    forms: dict
    lie_algebras: dict
    constraints: dict
    flow_config: flow.FlowConfig
    tasks: list
    raw: dict


def _parse_fraction(text) -> Fraction:
    return Fraction(str(text))


def _parse_point(spec, chart: Chart):
    if isinstance(spec, str):
        parts = [p.strip() for p in spec.split(",")]
    else:
        parts = list(spec)
    if len(parts) != chart.dim:
        raise ManifestError(f"point {spec!r} has wrong dimension for {chart}")
    return [_parse_fraction(p) for p in parts]


def _parse_table(table, chart: Chart, degree: int):
    coeffs = {}
    for key, text in table.items():
        idx = tuple(int(p) for p in str(key).split(","))
        if len(idx) != degree:
            raise ManifestError(f"key {key!r} is not a degree-{degree} index tuple")
        coeffs[idx] = parse_expr(str(text), chart)
    return coeffs


def load_manifest(doc: dict) -> Manifest:
    try:
        chart = make_chart(*doc["chart"])
    except KeyError:
        raise ManifestError("manifest needs a 'chart' entry")
    expressions = {
        name: parse_expr(text, chart)
        for name, text in doc.get("expressions", {}).items()
    }
    bivectors = {}
    for name, table in doc.get("bivectors", {}).items():
        bivectors[name] = MultiVec(chart, 2, _parse_table(table, chart, 2))
    forms = {}
    for name, table in doc.get("forms", {}).items():
        forms[name] = DiffForm(chart, 2, _parse_table(table, chart, 2))
    algebras = {}
    for name, spec in doc.get("lie_algebras", {}).items():
        triples = [
            (int(i), int(j), int(k), _parse_fraction(v))
            for i, j, k, v in spec["constants"]
        ]
        algebras[name] = liealg.lie_from_constants(int(spec["dim"]), triples)
    constraints = {}
    for name, spec in doc.get("constraints", {}).items():
        pi_name = spec["bivector"]
        if pi_name not in bivectors:
            raise ManifestError(f"constraint system {name!r} references unknown bivector {pi_name!r}")
        structure = poisson.verify(bivectors[pi_name])
        psi = [parse_expr(t, chart) for t in spec["psi"]]
        level = [_parse_fraction(v) for v in spec["level"]]
        samples = [_parse_point(p, chart) for p in spec.get("samples", [])]
        constraints[name] = dirac.ConstraintSystem(structure, psi, level, samples)
    fc = doc.get("flow", {})
    flow_config = flow.FlowConfig(
        dt=float(fc.get("dt", 1e-3)),
        t_max=float(fc.get("t_max", 10.0)),
        tol=float(fc.get("tol", 1e-6)),
    )
    return Manifest(
        chart,
        expressions,
        bivectors,
        forms,
        algebras,
        constraints,
        flow_config,
        list(doc.get("tasks", [])),
        doc,
    )


# -- task registry --------------------------------------------------------------


@dataclass
class TaskResult:
    name: str
    passed: bool | None          # None for purely informational tasks
    lines: list = field(default_factory=list)
    data: dict = field(default_factory=dict)


def _get_expr(manifest: Manifest, params: dict, key: str) -> RatFunc:
    text = params.get(key)
    if text is None:
        raise ManifestError(f"task needs parameter {key!r}")
    if text in manifest.expressions:
        return manifest.expressions[text]
    return parse_expr(str(text), manifest.chart)


def _get_bivector(manifest: Manifest, params: dict) -> MultiVec:
    name = params.get("bivector")
    if name is None:
        if len(manifest.bivectors) == 1:
            return next(iter(manifest.bivectors.values()))
        raise ManifestError("task needs a 'bivector' parameter")
    if name not in manifest.bivectors:
        raise ManifestError(f"unknown bivector {name!r}")
    return manifest.bivectors[name]


def _task_is_poisson(manifest, params):
    pi = _get_bivector(manifest, params)
    ok, square = poisson.is_poisson(pi)
    if ok:
        return TaskResult("is_poisson", True, ["PASS is_poisson [pi,pi]=0"],
                          {"verified": True})
    return TaskResult(
        "is_poisson", False,
        [f"FAIL is_poisson [pi,pi] = {square}"],
        {"verified": False, "schouten_square": str(square)},
    )


def _task_casimir(manifest, params):
    pi = _get_bivector(manifest, params)
    f = _get_expr(manifest, params, "f")
    ok = poisson.casimir_check(poisson.verify(pi), f)
    line = "PASS casimir" if ok else f"FAIL casimir X_f = {poisson.hamiltonian_vf(pi, f)}"
    return TaskResult("casimir", ok, [line], {"casimir": ok, "f": str(f)})


def _task_bracket(manifest, params):
    pi = _get_bivector(manifest, params)
    f = _get_expr(manifest, params, "f")
    g = _get_expr(manifest, params, "g")
    value = poisson.bracket(pi, f, g)
    return TaskResult("bracket", None, [f"INFO bracket {{f,g}} = {value}"],
                      {"bracket": str(value)})


def _task_hamiltonian_vf(manifest, params):
    pi = _get_bivector(manifest, params)
    f = _get_expr(manifest, params, "f")
    xf = poisson.hamiltonian_vf(pi, f)
    return TaskResult("hamiltonian_vf", None, [f"INFO hamiltonian_vf X_f = {xf}"],
                      {"hamiltonian_vf": str(xf)})


def _task_rank(manifest, params):
    pi = _get_bivector(manifest, params)
    point = _parse_point(params.get("point"), manifest.chart)
    r = poisson.rank_at(pi, point)
    return TaskResult("rank", None, [f"INFO rank {r}"], {"rank": r})


def _task_modular(manifest, params):
    pi = _get_bivector(manifest, params)
    chart = manifest.chart
    volume = DiffForm(chart, chart.dim,
                      {tuple(range(chart.dim)): RatFunc.const(chart, 1)})
    mv = poisson.modular_vf(poisson.verify(pi), volume)
    expect = params.get("expect")
    if expect is None:
        return TaskResult("modular", None, [f"INFO modular {mv}"], {"modular": str(mv)})
    ok = str(mv) == expect
    line = "PASS modular" if ok else f"FAIL modular {mv} != {expect}"
    return TaskResult("modular", ok, [line], {"modular": str(mv)})


def _task_cohomology(manifest, params):
    pi = _get_bivector(manifest, params)
    ps = poisson.require_poisson(pi)
    k = int(params.get("k", 0))
    d_max = int(params.get("d_max", params.get("d", 0)))
    total = 0
    lines = []
    reports = []
    for d in range(d_max + 1):
        rep = poisson.cohomology(ps, k, d)
        total += rep.dim_h
        reports.append(rep.serialize())
    lines.append(f"INFO cohomology H^{k} cumulative dim (d<= {d_max}) = {total}")
    expect = params.get("expect_dim")
    passed = None
    if expect is not None:
        passed = total == int(expect)
        lines.append("PASS cohomology" if passed else
                     f"FAIL cohomology dim {total} != {expect}")
    return TaskResult("cohomology", passed, lines,
                      {"dim": total, "reports": reports})


def _task_gauge(manifest, params):
    pi = _get_bivector(manifest, params)
    form_name = params.get("form")
    if form_name not in manifest.forms:
        raise ManifestError(f"unknown form {form_name!r}")
    result = poisson.gauge_transform(poisson.verify(pi), manifest.forms[form_name])
    ok = result.verified
    line = f"PASS gauge pi_B = {result.pi}" if ok else "FAIL gauge result not Poisson"
    return TaskResult("gauge", ok, [line], {"pi_B": str(result.pi)})


def _task_classify(manifest, params):
    name = params.get("constraints")
    if name not in manifest.constraints:
        raise ManifestError(f"unknown constraint system {name!r}")
    flags = dirac.classify_submanifold(manifest.constraints[name])
    line = (
        f"INFO classify poisson={flags.poisson} coisotropic={flags.coisotropic} "
        f"cosymplectic={flags.cosymplectic} ({flags.mode})"
    )
    return TaskResult("classify", None, [line], {
        "poisson": flags.poisson,
        "coisotropic": flags.coisotropic,
        "cosymplectic": flags.cosymplectic,
        "mode": flags.mode,
    })


def _task_dirac_bracket(manifest, params):
    name = params.get("constraints")
    if name not in manifest.constraints:
        raise ManifestError(f"unknown constraint system {name!r}")
    cs = manifest.constraints[name]
    try:
        db, data = dirac.dirac_bracket(cs)
    except poisson.NotCosymplecticError as err:
        return TaskResult("dirac_bracket", False, [f"FAIL dirac_bracket {err}"], {})
    f = _get_expr(manifest, params, "f")
    g = _get_expr(manifest, params, "g")
    value = db(f, g)
    text = str(value) if isinstance(value, RatFunc) else str([str(v) for v in value])
    return TaskResult("dirac_bracket", None,
                      [f"INFO dirac_bracket {{f,g}}_N = {text}"],
                      {"value": text})


def _task_lie_poisson(manifest, params):
    name = params.get("algebra")
    if name not in manifest.lie_algebras:
        raise ManifestError(f"unknown Lie algebra {name!r}")
    g = manifest.lie_algebras[name]
    ps = liealg.lie_poisson(g, manifest.chart if manifest.chart.dim == g.dim else None)
    return TaskResult("lie_poisson", True,
                      [f"PASS lie_poisson pi = {ps.pi}"], {"pi": str(ps.pi)})


def _task_modular_character(manifest, params):
    name = params.get("algebra")
    if name not in manifest.lie_algebras:
        raise ManifestError(f"unknown Lie algebra {name!r}")
    chi = liealg.modular_character(manifest.lie_algebras[name])
    text = ", ".join(str(c) for c in chi)
    return TaskResult("modular_character", None,
                      [f"INFO modular_character ({text})"], {"chi": [str(c) for c in chi]})


def _task_flow(manifest, params):
    pi = _get_bivector(manifest, params)
    h = _get_expr(manifest, params, "h")
    x0 = [float(v) for v in _parse_point(params.get("x0"), manifest.chart)]
    casimirs = []
    for name in params.get("casimirs", []):
        casimirs.append(_get_expr(manifest, {"f": name}, "f"))
    traj = flow.integrate_hamiltonian(poisson.verify(pi), h, x0,
                                      manifest.flow_config, casimirs=casimirs)
    tol = manifest.flow_config.tol
    worst = max([traj.h_drift] + traj.casimir_drifts)
    ok = worst < tol
    line = (
        f"{'PASS' if ok else 'FAIL'} flow h_drift={traj.h_drift:.3e} "
        f"casimir_drifts={[f'{d:.3e}' for d in traj.casimir_drifts]}"
    )
    return TaskResult("flow", ok, [line],
                      {"h_drift": traj.h_drift, "casimir_drifts": traj.casimir_drifts})


TASKS = {
    "is_poisson": _task_is_poisson,
    "casimir": _task_casimir,
    "bracket": _task_bracket,
    "hamiltonian_vf": _task_hamiltonian_vf,
    "rank": _task_rank,
    "modular": _task_modular,
    "cohomology": _task_cohomology,
    "gauge": _task_gauge,
    "classify": _task_classify,
    "dirac_bracket": _task_dirac_bracket,
    "lie_poisson": _task_lie_poisson,
    "modular_character": _task_modular_character,
    "flow": _task_flow,
}


def run_tasks(manifest: Manifest, selected=None, extra_params=None, parallel=False):
    """Execute the manifest's tasks (optionally filtered/augmented); returns
    the ordered TaskResult list."""
    extra_params = extra_params or {}
    tasks = list(manifest.tasks)
    if selected:
        chosen = [t for t in tasks if t.get("task") in selected]
        for name in selected:
            if not any(t.get("task") == name for t in chosen):
                chosen.append({"task": name})
        tasks = chosen
    jobs = []
    for spec in tasks:
        name = spec.get("task")
        if name not in TASKS:
            raise ManifestError(f"unknown task {name!r}")
        params = dict(spec)
        params.update(extra_params)
        jobs.append((name, params))

    def execute(job):
        name, params = job
        try:
            return TASKS[name](manifest, params)
        except ExprError as err:
            return TaskResult(name, False, [f"FAIL {name} {err}"], {"error": str(err)})

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(job) for job in jobs]
    return results


# -- entry point -------------------------------------------------------------------


def _cmd_run(args) -> int:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    try:
        manifest = load_manifest(doc)
    except (ExprError, KeyError, ValueError) as err:
        print(f"FAIL manifest {err}")
        return 2
    extra = {}
    if args.f is not None:
        extra["f"] = args.f
    if args.point is not None:
        extra["point"] = args.point
    results = run_tasks(manifest, selected=args.task or None,
                        extra_params=extra, parallel=args.parallel)
    if args.json:
        dump = [
            {"task": r.name, "passed": r.passed, "lines": r.lines, "data": r.data}
            for r in results
        ]
        print(json.dumps(dump, indent=2, sort_keys=True))
    else:
        for r in results:
            for line in r.lines:
                print(line)
    return 1 if any(r.passed is False for r in results) else 0


def _cmd_list_fixtures(_args) -> int:
    for name in fixtures.list_fixtures():
        print(name)
    return 0


def _cmd_export_fixture(args) -> int:
    try:
        manifest = fixtures.fixture_manifest(args.name)
    except KeyError as err:
        print(err.args[0])
        return 2
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="poisskit",
        description="Exact Poisson-geometry computations driven by JSON manifests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run tasks from a manifest")
    run_p.add_argument("manifest")
    run_p.add_argument("--task", action="append", help="select/add a task by name")
    run_p.add_argument("--f", help="expression parameter for the selected task")
    run_p.add_argument("--point", help='point parameter, e.g. "1,0,0"')
    run_p.add_argument("--json", action="store_true", help="machine-readable output")
    run_p.add_argument("--parallel", action="store_true",
                       help="run independent tasks on a thread pool")
    run_p.set_defaults(fn=_cmd_run)

    list_p = sub.add_parser("list-fixtures", help="print the built-in fixture zoo")
    list_p.set_defaults(fn=_cmd_list_fixtures)

    exp_p = sub.add_parser("export-fixture", help="print a fixture manifest as JSON")
    exp_p.add_argument("name")
    exp_p.set_defaults(fn=_cmd_export_fixture)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
