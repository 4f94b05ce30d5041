"""Scenario-driven verification runs.

    formality run --scenario path.json [--suite NAME]... [--report out.json]
                  [--format text|json] [--seed N]
    formality fixtures list
    formality fixtures show NAME

Scenario files are JSON with rationals as "p/q" strings and polynomials as
{exponents, coeff} term lists; indices are 1-based in files and 0-based
internally.  Reports are deterministic: identical (scenario, seed) produce
byte-identical JSON (timings appear only in the text format).  The exit code
is 0 exactly when no check failed.  FORMALITY_WORKERS caps the suite worker
pool (default 1); merging is ordered, so workers never affect output.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .graded import InputError, TruncationContext
from .suites import Report, SuiteContext, SUITES
from . import suites_fedosov

SUITE_ORDER = ["core", "linfty", "mc", "convolution", "fedosov", "theorem"]
ALL_SUITES = dict(SUITES)
ALL_SUITES["fedosov"] = suites_fedosov.suite_fedosov
ALL_SUITES["theorem"] = suites_fedosov.suite_theorem


@dataclass
class Scenario:
    name: str
    dimension: int
    caps: dict
    christoffel: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    christoffel_prime: dict = field(default_factory=dict)
    r_prime: dict = field(default_factory=dict)
    poisson: dict = field(default_factory=dict)
    homotopy_arity: int = 2
    suites: tuple = ()
    seed: int = 0
    corrupt_bracket: bool = False

    @property
    def x_degree(self):
        return self.caps.get("x_degree", 2)

    @property
    def operator_order(self):
        return self.caps.get("operator_order", 2)

    @property
    def y_degree(self):
        return self.caps.get("y_degree", 3)


class ScenarioError(ValueError):
    pass


def _rat(value, where):
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"bad rational {value!r} in {where}: {exc}") from exc


def _poly(entries, where, nvars):
    out = {}
    for entry in entries:
        exps = tuple(int(e) for e in entry["exponents"])
        if len(exps) != nvars or any(e < 0 for e in exps):
            raise ScenarioError(f"bad exponents {exps} in {where}")
        out[exps] = out.get(exps, Fraction(0)) + _rat(entry["coeff"], where)
    return {k: v for k, v in out.items() if v}


def _christoffel(entries, d, where):
    table = {}
    for entry in entries:
        k, i, j = int(entry["k"]) - 1, int(entry["i"]) - 1, int(entry["j"]) - 1
        if not all(0 <= t < d for t in (k, i, j)):
            raise ScenarioError(f"index out of range in {where}: {entry}")
        exps = tuple(int(e) for e in entry["exponents"])
        coeff = _rat(entry["coeff"], where)
        table.setdefault((k, i, j), {})
        table[(k, i, j)][exps] = table[(k, i, j)].get(exps, Fraction(0)) + coeff
    return table


def _r_terms(entries, d, where):
    out = {}
    for entry in entries:
        k = int(entry["k"]) - 1
        exps = tuple(int(e) for e in entry["exponents"])
        if not 0 <= k < d or len(exps) != d:
            raise ScenarioError(f"bad fiber term in {where}: {entry}")
        out[(exps, k)] = out.get((exps, k), Fraction(0)) + _rat(entry["coeff"], where)
    return out


def _bivector(entries, d, where):
    out = {}
    for entry in entries:
        i, j = int(entry["i"]) - 1, int(entry["j"]) - 1
        if not (0 <= i < j < d):
            raise ScenarioError(f"bivector needs i < j in {where}: {entry}")
        exps = tuple(int(e) for e in entry["exponents"])
        out.setdefault((i, j), {})
        out[(i, j)][exps] = out[(i, j)].get(exps, Fraction(0)) + \
            _rat(entry["coeff"], where)
    return out


def scenario_from_dict(data: dict) -> Scenario:
    try:
        dimension = int(data["dimension"])
        caps = {k: int(v) for k, v in data["caps"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad dimension/caps: {exc}") from exc
    try:
        TruncationContext(caps["filtration"], caps["arity"], caps["t_degree"])
    except (KeyError, InputError) as exc:
        raise ScenarioError(f"cap invariants violated: {exc}") from exc
    conn = data.get("connection", {})
    conn_p = data.get("connection_prime", {})
    suites = tuple(data.get("suites", SUITE_ORDER))
    unknown = [s for s in suites if s not in ALL_SUITES]
    if unknown:
        raise ScenarioError(f"unknown suites: {unknown}")
    return Scenario(
        name=str(data.get("name", "scenario")),
        dimension=dimension,
        caps=caps,
        christoffel=_christoffel(conn.get("christoffel", []), dimension,
                                 "connection"),
        r=_r_terms(conn.get("r", []), dimension, "connection.r"),
        christoffel_prime=_christoffel(conn_p.get("christoffel", []), dimension,
                                       "connection_prime"),
        r_prime=_r_terms(conn_p.get("r", []), dimension, "connection_prime.r"),
        poisson=_bivector(data.get("poisson", []), dimension, "poisson"),
        homotopy_arity=int(data.get("homotopy_arity", 2)),
        suites=suites,
        seed=int(data.get("seed", 0)),
        corrupt_bracket=bool(data.get("debug", {}).get("corrupt_bracket", False)),
    )


def parse_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    return scenario_from_dict(data)


def scenario_to_dict(s: Scenario) -> dict:
    def poly_entries(poly):
        return [{"exponents": list(xe), "coeff": str(c)}
                for xe, c in sorted(poly.items())]

    def christoffel_entries(table):
        out = []
        for (k, i, j), poly in sorted(table.items()):
            for xe, c in sorted(poly.items()):
                out.append({"k": k + 1, "i": i + 1, "j": j + 1,
                            "exponents": list(xe), "coeff": str(c)})
        return out

    def r_entries(terms):
        return [{"k": k + 1, "exponents": list(ye), "coeff": str(c)}
                for (ye, k), c in sorted(terms.items())]

    def bivector_entries(table):
        out = []
        for (i, j), poly in sorted(table.items()):
            for xe, c in sorted(poly.items()):
                out.append({"i": i + 1, "j": j + 1,
                            "exponents": list(xe), "coeff": str(c)})
        return out

    return {
        "name": s.name,
        "dimension": s.dimension,
        "caps": dict(sorted(s.caps.items())),
        "connection": {"christoffel": christoffel_entries(s.christoffel),
                       "r": r_entries(s.r)},
        "connection_prime": {
            "christoffel": christoffel_entries(s.christoffel_prime),
            "r": r_entries(s.r_prime)},
        "poisson": bivector_entries(s.poisson),
        "homotopy_arity": s.homotopy_arity,
        "suites": list(s.suites),
        "seed": s.seed,
        "debug": {"corrupt_bracket": s.corrupt_bracket},
    }


BUILTIN_SCENARIOS = {
    "reference": {
        "name": "reference",
        "dimension": 2,
        "caps": {"filtration": 3, "arity": 4, "t_degree": 4, "y_degree": 3,
                 "x_degree": 2, "operator_order": 2, "hbar_order": 1},
        "connection": {"christoffel": [], "r": []},
        "connection_prime": {
            "christoffel": [{"k": 1, "i": 2, "j": 2,
                             "exponents": [1, 0], "coeff": "1"}],
            "r": [{"k": 2, "exponents": [2, 0], "coeff": "1"}]},
        "poisson": [{"i": 1, "j": 2, "exponents": [0, 0], "coeff": "1"}],
        "homotopy_arity": 2,
        "suites": SUITE_ORDER,
        "seed": 0,
    },
    "flat-d1": {
        "name": "flat-d1",
        "dimension": 1,
        "caps": {"filtration": 3, "arity": 4, "t_degree": 4, "y_degree": 3,
                 "x_degree": 2, "operator_order": 2, "hbar_order": 1},
        "connection": {"christoffel": [], "r": []},
        "connection_prime": {
            "christoffel": [{"k": 1, "i": 1, "j": 1,
                             "exponents": [0], "coeff": "1"}],
            "r": []},
        "poisson": [],
        "homotopy_arity": 2,
        "suites": SUITE_ORDER,
        "seed": 0,
    },
    "fixa": {
        "name": "fixa",
        "dimension": 1,
        "caps": {"filtration": 3, "arity": 4, "t_degree": 4, "y_degree": 3,
                 "x_degree": 2, "operator_order": 2, "hbar_order": 1},
        "connection": {"christoffel": [], "r": []},
        "connection_prime": {"christoffel": [], "r": []},
        "poisson": [],
        "homotopy_arity": 2,
        "suites": ["core", "linfty", "mc", "convolution"],
        "seed": 0,
    },
    "corrupt-bracket": {
        "name": "corrupt-bracket",
        "dimension": 1,
        "caps": {"filtration": 3, "arity": 4, "t_degree": 4, "y_degree": 3,
                 "x_degree": 2, "operator_order": 2, "hbar_order": 1},
        "connection": {"christoffel": [], "r": []},
        "connection_prime": {"christoffel": [], "r": []},
        "poisson": [],
        "homotopy_arity": 2,
        "suites": ["linfty"],
        "seed": 0,
        "debug": {"corrupt_bracket": True},
    },
}


def run_suites(scenario: Scenario) -> Report:
    """Deterministic given (scenario, seed); suite failures never abort a run."""
    workers = max(1, int(os.environ.get("FORMALITY_WORKERS", "1")))
    ordered = [s for s in SUITE_ORDER if s in scenario.suites]
    results = {}

    def run_one(name):
        records = []
        ALL_SUITES[name](SuiteContext(scenario, records))
        return records

    if workers == 1:
        for name in ordered:
            results[name] = run_one(name)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {name: pool.submit(run_one, name) for name in ordered}
            for name in ordered:
                results[name] = futures[name].result()
    report = Report()
    for name in ordered:
        report.records.extend(results[name])
    return report


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        payload = {
            "checks": [{"name": r.name, "law": r.law, "status": r.status,
                        "witness": r.witness} for r in report.records],
            "summary": {
                "pass": sum(1 for r in report.records if r.status == "pass"),
                "fail": sum(1 for r in report.records if r.status == "fail"),
                "skipped": sum(1 for r in report.records
                               if r.status == "skipped"),
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    lines = []
    width = max((len(r.name) for r in report.records), default=10)
    for r in report.records:
        line = f"{r.status.upper():7s} {r.name:<{width}s} [{r.law}]" \
               f" ({r.timing_ms} ms)"
        if r.witness:
            line += f"\n        witness: {r.witness}"
        lines.append(line)
    summary = (f"{sum(1 for r in report.records if r.status == 'pass')} passed, "
               f"{sum(1 for r in report.records if r.status == 'fail')} failed, "
               f"{sum(1 for r in report.records if r.status == 'skipped')} skipped")
    return "\n".join(lines + [summary]) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="formality",
        description="Exact verification suites for the homotopy-algebra kernel")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run verification suites on a scenario")
    run_p.add_argument("--scenario", required=True,
                       help="path to a scenario JSON file, or a builtin name")
    run_p.add_argument("--suite", action="append", default=None,
                       help="restrict to a suite (repeatable)")
    run_p.add_argument("--report", default=None, help="write the report here")
    run_p.add_argument("--format", choices=("text", "json"), default="text")
    run_p.add_argument("--seed", type=int, default=None)

    fix_p = sub.add_parser("fixtures", help="list or show builtin scenarios")
    fix_sub = fix_p.add_subparsers(dest="fixtures_command", required=True)
    fix_sub.add_parser("list")
    show_p = fix_sub.add_parser("show")
    show_p.add_argument("name")

    args = parser.parse_args(argv)

    if args.command == "fixtures":
        if args.fixtures_command == "list":
            for name in sorted(BUILTIN_SCENARIOS):
                print(name)
            return 0
        name = args.name
        if name not in BUILTIN_SCENARIOS:
            print(f"unknown fixture {name!r}", file=sys.stderr)
            return 2
        print(json.dumps(BUILTIN_SCENARIOS[name], indent=2, sort_keys=True))
        return 0

    try:
        if args.scenario in BUILTIN_SCENARIOS:
            scenario = scenario_from_dict(BUILTIN_SCENARIOS[args.scenario])
        else:
            scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario.seed = args.seed
    if args.suite:
        unknown = [s for s in args.suite if s not in ALL_SUITES]
        if unknown:
            print(f"unknown suites: {unknown}", file=sys.stderr)
            return 2
        scenario.suites = tuple(args.suite)

    report = run_suites(scenario)
    output = emit_report(report, args.format)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(output)
    else:
        sys.stdout.write(output)
    return 0 if report.passed() else 1


if __name__ == "__main__":
    raise SystemExit(main())
