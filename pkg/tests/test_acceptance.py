"""Acceptance criteria, one test per criterion, all at tolerance zero (exact
rational identities). Each test prints a pass/fail line with its timing and
stated budget. Heavy chart-level suites are run once and their records are
shared across the criteria they certify."""
import time

import pytest

from formality.cli import BUILTIN_SCENARIOS, emit_report, run_suites, scenario_from_dict
from formality.suites import SuiteContext, suite_convolution, suite_core, suite_linfty, suite_mc
from formality.suites_fedosov import suite_fedosov, suite_theorem


@pytest.fixture(scope="module")
def scenario():
    return scenario_from_dict(BUILTIN_SCENARIOS["reference"])


def _run_suite(fn, scenario):
    records = []
    start = time.monotonic()
    fn(SuiteContext(scenario, records))
    return records, time.monotonic() - start


@pytest.fixture(scope="module")
def abstract_records(scenario):
    out = {}
    for name, fn in [("core", suite_core), ("linfty", suite_linfty),
                     ("mc", suite_mc), ("convolution", suite_convolution)]:
        records, elapsed = _run_suite(fn, scenario)
        for r in records:
            out[r.name] = r
        out[f"_time.{name}"] = elapsed
    return out


@pytest.fixture(scope="module")
def fedosov_records(scenario):
    records, elapsed = _run_suite(suite_fedosov, scenario)
    out = {r.name: r for r in records}
    out["_time"] = elapsed
    return out


@pytest.fixture(scope="module")
def theorem_records(scenario):
    records, elapsed = _run_suite(suite_theorem, scenario)
    out = {r.name: r for r in records}
    out["_time"] = elapsed
    return out


def _criterion(number, label, budget_s, checks, elapsed):
    failed = [(c.name, c.witness) for c in checks if c.status != "pass"]
    status = "PASS" if not failed else "FAIL"
    print(f"criterion {number:02d} {status} [{label}] "
          f"{elapsed:.1f}s (budget {budget_s}s)")
    assert not failed, failed


def test_criterion_01_structure_soundness(abstract_records):
    checks = [abstract_records["linfty.fixa-structure"],
              abstract_records["linfty.fiberwise-structures-d1"],
              abstract_records["linfty.fiberwise-structures-d2"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(1, "structure soundness", 5, checks, elapsed)


def test_criterion_02_gauge_engine(abstract_records):
    checks = [abstract_records["mc.gauge-engine"],
              abstract_records["mc.gauge-homotopy-roundtrip"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(2, "gauge engine", 10, checks, elapsed)


def test_criterion_03_twisting(abstract_records):
    checks = [abstract_records["mc.twisting"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(3, "twisting", 10, checks, elapsed)


def test_criterion_04_convolution_equivalence(abstract_records):
    checks = [abstract_records["convolution.mc-iff-morphism"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(4, "convolution equivalence", 10, checks, elapsed)


def test_criterion_05_main_abstract_result(abstract_records, theorem_records):
    checks = [abstract_records["convolution.twist-homotopy"],
              theorem_records["theorem.twist-on-projection"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(5, "twisted morphisms are homotopic", 60, checks, elapsed)


def test_criterion_06_transport(abstract_records):
    checks = [abstract_records["convolution.transports"],
              abstract_records["convolution.witness-pushforward"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(6, "transport under composition", 30, checks, elapsed)


def test_criterion_07_fedosov_core(fedosov_records):
    checks = [fedosov_records["fedosov.delta-calculus"],
              fedosov_records["fedosov.flatness"],
              fedosov_records["fedosov.taylor"],
              fedosov_records["fedosov.homotopy-identities"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(7, "resolution calculus", 60, checks, elapsed)


def test_criterion_08_projection_splitting(fedosov_records):
    checks = [fedosov_records["fedosov.projection-splitting"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(8, "projection and splitting", 120, checks, elapsed)


def test_criterion_09_two_connection(fedosov_records):
    checks = [fedosov_records["fedosov.two-connection"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(9, "two-connection comparison", 180, checks, elapsed)


def test_criterion_10_theorem_pipeline(theorem_records):
    checks = [theorem_records["theorem.formality-chain"],
              theorem_records["theorem.mirror-identity"],
              theorem_records["theorem.star-first-order"]]
    elapsed = sum(c.timing_ms for c in checks) / 1000
    _criterion(10, "formality chain and first-order star", 300, checks, elapsed)


def test_criterion_11_determinism():
    start = time.monotonic()
    scenario_a = scenario_from_dict(BUILTIN_SCENARIOS["fixa"])
    scenario_b = scenario_from_dict(BUILTIN_SCENARIOS["fixa"])
    out_a = emit_report(run_suites(scenario_a), "json")
    out_b = emit_report(run_suites(scenario_b), "json")
    elapsed = time.monotonic() - start
    status = "PASS" if out_a == out_b else "FAIL"
    print(f"criterion 11 {status} [deterministic reports] {elapsed:.1f}s")
    assert out_a.encode() == out_b.encode()
