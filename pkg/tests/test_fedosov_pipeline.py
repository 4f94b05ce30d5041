"""End-to-end chain between two connections' assembled formalities, and the
twist homotopy on the projection morphism (the production-grade case)."""
import pytest

from formality.convolution import (
    build_twist_homotopy, check_morphism_homotopy, filtration_weight,
)
from formality.fedosov import Chart, ChartSpaces, ConnectionData
from formality.fedosov.pipeline import theorem_pipeline
from formality.fedosov.projection import build_projection_P
from formality.linfty import check_morphism_equation, morphisms_equal
from formality.mc import GaugeDatum


@pytest.fixture(scope="module")
def pair_d1():
    sp = ChartSpaces(dimension=1, weight_cap=1, arity_cap=4, t_cap=4,
                     x_cap=1, order_cap=1, name="pp")
    flat = Chart(sp, ConnectionData(sp))
    curved = Chart(sp, ConnectionData(sp, christoffel={(0, 0, 0): {(0,): 1}}))
    return sp, flat, curved


def test_theorem_pipeline_d1(pair_d1):
    sp, flat, curved = pair_d1
    report = theorem_pipeline(flat, curved, homotopy_arity=2)
    assert report.ok, (report.segments, report.equalities)
    assert len(report.segments) == 2
    assert all(w is None for _, w in report.segments)
    assert all(holds for _, holds in report.equalities)


def test_twist_homotopy_on_projection(pair_d1):
    sp, flat, _ = pair_d1
    P = build_projection_P(flat, "D")
    bid = sp.make_omega_id("OD", ((0,), (), (2,), ("D", ((1,),))))
    g = GaugeDatum(P.source.space.element({bid: 1}))
    h = build_twist_homotopy(P, g)
    assert check_morphism_homotopy(h, max_arity=2) is None
    assert morphisms_equal(h.endpoint_morphism(0), P, max_arity=2,
                           assert_cap=sp.weight_cap)
    assert check_morphism_equation(h.endpoint_morphism(1), max_arity=2,
                                   assert_cap=sp.weight_cap) is None
    # mixed-filtration weights of the t-coefficients grow with the index
    # (scanned through arity 2; higher arities are the same words wedged with
    # more factors, only adding arity weight)
    for k in range(1, len(h.f_coeffs)):
        w = filtration_weight(h.f_coeffs[k], "mixed", max_arity=2)
        assert w >= k + 1, (k, w)
