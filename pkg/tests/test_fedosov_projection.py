"""Projection morphism and splitting at minimal caps."""
from fractions import Fraction

import pytest

from formality.fedosov import Chart, ChartSpaces, ConnectionData
from formality.fedosov.projection import (
    build_projection_P, build_splitting, complement_morphism, d_inv_extension,
)
from formality.fedosov.structures import base_structures, omega_structures
from formality.linfty import (
    check_morphism_equation, compose_morphisms, identity_morphism, iter_words,
    morphisms_equal,
)


@pytest.fixture(scope="module")
def flat_min():
    sp = ChartSpaces(dimension=1, weight_cap=1, arity_cap=4, t_cap=4,
                     x_cap=1, order_cap=1, name="pm")
    return Chart(sp, ConnectionData(sp))


@pytest.fixture(scope="module")
def pd(flat_min):
    return build_projection_P(flat_min, "D")


def test_p1_is_nu_sigma(flat_min, pd):
    chart = flat_min
    sp = chart.spaces.space("OD")
    for b in sp.basis_list():
        e = sp.element({b: 1})
        assert pd.f_word(1, (b,)) == chart.nu_element(chart.sigma(e))


def test_p1_left_inverse_of_lift(flat_min, pd):
    bD = pd.target.space
    for b in bD.basis_list():
        if sum(b.index[0]) > flat_min.spaces.x_cap:
            continue
        e = bD.element({b: 1})
        assert pd.f1(flat_min.tau_nu_inverse(e)) == e, b


def test_higher_p_vanish_on_zero_forms(flat_min, pd):
    sp = pd.source.space
    zero_forms = [b for b in sp.basis_list() if not b.index[1]]
    count = 0
    for w in iter_words(sp, 2):
        if all(b in zero_forms for b in w):
            assert pd.f_word(2, w).is_zero(), w
            count += 1
    assert count > 0


def test_p_morphism_equation_through_arity_3(flat_min, pd):
    witness = check_morphism_equation(pd, max_arity=3,
                                      assert_cap=flat_min.spaces.weight_cap)
    assert witness is None


def test_complement_vanishes_at_arity_3(flat_min):
    oT, oD = omega_structures(flat_min)
    F = complement_morphism(flat_min, "D", oD)
    for w in iter_words(oD.space, 3):
        assert F.f_word(3, w).is_zero(), w


def test_complement_first_map_is_one_minus_lift(flat_min):
    from formality.fedosov.projection import ImageFactor
    oT, oD = omega_structures(flat_min)
    image = ImageFactor(flat_min, "D")
    F = complement_morphism(flat_min, "D", oD, image)
    sp = oD.space
    cap = flat_min.spaces.weight_cap
    for b in sp.basis_list():
        e = sp.element({b: 1})
        want = e - flat_min.tau_sigma(e)
        got = image.unwrap(F.f_word(1, (b,)))
        assert (got - want).reduce_to(cap).is_zero(), b


def test_complement_morphism_equation(flat_min):
    oT, oD = omega_structures(flat_min)
    F = complement_morphism(flat_min, "D", oD)
    assert check_morphism_equation(F, max_arity=3,
                                   assert_cap=flat_min.spaces.weight_cap) is None


def test_splitting_round_trip(flat_min, pd):
    chart = flat_min
    L, L_inv, F, prod, image = build_splitting(chart, "D", pd)
    # two-sided identity on the first structure maps
    sp = L.source.space
    cap = chart.spaces.weight_cap
    for b in sp.basis_list():
        e = sp.element({b: 1})
        back = L_inv.f1(L.f1(e))
        assert (back - e).reduce_to(cap).is_zero(), b
    for b in prod.space.basis_list():
        if b.index[0] == 0 and sum(b.index[1][0]) > chart.spaces.x_cap:
            continue
        z = prod.space.element({b: 1})
        assert (L.f1(L_inv.f1(z)) - z).reduce_to(cap).is_zero(), b


def test_splitting_inverse_composes_to_identity(flat_min, pd):
    L, L_inv, F, prod, image = build_splitting(flat_min, "D", pd)
    ident = identity_morphism(L.source)
    assert morphisms_equal(compose_morphisms(L_inv, L), ident, max_arity=2,
                           assert_cap=flat_min.spaces.weight_cap)


def test_flat_image_complements_lifted_base(flat_min):
    # rank check: span(id - tau sigma) and span(tau-lifts) intersect trivially
    # and sum to the whole space
    chart = flat_min
    sp = chart.spaces.space("OD")
    from formality.linfty import _rank
    image_rows = []
    lift_rows = []
    for b in sp.basis_list():
        e = sp.element({b: 1})
        img = (e - chart.tau_sigma(e)).reduce_to(chart.spaces.weight_cap)
        if not img.is_zero():
            image_rows.append(img.terms)
        s = chart.sigma(e)
        if not s.is_zero():
            lift = chart.tau(s).reduce_to(chart.spaces.weight_cap)
            lift_rows.append(lift.terms)
    dim = len([b for b in sp.basis_list()])
    r_img = _rank(image_rows)
    r_lift = _rank(lift_rows)
    assert r_img + r_lift == dim
    assert _rank(image_rows + lift_rows) == dim


def test_p_morphism_equation_curved_chart():
    # nonzero Christoffel table in d = 1: trivial curvature but nontrivial
    # lifts and jets exercise the recursion with corrections
    sp = ChartSpaces(dimension=1, weight_cap=1, arity_cap=4, t_cap=4,
                     x_cap=1, order_cap=1, name="pc")
    chart = Chart(sp, ConnectionData(sp, christoffel={(0, 0, 0): {(1,): 1}}))
    P = build_projection_P(chart, "D")
    assert check_morphism_equation(P, max_arity=2,
                                   assert_cap=sp.weight_cap) is None
    assert check_morphism_equation(
        build_projection_P(chart, "T"), max_arity=3,
        assert_cap=sp.weight_cap) is None


def test_d_inv_extension_side_conditions(flat_min):
    # the extension reduces to Dinv at arity 1 and kills repeated
    # already-projected factors via Dinv tau sigma = 0
    chart = flat_min
    sp = chart.spaces.space("OD")
    ext1 = d_inv_extension(chart, 1, "D")
    for b in sp.basis_list():
        se = ext1((b,))
        acc = sp.zero()
        for factors, coeff in se.items():
            acc = acc + coeff * sp.element({factors[0]: 1})
        assert acc == chart.d_inv(sp.element({b: 1})), b
