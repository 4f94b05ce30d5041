"""Convolution algebra: morphisms as Maurer-Cartan elements, filtration
weights, the homotopy checker, twist homotopies and transports."""
from fractions import Fraction

import pytest

from formality.fixtures import fix_a, random_element, seeded_rng, solve_arity2_component
from formality.graded import FormalPath
from formality.linfty import (
    check_morphism_equation, compose_morphisms, from_dgla, identity_morphism,
    induced_cohomology_map, iter_words, morphisms_equal, strict_morphism,
)
from formality.mc import GaugeDatum, check_homotopy_datum, gauge_act, pushforward_mc
from formality.convolution import (
    ConvolutionAlgebra, MorphismHomotopy, build_convolution, build_twist_homotopy,
    check_morphism_homotopy, filtration_weight, mc_gauge_witness_pushforward,
    transport_postcompose, transport_precompose,
)


@pytest.fixture(scope="module")
def fixa():
    algebra, ids = fix_a()
    return from_dgla(algebra), algebra, ids


@pytest.fixture(scope="module")
def conv(fixa):
    Q, _, _ = fixa
    return build_convolution(Q, Q)


def el(space, ids, **coeffs):
    return space.element({ids[k]: Fraction(v) for k, v in coeffs.items()})


def test_identity_is_mc_in_convolution(fixa, conv):
    Q, _, _ = fixa
    F = conv.from_morphism(identity_morphism(Q))
    assert conv.element_is_zero(conv.mc_residual(F)) is None


def test_strict_chain_map_on_complexes_has_zero_differential(fixa):
    # on an abelian structure the convolution differential of a chain map is 0
    from formality.fixtures import abelian
    algebra, ids = abelian()
    Q = from_dgla(algebra)
    cv = build_convolution(Q, Q)
    F = cv.from_morphism(identity_morphism(Q))
    assert cv.element_is_zero(cv.qhat1(F)) is None


def test_mc_iff_morphism_equation(fixa, conv):
    Q, _, ids = fixa
    good = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    assert check_morphism_equation(good) is None
    assert conv.element_is_zero(conv.mc_residual(conv.from_morphism(good))) is None

    # corrupt the arity-2 table: both checks must fail, at the same arity
    bad_tab = dict(good.taylor)
    tab2 = bad_tab[2]
    from formality.linfty import LInftyMorphism, TaylorTable

    def broken(word):
        val = tab2.on_word(word)
        return val + el(Q.space, ids, c=1)

    bad_tab[2] = TaylorTable(2, Q.space, Q.space, broken, name="bad")
    bad = LInftyMorphism(Q, Q, bad_tab)
    w1 = check_morphism_equation(bad)
    w2 = conv.element_is_zero(conv.mc_residual(conv.from_morphism(bad)))
    assert w1 is not None and w2 is not None
    assert len(w1[0]) == w2[0]


def test_mc_iff_seeded_strict_and_corrected(fixa, conv):
    Q, _, _ = fixa
    rng = seeded_rng(5)
    for _ in range(6):
        alpha = rng.choice([1, -1, 2])
        gamma = rng.choice([1, -1, 2, 3])
        F = solve_arity2_component({"a": alpha, "b": alpha, "c": gamma}, Q, Q)
        if F is None:
            continue
        eq = check_morphism_equation(F) is None
        mc = conv.element_is_zero(conv.mc_residual(conv.from_morphism(F))) is None
        assert eq and mc


def test_filtration_weight_strict_identity(fixa, conv):
    Q, _, _ = fixa
    F = conv.from_morphism(identity_morphism(Q))
    assert filtration_weight(F, "arity") == 1
    assert filtration_weight(F, "mixed") == 1


def test_filtration_weight_arity_two_only(fixa, conv):
    Q, _, ids = fixa
    from formality.linfty import LInftyMorphism, TaylorTable

    def f2(word):
        if word == (ids["b"], ids["b"]):
            return el(Q.space, ids, c=1)
        return Q.space.zero()

    F2 = LInftyMorphism(Q, Q, {2: TaylorTable(2, Q.space, Q.space, f2)})
    X = conv.from_morphism(F2)
    assert filtration_weight(X, "arity") == 2
    # entry (2, b v b -> c): 2 + weight(c) - weight(b v b) = 2 + 2 - 2 = 2
    assert filtration_weight(X, "mixed") == 2


def test_twist_homotopy_trivial_generator(fixa):
    Q, algebra, ids = fixa
    F = identity_morphism(Q)
    g = GaugeDatum(algebra.space.zero())
    h = build_twist_homotopy(F, g)
    assert check_morphism_homotopy(h) is None
    assert morphisms_equal(h.endpoint_morphism(0), F)
    assert morphisms_equal(h.endpoint_morphism(1), F)


def test_twist_homotopy_identity_morphism(fixa):
    Q, algebra, ids = fixa
    F = identity_morphism(Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    assert check_morphism_homotopy(h) is None
    assert morphisms_equal(h.endpoint_morphism(0), F)
    # the twisted-and-conjugated endpoint of the identity collapses to itself
    assert morphisms_equal(h.endpoint_morphism(1), F)


def test_twist_homotopy_nonstrict(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    assert check_morphism_homotopy(h) is None
    assert morphisms_equal(h.endpoint_morphism(0), F)
    # endpoints are honest morphisms
    assert check_morphism_equation(h.endpoint_morphism(1)) is None


def test_twist_path_coefficients_gain_mixed_weight(fixa):
    # coefficient of t^k has mixed weight >= k + 1 beyond the constant part
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    for k in range(1, len(h.f_coeffs)):
        w = filtration_weight(h.f_coeffs[k], "mixed")
        assert w >= k + 1, (k, w)


def test_checker_detects_corrupt_coefficient(fixa):
    Q, algebra, ids = fixa
    F = identity_morphism(Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    bad_coeff = h.f_coeffs[1] + (1 * h.conv.from_morphism(
        strict_morphism(Q, Q, lambda b: el(Q.space, ids, c=1)
                        if b.index[0] == "b" else Q.space.zero())))
    bad = MorphismHomotopy(h.conv, [h.f_coeffs[0], bad_coeff] + h.f_coeffs[2:],
                           h.lambda_coeffs)
    w = check_morphism_homotopy(bad)
    assert w is not None and w[0] == "ode"


def test_transport_postcompose(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    H = solve_arity2_component({"a": 1, "b": 1, "c": 3}, Q, Q)
    out = transport_postcompose(h, H)
    assert check_morphism_homotopy(out) is None
    for s in (0, 1):
        assert morphisms_equal(out.endpoint_morphism(s),
                               compose_morphisms(H, h.endpoint_morphism(s)))


def test_transport_postcompose_identity_is_noop(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    out = transport_postcompose(h, identity_morphism(Q))
    for n in (1, 2):
        for word in iter_words(Q.space, n):
            assert out.f_path(n, word) == h.f_path(n, word)
            assert out.lambda_path(n, word) == h.lambda_path(n, word)


def test_transport_precompose(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    H = solve_arity2_component({"a": 1, "b": 1, "c": -1}, Q, Q)
    out = transport_precompose(h, H)
    assert check_morphism_homotopy(out) is None
    for s in (0, 1):
        assert morphisms_equal(out.endpoint_morphism(s),
                               compose_morphisms(h.endpoint_morphism(s), H))


def test_constant_homotopy_transports_to_constant(fixa):
    Q, algebra, ids = fixa
    F = identity_morphism(Q)
    h = build_twist_homotopy(F, GaugeDatum(algebra.space.zero()))
    H = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    out = transport_postcompose(h, H)
    for n in (1, 2):
        for word in iter_words(Q.space, n):
            p = out.f_path(n, word)
            assert p.differentiate().is_zero()


def test_witness_pushforward(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    pi = el(Q.space, ids, b=-1, c=Fraction(-1, 2))
    datum = mc_gauge_witness_pushforward(h, pi)
    # endpoints equal the pushforwards through the endpoint morphisms
    for s, idx in ((0, 0), (1, 1)):
        end = h.endpoint_morphism(s)
        assert datum.pi_path.evaluate(s) == pushforward_mc(end, pi, check=False)


def test_witness_pushforward_zero(fixa, conv):
    Q, algebra, ids = fixa
    h = build_twist_homotopy(identity_morphism(Q),
                             GaugeDatum(el(Q.space, ids, a=1)))
    datum = mc_gauge_witness_pushforward(h, Q.space.zero())
    assert datum.pi_path.is_zero() and datum.lambda_path.is_zero()


def test_homotopic_morphisms_induce_equal_cohomology_maps(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    g = GaugeDatum(el(Q.space, ids, a=1))
    h = build_twist_homotopy(F, g)
    m0 = induced_cohomology_map(h.endpoint_morphism(0))
    m1 = induced_cohomology_map(h.endpoint_morphism(1))
    assert m0 == m1
