"""Chart calculus: delta and its homotopy, the connection recursion, the flat
differential, the flat lift, the evaluation map, and the homotopy for D."""
from fractions import Fraction

import pytest

from formality.fedosov import Chart, ChartSpaces, ConnectionData, fiberwise_structures
from formality.fedosov.spaces import unit_idx, zero_index
from formality.graded import InputError


@pytest.fixture(scope="module")
def flat1():
    sp = ChartSpaces(dimension=1, weight_cap=3, arity_cap=4, t_cap=4,
                     x_cap=2, order_cap=2, name="f1")
    return Chart(sp, ConnectionData(sp))


@pytest.fixture(scope="module")
def curv2():
    sp = ChartSpaces(dimension=2, weight_cap=2, arity_cap=4, t_cap=4,
                     x_cap=2, order_cap=1, name="c2")
    conn = ConnectionData(sp, christoffel={(0, 1, 1): {(1, 0): 1}})
    return Chart(sp, conn)


def ot_elem(chart, terms):
    sp = chart.spaces.space("OT")
    out = {}
    for (xe, dxs, ye, fiber), c in terms.items():
        out[chart.spaces.make_omega_id("OT", (xe, dxs, ye, fiber))] = c
    return sp.element(out)


def od_elem(chart, terms):
    sp = chart.spaces.space("OD")
    out = {}
    for (xe, dxs, ye, fiber), c in terms.items():
        out[chart.spaces.make_omega_id("OD", (xe, dxs, ye, fiber))] = c
    return sp.element(out)


def test_delta_examples(flat1):
    c = flat1
    y1 = ot_elem(c, {((0,), (), (1,), ("T", ())): 1})
    dx1 = ot_elem(c, {((0,), (0,), (0,), ("T", ())): 1})
    assert c.delta(y1) == dx1
    assert c.delta(dx1).is_zero()
    assert c.delta_inv(dx1) == y1  # p + q = 1
    x2 = ot_elem(c, {((2,), (), (0,), ("T", ())): 1})
    mixed = ot_elem(c, {((1,), (), (1,), ("T", ())): 1}) + x2
    assert c.sigma(mixed) == x2


def test_delta_squared_and_poincare(flat1, curv2):
    for chart, which in ((flat1, "OT"), (flat1, "OD"),
                         (curv2, "OT"), (curv2, "OD")):
        sp = chart.spaces.space(which)
        for b in sp.basis_list():
            e = sp.element({b: 1})
            assert chart.delta(chart.delta(e)).is_zero()
            assert chart.delta_inv(chart.delta_inv(e)).is_zero()
            recon = chart.delta(chart.delta_inv(e)) + \
                chart.delta_inv(chart.delta(e)) + chart.sigma(e)
            assert recon == e, (which, b)


def test_delta_matches_bracket_generator(flat1):
    # delta = [dx^i d/dy^i, .] in the bracket convention of the kernel
    c = flat1
    sp = c.spaces.space("OT")
    gen = ot_elem(c, {((0,), (0,), (0,), ("T", (0,))): 1})
    for b in sp.basis_list():
        e = sp.element({b: 1})
        assert c.delta(e) == c.bracket(gen, e), b


def test_connection_ops_flat(flat1):
    assert flat1.curvature().is_zero()
    assert flat1.gamma_hat("OT").is_zero()


def test_connection_curvature_component(curv2):
    # Gamma^0_{11} = x^0 gives (R_{01})^0_1 = d_0 Gamma^0_{11} = 1
    assert curv2.curvature_component(0, 1, 0, 1) == 1
    assert curv2.curvature_component(1, 0, 0, 1) == -1


def test_nabla_squared_is_curvature_bracket(curv2):
    sp = curv2.spaces.space("OT")
    R = curv2.curvature()
    for b in sp.basis_list():
        e = sp.element({b: 1})
        lhs = curv2.nabla(curv2.nabla(e))
        rhs = curv2.bracket(R, e)
        assert (lhs - rhs).reduce_to(curv2.spaces.weight_cap).is_zero(), b


def test_delta_nabla_anticommute(curv2):
    sp = curv2.spaces.space("OT")
    for b in sp.basis_list():
        e = sp.element({b: 1})
        val = curv2.delta(curv2.nabla(e)) + curv2.nabla(curv2.delta(e))
        assert val.reduce_to(curv2.spaces.weight_cap).is_zero(), b


def test_solve_a_flat_zero(flat1):
    assert flat1.a_section().is_zero()


def test_solve_a_with_r():
    sp = ChartSpaces(dimension=1, weight_cap=3, arity_cap=4, t_cap=4,
                     x_cap=1, order_cap=1, name="fr")
    conn = ConnectionData(sp, r_terms={((2,), 0): 1})  # r = y^2 d_y
    chart = Chart(sp, conn)
    a = chart.a_section()
    assert not a.is_zero()
    # the defining system is re-verified inside; spot-check delta_inv A = r
    assert chart.delta_inv(a) == conn.r_section(chart)


def test_solve_a_curvature_leading_term(curv2):
    a = curv2.a_section()
    # leading fiber-degree part of A is delta_inv(R)
    lead = curv2.delta_inv(curv2.curvature())
    diff = a - lead
    # difference has y-degree >= 3
    for b in diff.terms:
        assert sum(b.index[2]) >= 3


def test_fedosov_differential_squares_to_zero(flat1, curv2):
    for chart in (flat1, curv2):
        for which in ("OT", "OD"):
            sp = chart.spaces.space(which)
            for b in sp.basis_list():
                e = sp.element({b: 1})
                val = chart.fedosov_d(chart.fedosov_d(e))
                assert val.reduce_to(chart.spaces.weight_cap).is_zero(), (which, b)


def test_full_d_squares_to_zero_on_operators(curv2):
    sp = curv2.spaces.space("OD")
    for b in sp.basis_list():
        e = sp.element({b: 1})
        val = curv2.full_d(curv2.full_d(e))
        assert val.reduce_to(curv2.spaces.weight_cap).is_zero(), b


def test_b_section_reproduces_d_minus_d(flat1, curv2):
    for chart in (flat1, curv2):
        sp = chart.spaces.space("OT")
        B = chart.b_section("OT")
        for b in sp.basis_list():
            e = sp.element({b: 1})
            lhs = chart.fedosov_d(e) - chart.d_x(e)
            assert (lhs - chart.bracket(B, e)).reduce_to(
                chart.spaces.weight_cap).is_zero(), b


def test_tau_flat_examples(flat1):
    c = flat1
    x = ot_elem(c, {((1,), (), (0,), ("T", ())): 1})
    tau_x = c.tau(x)
    expected = x + ot_elem(c, {((0,), (), (1,), ("T", ())): 1})
    assert tau_x == expected  # tau(x) = x + y
    x2 = ot_elem(c, {((2,), (), (0,), ("T", ())): 1})
    tau_x2 = c.tau(x2)
    expected2 = x2 + ot_elem(c, {((1,), (), (1,), ("T", ())): 2}) + \
        ot_elem(c, {((0,), (), (2,), ("T", ())): 1})
    assert tau_x2 == expected2  # tau(x^2) = x^2 + 2xy + y^2
    one = ot_elem(c, {((0,), (), (0,), ("T", ())): 1})
    assert c.tau(one) == one


def test_tau_is_flat_and_sigma_section(flat1, curv2):
    for chart in (flat1, curv2):
        sp = chart.spaces.space("OT")
        for b in sp.basis_list():
            if b.index[1] or sum(b.index[2]):
                continue
            a = sp.element({b: 1})
            t = chart.tau(a)
            assert chart.sigma(t) == a
            assert chart.fedosov_d(t).reduce_to(
                chart.spaces.weight_cap).is_zero(), b


def test_tau_rejects_y_dependent_input(flat1):
    bad = ot_elem(flat1, {((0,), (), (1,), ("T", ())): 1})
    with pytest.raises(InputError):
        flat1.tau(bad)


def test_nu_vector_field_example(flat1):
    # w = d/dy lifted; f = x: nu(w)(f) = sigma(d_y(x + y)) = 1
    c = flat1
    w = ot_elem(c, {((0,), (), (0,), ("T", (0,))): 1})
    f = c.spaces.space("bT").element(
        {c.spaces.make_base_id("bT", (1,), ("T", ())): 1})
    val = c.nu_map(w, [f])
    one = c.spaces.space("bT").element(
        {c.spaces.make_base_id("bT", (0,), ("T", ())): 1})
    assert val == one


def test_nu_round_trip_base_vector_field(flat1, curv2):
    for chart in (flat1, curv2):
        bT = chart.spaces.space("bT")
        for b in bT.basis_list():
            if b.degree != 0:
                continue
            v = bT.element({b: 1})
            lifted = chart.lift_base(v)
            assert chart.nu_element(chart.sigma(lifted)) == v


def test_nu_element_on_operators_matches_evaluation(curv2):
    # reconstruct nu(w) as an operator table, then compare with the direct
    # evaluation on a spanning set of base functions
    c = curv2
    w = od_elem(c, {((0, 0), (), (0, 0), ("D", ((1, 0),))): 1,
                    ((1, 0), (), (0, 0), ("D", ((0, 1),))): 2})
    table = c.nu_element(w)
    bT = c.spaces.space("bT")
    for xe in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)]:
        f = bT.element({c.spaces.make_base_id("bT", xe, ("T", ())): 1})
        direct = c.nu_map(w, [f])
        via_table = _apply_base_operator(c, table, [f])
        assert direct == via_table, xe


def _apply_base_operator(chart, table, args):
    """Apply a base operator element to base functions (exact)."""
    from formality.fedosov.chart import _poly_derive, _as_fiber_poly
    from formality.fedosov.spaces import add_idx
    import itertools
    bT = chart.spaces.space("bT")
    out = {}
    for bid, c in table.terms.items():
        xe, (kind, slots) = bid.index
        assert kind == "D" and len(slots) == len(args)
        vals = []
        for slot, arg in zip(slots, args):
            poly = {}
            for abid, ac in arg.terms.items():
                poly[(abid.index[0], ())] = ac
            der = {}
            for (axe, _), ac in poly.items():
                from formality.fedosov.spaces import falling_power, sub_idx
                fp = falling_power(axe, slot)
                if fp:
                    der[sub_idx(axe, slot)] = der.get(sub_idx(axe, slot), 0) + ac * fp
            vals.append(der)
        for combo in itertools.product(*(list(v.items()) for v in vals)):
            tot = xe
            coeff = c
            for e, v in combo:
                tot = add_idx(tot, e)
                coeff = coeff * v
            key = chart.spaces.make_base_id("bT", tot, ("T", ()))
            out[key] = out.get(key, 0) + coeff
    return bT.element(out)


def test_nu_connection_independent_on_polyvectors(curv2):
    # nu = nu' on polyvectors: both are the identity on coefficient tables
    sp = curv2.spaces
    flat = Chart(sp, ConnectionData(sp))
    w = ot_elem(curv2, {((1, 0), (), (0, 0), ("T", (0, 1))): 1})
    f = sp.space("bT")
    args = [f.element({sp.make_base_id("bT", (1, 0), ("T", ())): 1}),
            f.element({sp.make_base_id("bT", (0, 1), ("T", ())): 1})]
    assert curv2.nu_map(w, args) == flat.nu_map(w, args)
    assert curv2.nu_element(w) == flat.nu_element(w)


def test_nu_inverse_round_trip(curv2):
    bD = curv2.spaces.space("bD")
    for b in bD.basis_list():
        if sum(b.index[0]) > curv2.spaces.x_cap:
            continue
        C = bD.element({b: 1})
        w = curv2.nu_inverse(C)
        assert curv2.nu_element(w) == C, b


def test_d_inv_flat_example(flat1):
    c = flat1
    dx = ot_elem(c, {((0,), (0,), (0,), ("T", ())): 1})
    y = ot_elem(c, {((0,), (), (1,), ("T", ())): 1})
    assert c.d_inv(dx) == -1 * y
    # homotopy identity on X = dx: D(-y) + Dinv(D dx) + tau sigma dx = dx
    val = c.fedosov_d(c.d_inv(dx)) + c.d_inv(c.fedosov_d(dx)) + c.tau_sigma(dx)
    assert val == dx


def test_d_inv_homotopy_identity(flat1, curv2):
    for chart in (flat1, curv2):
        for which in ("OT", "OD"):
            sp = chart.spaces.space(which)
            cap = chart.spaces.weight_cap
            for b in sp.basis_list():
                e = sp.element({b: 1})
                val = chart.fedosov_d(chart.d_inv(e)) + \
                    chart.d_inv(chart.fedosov_d(e)) + chart.tau_sigma(e)
                assert (val - e).reduce_to(cap).is_zero(), (which, b)


def test_d_inv_squares_to_zero(flat1, curv2):
    for chart in (flat1, curv2):
        sp = chart.spaces.space("OD")
        for b in sp.basis_list():
            e = sp.element({b: 1})
            assert chart.d_inv(chart.d_inv(e)).is_zero(), b


def test_d_inv_anticommutes_with_operator_differential(flat1, curv2):
    for chart in (flat1, curv2):
        sp = chart.spaces.space("OD")
        cap = chart.spaces.weight_cap
        for b in sp.basis_list():
            e = sp.element({b: 1})
            val = chart.d_inv(chart.hochschild(e)) + \
                chart.hochschild(chart.d_inv(e))
            assert val.reduce_to(cap).is_zero(), b


def test_base_level_homotopy_reduces_to_lift(flat1):
    # X with sigma X = X: D Dinv X + Dinv D X = 0 and the identity says tau sigma = lift
    c = flat1
    x2 = ot_elem(c, {((2,), (), (0,), ("T", ())): 1})
    assert c.d_inv(x2).is_zero()
    val = c.d_inv(c.fedosov_d(x2))
    assert (val - x2 + c.tau(x2)).is_zero()


def test_fiberwise_structure_checks():
    sp = ChartSpaces(dimension=1, weight_cap=2, arity_cap=4, t_cap=4,
                     x_cap=1, order_cap=1, name="fw")
    tpoly, dpoly = fiberwise_structures(sp)
    tpoly.validate(assert_cap=sp.weight_cap)
    dpoly.validate(assert_cap=sp.weight_cap)
    # spec examples: [y d_y, d_y] = -d_y
    fT = sp.space("fT")
    ydy = fT.element({sp.make_fiber_id("fT", (1,), ("T", (0,))): 1})
    dy = fT.element({sp.make_fiber_id("fT", (0,), ("T", (0,))): 1})
    assert tpoly.bracket(ydy, dy) == -1 * dy
    # [mu, mu] = 0 (associativity of the fiber product)
    fD = sp.space("fD")
    mu = fD.element({sp.make_fiber_id("fD", (0,), ("D", ((0,), (0,)))): 1})
    assert dpoly.bracket(mu, mu).is_zero()
    # the operator differential of a y-free function vanishes
    f0 = fD.element({sp.make_fiber_id("fD", (0,), ("D", ())): 1})
    assert dpoly.d(f0).is_zero()
    # and of y: (df)(g) = g*y - y*g = 0 in the commutative fiber
    fy = fD.element({sp.make_fiber_id("fD", (1,), ("D", ())): 1})
    assert dpoly.d(fy).is_zero()
    # but a first-order operator is not closed unless it is a derivation:
    # y d_y is a derivation, hence closed
    op = fD.element({sp.make_fiber_id("fD", (1,), ("D", ((1,),))): 1})
    assert dpoly.d(op).is_zero()
    # y^2-coefficient second-order operator is not closed
    op2 = fD.element({sp.make_fiber_id("fD", (0,), ("D", ((2,),))): 1})
    assert not dpoly.d(op2).is_zero()
