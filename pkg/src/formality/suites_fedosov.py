"""Chart-level suites: the resolution calculus, projection and splitting, the
two-connection comparison, and the end-to-end formality chain."""
from __future__ import annotations

from fractions import Fraction

from .graded import CapError
from .linfty import (
    check_morphism_equation, compose_morphisms, identity_morphism, iter_words,
    morphisms_equal,
)
from .mc import GaugeDatum
from .convolution import build_twist_homotopy, check_morphism_homotopy
from .suites import SuiteContext
from .fedosov import Chart, ChartSpaces, ConnectionData
from .fedosov.projection import build_projection_P, build_splitting
from .fedosov.structures import omega_structures
from .fedosov.twoconn import solve_h, two_connection_checks
from .fedosov.formality import (
    assemble_global_formality, base_bivector, hkr_instance,
    mirror_identity_instance, star_first_order,
)
from .fedosov.pipeline import theorem_pipeline


def _charts(scenario):
    """(flat d=1 chart at worked-example caps, scenario connection pair at
    the scenario dimension)."""
    caps = scenario.caps
    sp1 = ChartSpaces(dimension=1,
                      weight_cap=min(caps["filtration"], 3),
                      arity_cap=caps["arity"], t_cap=caps["t_degree"],
                      x_cap=min(scenario.x_degree, 2),
                      order_cap=min(scenario.operator_order, 2),
                      name="flat1")
    flat1 = Chart(sp1, ConnectionData(sp1))
    d = scenario.dimension
    spd = ChartSpaces(dimension=d,
                      weight_cap=min(caps["filtration"], 2 if d > 1 else 3),
                      arity_cap=caps["arity"], t_cap=caps["t_degree"],
                      x_cap=min(scenario.x_degree, 2),
                      order_cap=min(scenario.operator_order, 1),
                      name=f"chart{d}")
    conn_d = Chart(spd, ConnectionData(spd, christoffel=scenario.christoffel,
                                       r_terms=scenario.r))
    conn_p = Chart(spd, ConnectionData(spd,
                                       christoffel=scenario.christoffel_prime,
                                       r_terms=scenario.r_prime))
    return flat1, conn_d, conn_p


def suite_fedosov(ctx: SuiteContext):
    scenario = ctx.scenario
    flat1, conn_d, conn_p = _charts(scenario)

    def delta_calculus():
        for chart in (flat1, conn_p):
            for which in ("OT", "OD"):
                sp = chart.spaces.space(which)
                for b in sp.basis_list():
                    e = sp.element({b: 1})
                    if not chart.delta(chart.delta(e)).is_zero():
                        return ("delta^2", which, b)
                    if not chart.delta_inv(chart.delta_inv(e)).is_zero():
                        return ("homotopy^2", which, b)
                    recon = chart.delta(chart.delta_inv(e)) + \
                        chart.delta_inv(chart.delta(e)) + chart.sigma(e)
                    if recon != e:
                        return ("decomposition", which, b)
        return None
    ctx.run("fedosov.delta-calculus",
            "delta squared, homotopy squared, and the decomposition identity",
            delta_calculus)

    def flatness():
        for chart in (flat1, conn_d, conn_p):
            cap = chart.spaces.weight_cap
            for which in ("OT", "OD"):
                sp = chart.spaces.space(which)
                for b in sp.basis_list():
                    e = sp.element({b: 1})
                    val = chart.fedosov_d(chart.fedosov_d(e))
                    if not val.reduce_to(cap).is_zero():
                        return ("D^2", chart.spaces.name, which, b)
            B = chart.b_section("OT")
            sp = chart.spaces.space("OT")
            for b in sp.basis_list():
                e = sp.element({b: 1})
                lhs = chart.fedosov_d(e) - chart.d_x(e)
                if not (lhs - chart.bracket(B, e)).reduce_to(cap).is_zero():
                    return ("B-term", chart.spaces.name, b)
        return None
    ctx.run("fedosov.flatness", "the recursion flattens the differential",
            flatness)

    def taylor_examples():
        c = flat1
        sp = c.spaces
        x = sp.space("OT").element({sp.make_omega_id(
            "OT", ((1,), (), (0,), ("T", ()))): 1})
        y = sp.space("OT").element({sp.make_omega_id(
            "OT", ((0,), (), (1,), ("T", ()))): 1})
        if c.tau(x) != x + y:
            return "tau(x)"
        if sp.x_cap >= 2:
            x2 = sp.space("OT").element({sp.make_omega_id(
                "OT", ((2,), (), (0,), ("T", ()))): 1})
            xy = sp.space("OT").element({sp.make_omega_id(
                "OT", ((1,), (), (1,), ("T", ()))): 2})
            y2 = sp.space("OT").element({sp.make_omega_id(
                "OT", ((0,), (), (2,), ("T", ()))): 1})
            if c.tau(x2) != x2 + xy + y2:
                return "tau(x^2)"
        for chart in (flat1, conn_p):
            cap = chart.spaces.weight_cap
            spo = chart.spaces.space("OT")
            for b in spo.basis_list():
                if b.index[1] or sum(b.index[2]):
                    continue
                a = spo.element({b: 1})
                t = chart.tau(a)
                if chart.sigma(t) != a:
                    return ("section", chart.spaces.name, b)
                if not chart.fedosov_d(t).reduce_to(cap).is_zero():
                    return ("flatness", chart.spaces.name, b)
        return None
    ctx.run("fedosov.taylor", "flat lifts: worked values, section and flatness",
            taylor_examples)

    def homotopy_identities():
        for chart in (flat1, conn_p):
            cap = chart.spaces.weight_cap
            for which in ("OT", "OD"):
                sp = chart.spaces.space(which)
                for b in sp.basis_list():
                    e = sp.element({b: 1})
                    val = chart.fedosov_d(chart.d_inv(e)) + \
                        chart.d_inv(chart.fedosov_d(e)) + chart.tau_sigma(e)
                    if not (val - e).reduce_to(cap).is_zero():
                        return ("identity", chart.spaces.name, which, b)
                    if not chart.d_inv(chart.d_inv(e)).is_zero():
                        return ("square", chart.spaces.name, which, b)
            sp = chart.spaces.space("OD")
            for b in sp.basis_list():
                e = sp.element({b: 1})
                val = chart.d_inv(chart.hochschild(e)) + \
                    chart.hochschild(chart.d_inv(e))
                if not val.reduce_to(cap).is_zero():
                    return ("anticommute", chart.spaces.name, b)
        return None
    ctx.run("fedosov.homotopy-identities",
            "the homotopy for the flat differential and its side conditions",
            homotopy_identities)

    def projection():
        sp = ChartSpaces(dimension=1, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=1, order_cap=1, name="proj")
        chart = Chart(sp, ConnectionData(sp))
        P = build_projection_P(chart, "D")
        w = check_morphism_equation(P, max_arity=3, assert_cap=sp.weight_cap)
        if w is not None:
            return ("morphism", w[0])
        bD = P.target.space
        for b in bD.basis_list():
            if sum(b.index[0]) > sp.x_cap:
                continue
            e = bD.element({b: 1})
            if P.f1(chart.tau_nu_inverse(e)) != e:
                return ("section", b)
        zero_forms = [b for b in P.source.space.basis_list() if not b.index[1]]
        for wd in iter_words(P.source.space, 2):
            if all(b in zero_forms for b in wd):
                if not P.f_word(2, wd).is_zero():
                    return ("zero-forms", wd)
        L, L_inv, F, prod, image = build_splitting(chart, "D", P)
        for wd in iter_words(P.source.space, 3):
            if not F.f_word(3, wd).is_zero():
                return ("arity-3", wd)
        if not morphisms_equal(compose_morphisms(L_inv, L),
                               identity_morphism(L.source),
                               max_arity=2, assert_cap=sp.weight_cap):
            return "left identity"
        cap = sp.weight_cap
        for b in prod.space.basis_list():
            if b.index[0] == 0 and sum(b.index[1][0]) > sp.x_cap:
                continue
            z = prod.space.element({b: 1})
            if not (L.f1(L_inv.f1(z)) - z).reduce_to(cap).is_zero():
                return ("right identity", b)
        return None
    ctx.run("fedosov.projection-splitting",
            "projection morphism through arity 3 and the two-sided splitting",
            projection)

    def two_connection():
        sp = ChartSpaces(dimension=1, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=1, order_cap=1, name="twoc")
        flat = Chart(sp, ConnectionData(sp))
        curved = Chart(sp, ConnectionData(
            sp, christoffel={(0, 0, 0): {(0,): 1}}))
        h = solve_h(flat, curved)
        report = two_connection_checks(flat, curved, h,
                                       homotopy_arity=scenario.homotopy_arity)
        if not (report.tau_compatible and report.nu_compatible
                and report.projections_homotopic):
            return report.witnesses[:1]
        return None
    ctx.run("fedosov.two-connection",
            "gauge generator identities and the certified projection homotopy",
            two_connection)


def suite_theorem(ctx: SuiteContext):
    scenario = ctx.scenario

    def twist_on_projection():
        sp = ChartSpaces(dimension=1, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=1, order_cap=1, name="twp")
        chart = Chart(sp, ConnectionData(sp))
        P = build_projection_P(chart, "D")
        bid = sp.make_omega_id("OD", ((0,), (), (2,), ("D", ((1,),))))
        g = GaugeDatum(P.source.space.element({bid: 1}))
        h = build_twist_homotopy(P, g)
        w = check_morphism_homotopy(h, max_arity=scenario.homotopy_arity)
        if w is not None:
            return w[:2]
        if not morphisms_equal(h.endpoint_morphism(0), P,
                               max_arity=scenario.homotopy_arity,
                               assert_cap=sp.weight_cap):
            return "endpoint 0"
        return None
    ctx.run("theorem.twist-on-projection",
            "the projection twisted along a gauge orbit stays homotopic",
            twist_on_projection)

    def chain():
        d = scenario.dimension
        sp = ChartSpaces(dimension=d, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=1, order_cap=1, name="chain")
        conn = Chart(sp, ConnectionData(sp, christoffel=scenario.christoffel,
                                        r_terms=scenario.r))
        conn_p = Chart(sp, ConnectionData(
            sp, christoffel=scenario.christoffel_prime,
            r_terms=scenario.r_prime))
        report = theorem_pipeline(conn, conn_p,
                                  homotopy_arity=scenario.homotopy_arity)
        if not report.ok:
            bad = [s for s in report.segments if s[1] is not None]
            bad += [e for e in report.equalities if not e[1]]
            return bad[:1]
        return None
    ctx.run("theorem.formality-chain",
            "the two assembled formalities are joined by certified segments",
            chain)

    def mirror_identity():
        d = scenario.dimension
        sp = ChartSpaces(dimension=d, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=1, order_cap=1, name="mirror")
        conn = Chart(sp, ConnectionData(
            sp, christoffel=scenario.christoffel_prime,
            r_terms=scenario.r_prime))
        F = assemble_global_formality(conn, mirror_identity_instance(conn))
        if not morphisms_equal(F, identity_morphism(F.source),
                               max_arity=3, assert_cap=sp.weight_cap):
            return "not the identity"
        return None
    ctx.run("theorem.mirror-identity",
            "the trivial fiberwise instance assembles to the identity",
            mirror_identity)

    def star_order_one():
        d = scenario.dimension
        if d < 2 or not scenario.poisson:
            raise CapError("needs dimension >= 2 and a bivector")
        sp = ChartSpaces(dimension=d, weight_cap=1,
                         arity_cap=scenario.caps["arity"],
                         t_cap=scenario.caps["t_degree"],
                         x_cap=min(scenario.x_degree, 2),
                         order_cap=min(scenario.operator_order, 2),
                         name="star")
        conn = Chart(sp, ConnectionData(sp, christoffel=scenario.christoffel,
                                        r_terms=scenario.r))
        conn_p = Chart(sp, ConnectionData(
            sp, christoffel=scenario.christoffel_prime,
            r_terms=scenario.r_prime))
        pi = base_bivector(sp, scenario.poisson)
        report = star_first_order(conn, conn_p, pi)
        if not report.cocycle_ok:
            return "first-order term is not a cocycle"
        if not report.cocycle_prime_ok:
            return "primed first-order term is not a cocycle"
        if report.coboundary_witness is None:
            return "difference is not a coboundary"
        return None
    ctx.run("theorem.star-first-order",
            "first-order star terms are cocycles differing by a coboundary",
            star_order_one)
