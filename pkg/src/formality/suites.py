"""Named verification suites driven by a scenario.

Each check verifies one exact identity (tolerance zero) and is addressable
by name; failures carry a serialized witness, cap overflows are recorded as
skips with the reason. The `law` field names the algebraic identity a check
certifies.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .graded import CapError, FormalPath, StructureError, TruncationContext
from . import fixtures as fx
from .linfty import (
    check_linfty_structure, check_morphism_equation, compose_morphisms,
    from_dgla, identity_morphism, induced_cohomology_map, iter_words,
    morphisms_equal, strict_morphism,
)
from .mc import (
    GaugeDatum, check_homotopy_datum, conjugation_witness, dgla_residual,
    gauge_act, gauge_from_homotopy, homotopy_from_gauge, mc_residual,
    pushforward_mc, solve_homotopy_ode, twist_morphism, twist_structure,
)
from .convolution import (
    build_convolution, build_twist_homotopy, check_morphism_homotopy,
    filtration_weight, mc_gauge_witness_pushforward, transport_postcompose,
    transport_precompose,
)


@dataclass
class CheckRecord:
    name: str
    law: str
    status: str               # pass | fail | skipped
    witness: str = None
    timing_ms: int = 0


@dataclass
class Report:
    records: list = field(default_factory=list)

    def passed(self):
        return all(r.status != "fail" for r in self.records)


class SuiteContext:
    """Carries the scenario and accumulates records for one suite run."""

    def __init__(self, scenario, records):
        self.scenario = scenario
        self.records = records

    def run(self, name, law, fn):
        start = time.monotonic()
        try:
            witness = fn()
            status = "pass" if witness is None else "fail"
            detail = None if witness is None else _short(witness)
        except CapError as exc:
            status, detail = "skipped", f"cap: {exc}"
        except (StructureError, Exception) as exc:  # noqa: BLE001
            status, detail = "fail", f"{type(exc).__name__}: {exc}"
        self.records.append(CheckRecord(
            name=name, law=law, status=status, witness=detail,
            timing_ms=int(1000 * (time.monotonic() - start))))


def _short(witness):
    text = repr(witness)
    return text if len(text) <= 400 else text[:397] + "..."


def _trunc(scenario):
    caps = scenario.caps
    return TruncationContext(caps["filtration"], caps["arity"], caps["t_degree"])


def _fix_a(scenario):
    if scenario.corrupt_bracket:
        return fx.leibniz_breaker(_trunc(scenario))
    return fx.fix_a(_trunc(scenario))


# -- core ---------------------------------------------------------------------

def suite_core(ctx: SuiteContext):
    import itertools
    from .graded import koszul_sign, normalize_word, solve_linear_exact, unshuffles

    def koszul_multiplicative():
        for n in range(1, 5):
            for degs in itertools.product([0, 1], repeat=n):
                for sigma in itertools.permutations(range(n)):
                    for tau in itertools.permutations(range(n)):
                        comp = [sigma[tau[i]] for i in range(n)]
                        after = [degs[sigma[i]] for i in range(n)]
                        if koszul_sign(comp, list(degs)) != \
                                koszul_sign(list(sigma), list(degs)) * \
                                koszul_sign(list(tau), after):
                            return (sigma, tau, degs)
        return None
    ctx.run("core.koszul-multiplicative", "sign composition", koszul_multiplicative)

    def unshuffle_merge():
        algebra, ids = fx.fix_a(_trunc(ctx.scenario))
        basis = fx.mk_even_basis()
        for parts, count in [((2, 1), 3), ((1, 1, 1), 6)]:
            w = normalize_word(basis)
            pieces = unshuffles(w, parts)
            if len(pieces) != count:
                return (parts, len(pieces))
            for blocks, sign in pieces:
                merged = normalize_word(
                    [f for blk in blocks for f in blk.factors], sign)
                if merged.sign != 1:
                    return (parts, blocks)
        return None
    ctx.run("core.unshuffle-merge", "coproduct sections merge with multiplicity",
            unshuffle_merge)

    def path_roundtrip():
        algebra, ids = fx.fix_a(_trunc(ctx.scenario))
        sp = algebra.space
        p = FormalPath([sp.zero(), sp.element({ids["b"]: Fraction(3, 2)}),
                        sp.element({ids["c"]: -2})], sp.trunc.t_cap)
        if p.differentiate().integrate() != p:
            return "differentiate-integrate mismatch"
        if p.evaluate(1) != p.coefficient(0) + p.coefficient(1) + p.coefficient(2):
            return "evaluation mismatch"
        return None
    ctx.run("core.path-calculus", "exact polynomial calculus", path_roundtrip)

    def solver():
        rng = fx.seeded_rng(ctx.scenario.seed)
        for _ in range(3):
            n = 5
            rows = [({j: Fraction(rng.randint(-3, 3)) for j in range(n)},
                     Fraction(rng.randint(-5, 5))) for _ in range(n)]
            sol = solve_linear_exact(rows)
            if not sol.consistent:
                continue
            if sol.kernel:
                continue
            for coeffs, rhs in rows:
                acc = sum((v * sol.particular.get(k, Fraction(0))
                           for k, v in coeffs.items()), Fraction(0))
                if acc != rhs:
                    return (coeffs, rhs, acc)
        bad = solve_linear_exact([({"x": 1}, 1), ({"x": 1}, 2)])
        if bad.consistent:
            return "inconsistency not detected"
        return None
    ctx.run("core.exact-solver", "elimination with certificates", solver)

    def truncation_stability():
        lo_alg, lo_ids = fx.fix_a(TruncationContext(2, 3, 3))
        hi_alg, hi_ids = fx.fix_a(TruncationContext(3, 4, 4))
        Qlo, Qhi = from_dgla(lo_alg), from_dgla(hi_alg)
        lam_lo = FormalPath.constant(lo_alg.space.element({lo_ids["a"]: 1}), 3)
        lam_hi = FormalPath.constant(hi_alg.space.element({hi_ids["a"]: 1}), 4)
        p_lo = solve_homotopy_ode(Qlo, Qlo.space.zero(), lam_lo)
        p_hi = solve_homotopy_ode(Qhi, Qhi.space.zero(), lam_hi)
        for k in range(4):
            if p_lo.coefficient(k).terms != p_hi.coefficient(k).reduce_to(2).terms:
                return k
        return None
    ctx.run("core.truncation-stability",
            "solving at cap N+1 then reducing equals solving at N",
            truncation_stability)


# -- linfty ---------------------------------------------------------------------

def suite_linfty(ctx: SuiteContext):
    scenario = ctx.scenario

    def fixa_structure():
        algebra, _ = _fix_a(scenario)
        Q = from_dgla(algebra, validate=False)
        try:
            algebra.validate()
        except StructureError as exc:
            return str(exc)
        return check_linfty_structure(Q)
    ctx.run("linfty.fixa-structure", "squared codifferential vanishes",
            fixa_structure)

    def fiberwise(d, caps):
        from .fedosov import ChartSpaces, fiberwise_structures

        def chk():
            sp = ChartSpaces(dimension=d, weight_cap=caps[0],
                             arity_cap=scenario.caps["arity"],
                             t_cap=scenario.caps["t_degree"],
                             x_cap=caps[1], order_cap=caps[2],
                             dpoly_degree_cap=caps[3], name=f"fw{d}")
            tpoly, dpoly = fiberwise_structures(sp)
            # ordered-triple Jacobi duplicates the arity-3 word check below
            # (Jacobi is the arity-3 component of the squared codifferential,
            # and symmetric words span over the rationals), so the axiom scan
            # stays quadratic here
            tpoly.validate(assert_cap=sp.weight_cap, triples=(d == 1))
            dpoly.validate(assert_cap=sp.weight_cap, triples=(d == 1))
            w = check_linfty_structure(from_dgla(tpoly, validate=False),
                                       assert_cap=sp.weight_cap)
            if w is not None:
                return w
            return check_linfty_structure(from_dgla(dpoly, validate=False),
                                          assert_cap=sp.weight_cap)
        return chk
    ctx.run("linfty.fiberwise-structures-d1",
            "fiber polyvector and operator algebras are differential graded",
            fiberwise(1, (2, 1, 1, 1)))
    if scenario.dimension >= 2:
        ctx.run("linfty.fiberwise-structures-d2",
                "fiber algebras at dimension 2",
                fiberwise(2, (1, 1, 1, 1)))

    def morphism_checks():
        algebra, ids = fx.fix_a(_trunc(scenario))
        Q = from_dgla(algebra)
        if check_morphism_equation(identity_morphism(Q)) is not None:
            return "identity fails"
        F = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
        if F is None:
            return "generator found no morphism"
        w = check_morphism_equation(F)
        if w is not None:
            return w
        G = fx.solve_arity2_component({"a": 1, "b": 1, "c": 3}, Q, Q)
        from .linfty import invert_strict_first
        H = compose_morphisms(G, F)
        if check_morphism_equation(H) is not None:
            return "composition fails"
        inv = invert_strict_first(F)
        if not morphisms_equal(compose_morphisms(inv, F), identity_morphism(Q)):
            return "left inverse fails"
        if not morphisms_equal(compose_morphisms(F, inv), identity_morphism(Q)):
            return "right inverse fails"
        return None
    ctx.run("linfty.morphisms", "morphism equation, composition, inversion",
            morphism_checks)


# -- mc -------------------------------------------------------------------------

def suite_mc(ctx: SuiteContext):
    scenario = ctx.scenario
    algebra, ids = fx.fix_a(_trunc(scenario))
    Q = from_dgla(algebra)
    rng = fx.seeded_rng(scenario.seed)

    def gauge_engine():
        for i in range(20):
            g = GaugeDatum(fx.random_element(algebra.space, ids, ["a"], rng))
            pi = fx.random_element(algebra.space, ids, ["b", "c"], rng,
                                   nonzero=False)
            out = gauge_act(algebra, g, pi)
            if not dgla_residual(algebra, out).is_zero():
                return ("residual", i)
            w = conjugation_witness(algebra, g, pi, out)
            if w is not None:
                return ("conjugation", i, w[0])
        return None
    ctx.run("mc.gauge-engine",
            "gauge orbits stay Maurer-Cartan and conjugate the differential",
            gauge_engine)

    def roundtrip():
        for i in range(20):
            g0 = GaugeDatum(fx.random_element(algebra.space, ids, ["a"], rng))
            pi0 = fx.random_element(algebra.space, ids, ["b", "c"], rng,
                                    nonzero=False)
            datum = homotopy_from_gauge(algebra, g0, pi0)
            if check_homotopy_datum(Q, datum) is not None:
                return ("datum", i)
            g = gauge_from_homotopy(algebra, datum)
            if g.g != g0.g:
                return ("generator", i)
        return None
    ctx.run("mc.gauge-homotopy-roundtrip",
            "generator curve reproduces the gauge generator exactly", roundtrip)

    def twisting():
        for i in range(10):
            pi = fx.random_element(algebra.space, ids, ["b", "c"], rng,
                                   nonzero=False)
            T = twist_structure(Q, pi)
            w = check_linfty_structure(T)
            if w is not None:
                return ("structure", i, w[0])
            F = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
            TF = twist_morphism(F, pi)
            w = check_morphism_equation(TF)
            if w is not None:
                return ("morphism", i, w[0])
        F = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
        T0 = twist_morphism(F, Q.space.zero())
        for n in (1, 2):
            for word in iter_words(Q.space, n):
                if T0.f_word(n, word) != F.f_word(n, word):
                    return ("zero-twist", n, word)
        return None
    ctx.run("mc.twisting",
            "twists stay structures / morphisms; zero twist is the identity",
            twisting)

    def ode_example():
        lam = FormalPath.constant(algebra.space.element({ids["a"]: 1}),
                                  Q.trunc.t_cap)
        path = solve_homotopy_ode(Q, Q.space.zero(), lam)
        want1 = algebra.space.element({ids["b"]: -1})
        want2 = algebra.space.element({ids["c"]: Fraction(-1, 2)})
        if path.coefficient(1) != want1 or path.coefficient(2) != want2:
            return "closed form mismatch"
        datum = homotopy_from_gauge(
            algebra, GaugeDatum(algebra.space.element({ids["a"]: 1})),
            algebra.space.zero())
        if datum.pi_path != path:
            return "gauge path differs from the unique solution"
        return None
    ctx.run("mc.homotopy-ode", "the unique polynomial solution and its gauge form",
            ode_example)


# -- convolution ------------------------------------------------------------------

def suite_convolution(ctx: SuiteContext):
    scenario = ctx.scenario
    algebra, ids = fx.fix_a(_trunc(scenario))
    Q = from_dgla(algebra)
    conv = build_convolution(Q, Q)
    rng = fx.seeded_rng(scenario.seed)

    def mc_iff():
        for i in range(8):
            alpha = rng.choice([1, -1, 2])
            gamma = rng.choice([1, -1, 2, 3])
            F = fx.solve_arity2_component({"a": alpha, "b": alpha, "c": gamma},
                                          Q, Q)
            if F is None:
                continue
            eq = check_morphism_equation(F) is None
            mc = conv.element_is_zero(conv.mc_residual(conv.from_morphism(F))) \
                is None
            if eq != mc:
                return (i, eq, mc)
        scale = {"a": 1, "b": 1, "c": 2}
        bad = strict_morphism(Q, Q, lambda b: Q.space.element(
            {b: scale[b.index[0]]}))
        eq = check_morphism_equation(bad) is None
        mc = conv.element_is_zero(conv.mc_residual(conv.from_morphism(bad))) is None
        if eq or mc:
            return ("strict non-morphism undetected", eq, mc)
        return None
    ctx.run("convolution.mc-iff-morphism",
            "points of the convolution algebra are morphisms exactly when flat",
            mc_iff)

    def twist_homotopy():
        F = identity_morphism(Q)
        g = GaugeDatum(algebra.space.element({ids["a"]: 1}))
        h = build_twist_homotopy(F, g)
        w = check_morphism_homotopy(h)
        if w is not None:
            return w[:2]
        if not morphisms_equal(h.endpoint_morphism(0), F):
            return "endpoint 0"
        if not morphisms_equal(h.endpoint_morphism(1), F):
            return "endpoint 1 (identity collapse)"
        F2 = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
        h2 = build_twist_homotopy(F2, g)
        w = check_morphism_homotopy(h2)
        if w is not None:
            return w[:2]
        for k in range(1, len(h2.f_coeffs)):
            if filtration_weight(h2.f_coeffs[k], "mixed") < k + 1:
                return ("coefficient weight", k)
        return None
    ctx.run("convolution.twist-homotopy",
            "twisted morphisms are connected by a flat polynomial path",
            twist_homotopy)

    def transports():
        F = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
        g = GaugeDatum(algebra.space.element({ids["a"]: 1}))
        h = build_twist_homotopy(F, g)
        H = fx.solve_arity2_component({"a": 1, "b": 1, "c": 3}, Q, Q)
        post = transport_postcompose(h, H)
        if check_morphism_homotopy(post) is not None:
            return "post transport fails the checker"
        for s in (0, 1):
            if not morphisms_equal(post.endpoint_morphism(s),
                                   compose_morphisms(H, h.endpoint_morphism(s))):
                return ("post endpoint", s)
        pre = transport_precompose(h, H)
        if check_morphism_homotopy(pre) is not None:
            return "pre transport fails the checker"
        for s in (0, 1):
            if not morphisms_equal(pre.endpoint_morphism(s),
                                   compose_morphisms(h.endpoint_morphism(s), H)):
                return ("pre endpoint", s)
        return None
    ctx.run("convolution.transports",
            "compositions transport homotopies with exact endpoints", transports)

    def witness_pushforward():
        F = fx.solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
        g = GaugeDatum(algebra.space.element({ids["a"]: 1}))
        h = build_twist_homotopy(F, g)
        pi = algebra.space.element({ids["b"]: -1, ids["c"]: Fraction(-1, 2)})
        datum = mc_gauge_witness_pushforward(h, pi)
        for s in (0, 1):
            want = pushforward_mc(h.endpoint_morphism(s), pi, check=False)
            if datum.pi_path.evaluate(s) != want:
                return ("endpoint", s)
        m0 = induced_cohomology_map(h.endpoint_morphism(0))
        m1 = induced_cohomology_map(h.endpoint_morphism(1))
        if m0 != m1:
            return "induced maps differ"
        return None
    ctx.run("convolution.witness-pushforward",
            "homotopic morphisms push equivalences to equivalences",
            witness_pushforward)


SUITES = {
    "core": suite_core,
    "linfty": suite_linfty,
    "mc": suite_mc,
    "convolution": suite_convolution,
}
