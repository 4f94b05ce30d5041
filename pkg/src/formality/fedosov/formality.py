"""Assembling global formality morphisms from a pluggable fiberwise
morphism, and the first-order star-product comparison between two
connections."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from ..graded import GradedElement, InputError, InternalCheckError, StructureError
from ..linfty import (
    LInftyMorphism, LInftyStructure, TaylorTable, check_morphism_equation,
    compose_morphisms, identity_morphism, iter_words, morphisms_equal,
)
from .chart import Chart
from .spaces import unit_idx, zero_index
from .structures import (
    base_structures, hkr_fiberwise, omega_structures, tau_nu_inverse_morphism,
)
from .projection import build_projection_P


@dataclass
class FiberwiseFormality:
    """A fiberwise morphism between the resolutions, dx-linear, with the
    declared property that components of arity >= 2 vanish when all inputs
    are fiberwise vector fields.

    ``exact`` instances satisfy the full morphism equation between the
    resolutions; first-order instances (the arity-1 antisymmetrization) are
    chain maps whose arity-1 data feeds the star-product comparison only.
    """

    name: str
    target_side: str              # "T" or "D"
    tables: dict                  # arity -> callable(element) -> element
    exact: bool

    def max_arity(self):
        return max(self.tables, default=0)


def mirror_identity_instance(chart: Chart) -> FiberwiseFormality:
    sp = chart.spaces.space("OT")
    return FiberwiseFormality(
        name="mirror-identity", target_side="T",
        tables={1: lambda e: e}, exact=True)


def hkr_instance(chart: Chart) -> FiberwiseFormality:
    return FiberwiseFormality(
        name="antisymmetrization", target_side="D",
        tables={1: lambda e: hkr_fiberwise(chart, e)}, exact=False)


def check_vector_field_property(chart: Chart, fw: FiberwiseFormality,
                                max_arity=None):
    """Verify that all components of arity >= 2 vanish on words of fiberwise
    vector-field sections (any form degree), on the enumerated basis."""
    sp = chart.spaces.space("OT")
    vf = [b for b in sp.basis_list()
          if b.index[3][0] == "T" and len(b.index[3][1]) == 1]
    top = max_arity or min(fw.max_arity(), 3)
    for n in range(2, top + 1):
        fn = fw.tables.get(n)
        if fn is None:
            continue
        for combo in itertools.combinations_with_replacement(vf, n):
            args = [sp.element({b: 1}) for b in combo]
            if not fn(*args).is_zero():
                raise StructureError(
                    f"{fw.name} violates the vector-field vanishing at {combo}")
    return True


def _twist_tables_by_a(chart: Chart, fw: FiberwiseFormality, source_space,
                       target_space):
    """U^A_n = sum_k U_{n+k}(A^k v .)/k!; trivial for the shipped arity-1
    instances but implemented for nonstrict plug-ins."""
    A = chart.a_section("OT")
    max_f = fw.max_arity()

    def make(n):
        def fn(word):
            acc = target_space.zero()
            k = 0
            while n + k <= max_f:
                if k and A.is_zero():
                    break
                tab = fw.tables.get(n + k)
                if tab is not None:
                    args = [A] * k + [source_space.element({b: 1}) for b in word]
                    acc = acc + Fraction(1, factorial(k)) * tab(*args)
                k += 1
            return acc
        return fn

    return {n: make(n) for n in range(1, max_f + 1)}


def assemble_global_formality(chart: Chart, fw: FiberwiseFormality,
                              check_arity=2):
    """P o U^A o (tau o nu^{-1}) from base polyvectors to the base target.

    The declared vector-field property is verified before use; exact
    instances must pass the morphism equation between the resolutions with
    the flat differentials (checked through check_arity).
    """
    check_vector_field_property(chart, fw)
    oT, oD = omega_structures(chart)
    bT, bD = base_structures(chart.spaces)
    source_res = oT
    target_res = oD if fw.target_side == "D" else oT
    base_target = bD if fw.target_side == "D" else bT

    tables = _twist_tables_by_a(chart, fw, source_res.space, target_res.space)
    taylor = {n: TaylorTable(n, source_res.space, target_res.space, fn,
                             name=f"U{n}")
              for n, fn in tables.items()}
    U = LInftyMorphism(source_res, target_res, taylor)
    if fw.exact:
        witness = check_morphism_equation(U, max_arity=check_arity,
                                          assert_cap=chart.spaces.weight_cap)
        if witness is not None:
            raise StructureError(
                f"{fw.name} declared exact but fails the morphism equation: "
                f"{witness[0]}")
    lift = tau_nu_inverse_morphism(chart, "T", bT, source_res)
    P = build_projection_P(chart, fw.target_side, source=target_res,
                           target=base_target)
    return compose_morphisms(P, compose_morphisms(U, lift))


@dataclass
class StarOrderOneReport:
    cocycle_ok: bool
    cocycle_prime_ok: bool
    coboundary_witness: object
    difference: GradedElement
    c1: GradedElement
    c1_prime: GradedElement

    @property
    def passed(self):
        return self.cocycle_ok and self.cocycle_prime_ok and \
            self.coboundary_witness is not None


def base_bivector(spaces, components) -> GradedElement:
    """components: dict (i, j) i < j -> polynomial dict."""
    bT = spaces.space("bT")
    terms = {}
    for (i, j), poly in components.items():
        if not i < j:
            raise InputError("bivector components are indexed by i < j")
        for xe, c in poly.items():
            bid = spaces.make_base_id("bT", xe, ("T", (i, j)))
            terms[bid] = terms.get(bid, Fraction(0)) + Fraction(c)
    return bT.element(terms)


def first_order_image(chart: Chart, pi: GradedElement) -> GradedElement:
    """The arity-1 composite nu o sigma o HKR o tau o nu^{-1} applied to a
    base bivector: the first-order term of the induced star product."""
    lifted = chart.tau_nu_inverse(pi)
    op = hkr_fiberwise(chart, lifted)
    return chart.nu_element(chart.sigma(op))


def base_hochschild(chart: Chart, C: GradedElement) -> GradedElement:
    """The multiplication-commutator differential on base operators."""
    from .structures import base_dglas
    _, dpoly = base_dglas(chart.spaces)
    return dpoly.d(C)


def star_first_order(chart: Chart, chart2: Chart, pi: GradedElement,
                     report_cls=StarOrderOneReport) -> StarOrderOneReport:
    """Both first-order terms are exact operator cocycles and differ by the
    coboundary of an explicit first-order operator (solved exactly)."""
    c1 = first_order_image(chart, pi)
    c1p = first_order_image(chart2, pi)
    d1 = base_hochschild(chart, c1)
    d2 = base_hochschild(chart, c1p)
    diff = c1 - c1p
    witness = None
    if d1.is_zero() and d2.is_zero():
        witness = _solve_coboundary(chart, diff)
    return report_cls(cocycle_ok=d1.is_zero(), cocycle_prime_ok=d2.is_zero(),
                      coboundary_witness=witness, difference=diff,
                      c1=c1, c1_prime=c1p)


def _solve_coboundary(chart: Chart, diff: GradedElement):
    """Solve dS = diff for a first-order base operator S by exact
    elimination; None when inconsistent."""
    from ..graded import solve_linear_exact
    from .structures import base_dglas
    spaces = chart.spaces
    _, dpoly = base_dglas(spaces)
    bD = spaces.space("bD")
    x_need = max((sum(b.index[0]) for b in diff.terms), default=0) + 1
    unknowns = []
    from .spaces import multi_indices
    for xe in multi_indices(spaces.d, max(spaces.x_cap, x_need)):
        for alpha in multi_indices(spaces.d, spaces.order_cap):
            unknowns.append(spaces.make_base_id("bD", xe, ("D", (alpha,))))
    images = {u: dpoly.d(bD.element({u: 1})) for u in unknowns}
    targets = sorted({t for img in images.values() for t in img.terms}
                     | set(diff.terms))
    rows = []
    for t in targets:
        rows.append(({u: images[u].coefficient(t) for u in unknowns},
                     diff.coefficient(t)))
    sol = solve_linear_exact(rows, unknowns=unknowns)
    if not sol.consistent:
        return None
    S = bD.element(sol.particular)
    if not (dpoly.d(S) - diff).is_zero():
        raise InternalCheckError("coboundary witness fails re-verification")
    return S
