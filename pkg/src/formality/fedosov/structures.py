"""DGLA and L-infinity structures carried by a chart: the fiberwise pair,
the resolutions with the flat differential, the base pair, and the strict
quasi-isomorphism from the base into each resolution."""
from __future__ import annotations

from fractions import Fraction

from ..graded import GradedElement
from ..linfty import DgLie, LInftyMorphism, LInftyStructure, TaylorTable, from_dgla
from .chart import Chart
from .spaces import ChartSpaces, zero_index


def fiberwise_structures(spaces: ChartSpaces):
    """(polyvector fiber DGLA with zero differential and the odd-variable
    bracket, operator fiber DGLA with the multiplication commutator
    differential and slot-insertion bracket)."""
    fT = spaces.space("fT")
    t_bracket = spaces.fiber_bracket_fn("fT")
    tpoly = DgLie(fT, lambda b: fT.zero(), t_bracket)

    fD = spaces.space("fD")
    d_bracket = spaces.fiber_bracket_fn("fD")
    mu = fD.element({spaces.make_fiber_id(
        "fD", zero_index(spaces.d),
        ("D", (zero_index(spaces.d), zero_index(spaces.d)))): 1})

    def hochschild(b):
        return _bracket_elem(fD, d_bracket, mu, fD.element({b: 1}))

    dpoly = DgLie(fD, hochschild, d_bracket)
    return tpoly, dpoly


def _bracket_elem(space, fn, x, y):
    acc = space.zero()
    for b1, c1 in x.terms.items():
        for b2, c2 in y.terms.items():
            acc = acc + (c1 * c2) * fn(b1, b2)
    return acc


def omega_dglas(chart: Chart):
    """The two resolutions as DGLAs: (Omega T with D, Omega D with
    D + the operator differential)."""
    sT = chart.spaces.space("OT")
    sD = chart.spaces.space("OD")
    brT = chart.spaces.omega_bracket_fn("OT")
    brD = chart.spaces.omega_bracket_fn("OD")
    dT = DgLie(sT, lambda b: chart.fedosov_d(sT.element({b: 1})), brT)
    dD = DgLie(sD, lambda b: chart.full_d(sD.element({b: 1})), brD)
    return dT, dD


def omega_structures(chart: Chart):
    dT, dD = omega_dglas(chart)
    return from_dgla(dT, validate=False), from_dgla(dD, validate=False)


def base_dglas(spaces: ChartSpaces):
    """(base polyvectors with zero differential and the x-variable bracket,
    base operators with the multiplication commutator and insertions)."""
    bT = spaces.space("bT")
    tpoly = DgLie(bT, lambda b: bT.zero(), spaces.base_bracket_fn("bT"))
    bD = spaces.space("bD")
    br = spaces.base_bracket_fn("bD")
    mu = bD.element({spaces.make_base_id(
        "bD", zero_index(spaces.d),
        ("D", (zero_index(spaces.d), zero_index(spaces.d)))): 1})

    def hochschild(b):
        return _bracket_elem(bD, br, mu, bD.element({b: 1}))

    dpoly = DgLie(bD, hochschild, br)
    return tpoly, dpoly


def base_structures(spaces: ChartSpaces):
    tpoly, dpoly = base_dglas(spaces)
    return from_dgla(tpoly, validate=False), from_dgla(dpoly, validate=False)


def tau_nu_inverse_morphism(chart: Chart, side: str,
                            base_structure: LInftyStructure,
                            omega_structure: LInftyStructure) -> LInftyMorphism:
    """The strict quasi-isomorphism base -> resolution, b -> tau(nu^{-1} b)."""
    base_space = base_structure.space

    def f1(word):
        return chart.tau_nu_inverse(base_space.element({word[0]: 1}))

    tab = TaylorTable(1, base_space, omega_structure.space, f1,
                      name=f"tau_nu_inv_{side}")
    return LInftyMorphism(base_structure, omega_structure, {1: tab})


def hkr_fiberwise(chart: Chart, w: GradedElement) -> GradedElement:
    """Arity-1 antisymmetrization: a wedge of fiber derivatives becomes the
    signed average of the slot orderings, dx-linearly."""
    import itertools
    from math import factorial
    from .spaces import unit_idx
    sp = chart.spaces.space("OD")
    terms = {}
    for bid, c in w.terms.items():
        xe, dxs, ye, (kind, J) = bid.index
        if kind != "T":
            raise ValueError("antisymmetrization takes polyvector sections")
        n = len(J)
        norm = Fraction(c, factorial(n))
        for perm in itertools.permutations(range(n)):
            sgn = 1
            for i in range(n):
                for j in range(i + 1, n):
                    if perm[i] > perm[j]:
                        sgn = -sgn
            slots = tuple(unit_idx(chart.d, J[perm[i]]) for i in range(n))
            nid = chart.spaces.make_omega_id("OD", (xe, dxs, ye, ("D", slots)))
            if nid is not None:
                terms[nid] = terms.get(nid, Fraction(0)) + norm * sgn
    return sp.element(terms)
