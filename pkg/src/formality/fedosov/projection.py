"""The projection morphism from a resolution onto its base, the splitting
into base x contractible factors, and the product machinery they need.

The homotopy for D extends to symmetric powers by the tensor trick
    (Dinv)_n(x_1 v ... v x_n) =
        sum_i +-(tau sigma x_1) v ... v (tau sigma x_{i-1}) v Dinv x_i v ... v x_n
with the Koszul sign of moving the degree -1 homotopy past the first i-1
factors.  The projection's structure maps are then

    P^1_1 = nu o sigma,
    P^1_{k+1} = (Q^1_{base,2} o P^2_{k+1} + P^1_k o Q^k_{res,k+1}) o (Dinv)_{k+1},

(the relative sign of the second summand is calibrated against the morphism
equation under this package's Q_1 = -d convention; see the sign-search in
tests/test_fedosov_projection.py),

and the complementary morphism of the splitting is

    F^1_1 = D Dinv + Dinv D,   F^1_n = -Dinv o F^1_{n-1} o (Q_res)^{n-1}_n,

which vanishes for n >= 3 because Dinv Dinv = 0.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from ..graded import BasisId, GradedElement, InputError, Space, normalize_word
from ..linfty import (
    LInftyMorphism, LInftyStructure, SymElement, TaylorTable,
    extend_codifferential, extend_morphism, from_dgla,
)
from .chart import Chart
from .structures import base_structures, omega_structures, omega_dglas


def d_inv_extension(chart: Chart, n: int, which: str):
    """(Dinv)_n as a function canonical word -> SymElement over the
    resolution space."""
    space = chart.spaces.space("O" + which)

    def apply(word) -> SymElement:
        out = SymElement(space)
        for i in range(n):
            sign = 1
            if sum(b.shifted_degree for b in word[:i]) % 2:
                sign = -1
            factors = []
            for j, b in enumerate(word):
                e = space.element({b: 1})
                if j < i:
                    factors.append(chart.tau_sigma(e))
                elif j == i:
                    factors.append(chart.d_inv(e))
                else:
                    factors.append(e)
            if any(f.is_zero() for f in factors):
                continue
            for combo in itertools.product(*(f.terms.items() for f in factors)):
                coeff = Fraction(sign)
                for _, c in combo:
                    coeff *= c
                out.add_word(tuple(b for b, _ in combo), coeff)
        return out

    return apply


def build_projection_P(chart: Chart, side: str, source: LInftyStructure = None,
                       target: LInftyStructure = None) -> LInftyMorphism:
    """The projection onto the base with first map nu o sigma; higher maps by
    the recursion through the extended homotopy. side is "T" or "D"."""
    if side not in ("T", "D"):
        raise InputError("side must be 'T' or 'D'")
    if source is None or target is None:
        oT, oD = omega_structures(chart)
        bT, bD = base_structures(chart.spaces)
        source = source or (oT if side == "T" else oD)
        target = target or (bT if side == "T" else bD)
    P = LInftyMorphism(source, target, {})

    def p1(word):
        e = source.space.element({word[0]: 1})
        return chart.nu_element(chart.sigma(e))

    P.taylor[1] = TaylorTable(1, source.space, target.space, p1, name=f"P{side}1")

    def make(n):
        ext = d_inv_extension(chart, n, side)

        def fn(word):
            se = ext(word)
            acc = target.space.zero()
            if se.is_zero():
                return acc
            ext2 = extend_morphism(P, n, 2)
            down = extend_codifferential(source, n, n - 1)
            for factors, coeff in se.items():
                part2 = ext2(factors)
                for w2, c2 in part2.items():
                    acc = acc + (coeff * c2) * target.q_word(2, w2)
                partd = down(factors)
                for wd, cd in partd.items():
                    acc = acc + (coeff * cd) * P.taylor[n - 1].on_word(wd)
            return acc
        return TaylorTable(n, source.space, target.space, fn, name=f"P{side}{n}")

    for n in range(2, source.trunc.arity_cap + 1):
        P.taylor[n] = make(n)
    return P


class ImageFactor:
    """The image of the D-homotopy projector id - (lift o project): exactly
    the span of the monomials carrying a fiber coordinate or a form factor,
    which is closed under the full differential.  Realized as its own space
    with retagging in both directions."""

    def __init__(self, chart: Chart, side: str):
        self.chart = chart
        self.side = side
        res = chart.spaces.space("O" + side)
        self.res_space = res
        self.tag = f"{chart.spaces.name}:im{side}"
        ids = [BasisId(self.tag, b.index, b.degree, b.weight)
               for b in res.iter_basis()
               if b.index[1] or sum(b.index[2])]
        self.space = Space(self.tag, res.trunc, ids, min_weight=res.min_weight)

        def q1(word):
            e = self.unwrap(self.space.element({word[0]: 1}))
            return self.wrap(chart.full_d(e))

        self.structure = LInftyStructure(
            self.space, {1: TaylorTable(1, self.space, self.space,
                                        lambda w: -1 * q1(w), name="Qim")},
            zero_above=1)

    def wrap(self, elem: GradedElement) -> GradedElement:
        terms = {}
        for b, c in elem.terms.items():
            if not (b.index[1] or sum(b.index[2])):
                raise InputError(f"element leaves the image factor at {b}")
            terms[BasisId(self.tag, b.index, b.degree, b.weight)] = c
        return self.space.element(terms)

    def unwrap(self, elem: GradedElement) -> GradedElement:
        terms = {BasisId(self.res_space.tag, b.index, b.degree, b.weight): c
                 for b, c in elem.terms.items()}
        return self.res_space.element(terms)


def complement_morphism(chart: Chart, side: str, source: LInftyStructure,
                        image: ImageFactor = None) -> LInftyMorphism:
    """F: resolution -> image factor, F_1 = D Dinv + Dinv D, with the single
    arity-2 correction; arity >= 3 vanishes by Dinv Dinv = 0."""
    image = image or ImageFactor(chart, side)
    space = source.space

    def f1(word):
        e = space.element({word[0]: 1})
        return image.wrap(chart.fedosov_d(chart.d_inv(e)) +
                          chart.d_inv(chart.fedosov_d(e)))

    tab1 = TaylorTable(1, space, image.space, f1, name="F1")
    F = LInftyMorphism(source, image.structure, {1: tab1})

    def make(n):
        def fn(word):
            down = extend_codifferential(source, n, n - 1)(word)
            acc = space.zero()
            for wd, cd in down.items():
                acc = acc + cd * image.unwrap(F.taylor[n - 1].on_word(wd))
            return image.wrap(-1 * chart.d_inv(acc))
        return TaylorTable(n, space, image.space, fn, name=f"F{n}")

    for n in range(2, source.trunc.arity_cap + 1):
        F.taylor[n] = make(n)
    return F


# -- direct sums ---------------------------------------------------------------

def direct_sum_space(name: str, s1: Space, s2: Space) -> Space:
    ids = [BasisId(name, (0, b.index), b.degree, b.weight) for b in s1.iter_basis()]
    ids += [BasisId(name, (1, b.index), b.degree, b.weight) for b in s2.iter_basis()]
    trunc = s1.trunc
    return Space(name, trunc, ids, min_weight=min(s1.min_weight, s2.min_weight))


class DirectSum:
    """Product of two structures: componentwise Taylor maps, zero on mixed
    words."""

    def __init__(self, name, Q1: LInftyStructure, Q2: LInftyStructure):
        self.Q1, self.Q2 = Q1, Q2
        self.space = direct_sum_space(name, Q1.space, Q2.space)
        self.name = name
        taylor = {}
        tops = set(Q1.taylor) | set(Q2.taylor)
        for n in tops:
            taylor[n] = TaylorTable(n, self.space, self.space,
                                    self._make(n), name=f"Qsum{n}")
        za1 = Q1.zero_above if Q1.zero_above is not None else Q1.trunc.arity_cap
        za2 = Q2.zero_above if Q2.zero_above is not None else Q2.trunc.arity_cap
        self.structure = LInftyStructure(self.space, taylor,
                                         zero_above=max(za1, za2))

    def _make(self, n):
        def fn(word):
            sides = {b.index[0] for b in word}
            if len(sides) != 1:
                return self.space.zero()
            side = sides.pop()
            Q = self.Q1 if side == 0 else self.Q2
            inner_space = Q.space
            inner = []
            for b in word:
                matches = [ib for ib in [self._unwrap(b, inner_space)] if ib]
                inner.append(matches[0])
            w = normalize_word(inner)
            if w.is_zero():
                return self.space.zero()
            val = Q.q_word(len(word), w.factors)
            return Fraction(w.sign) * self.inject(side, val)
        return fn

    def _unwrap(self, b: BasisId, inner_space: Space):
        return BasisId(inner_space.tag, b.index[1], b.degree, b.weight)

    def inject(self, side, elem: GradedElement) -> GradedElement:
        terms = {}
        for b, c in elem.terms.items():
            terms[BasisId(self.name, (side, b.index), b.degree, b.weight)] = c
        return self.space.element(terms)

    def project(self, side, elem: GradedElement) -> GradedElement:
        inner = (self.Q1 if side == 0 else self.Q2).space
        terms = {}
        for b, c in elem.terms.items():
            if b.index[0] == side:
                terms[BasisId(inner.tag, b.index[1], b.degree, b.weight)] = c
        return inner.element(terms)


def build_splitting(chart: Chart, side: str, P: LInftyMorphism = None):
    """L = P (+) F into base x image, its strict-first inverse via the closed
    form (tau o nu^{-1}) (+) unwrap, and the product container."""
    if P is None:
        P = build_projection_P(chart, side)
    source = P.source
    image = ImageFactor(chart, side)
    F = complement_morphism(chart, side, source, image)
    prod = DirectSum(f"{chart.spaces.name}:split{side}", P.target, image.structure)

    def make(n):
        def fn(word):
            acc = prod.inject(0, P.f_word(n, word))
            if n in F.taylor:
                acc = acc + prod.inject(1, F.f_word(n, word))
            return acc
        return TaylorTable(n, source.space, prod.space, fn, name=f"L{n}")

    taylor = {n: make(n) for n in set(P.taylor) | set(F.taylor)}
    L = LInftyMorphism(source, prod.structure, taylor)

    def first_inverse(b: BasisId) -> GradedElement:
        side_idx, idx = b.index
        if side_idx == 0:
            base_elem = P.target.space.element(
                {BasisId(P.target.space.tag, idx, b.degree, b.weight): 1})
            return chart.tau_nu_inverse(base_elem)
        return source.space.element(
            {BasisId(source.space.tag, idx, b.degree, b.weight): 1})

    from ..linfty import invert_strict_first
    L_inv = invert_strict_first(L, first_inverse=first_inverse)
    return L, L_inv, F, prod, image
