"""Chart-level spaces on R^d with polynomial data.

Monomial encodings (all tuples, hence hashable BasisId indices):

* base polynomials: exponent tuples ``xe`` of length d;
* forms: strictly ascending tuples ``dxs`` of 0-based dx indices;
* fiber coordinates: exponent tuples ``ye``;
* fiber parts: ``("T", J)`` a strictly ascending wedge of fiber-derivative
  indices (degree len(J) - 1), or ``("D", slots)`` an ordered tuple of
  fiber-derivative multi-indices (degree len(slots) - 1, one slot per
  operator argument).

Filtration weight: #dx + |ye| - (#wedge factors resp. total slot order).
Base spaces carry weight 0 throughout.

The Schouten bracket is realized through odd fiber variables (left
derivatives, interleave signs); the Gerstenhaber bracket through slot
insertion with multi-index Leibniz distribution.  Both are calibrated by the
DgLie axiom checks run on the fiberwise structures.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from ..graded import BasisId, InputError, Space, TruncationContext

ZERO = Fraction(0)


# -- multi-index helpers -----------------------------------------------------

def zero_index(d):
    return (0,) * d


def add_idx(a, b):
    return tuple(x + y for x, y in zip(a, b))


def sub_idx(a, b):
    return tuple(x - y for x, y in zip(a, b))


def idx_order(a):
    return sum(a)


def unit_idx(d, i):
    return tuple(1 if j == i else 0 for j in range(d))


def multi_indices(d, max_total):
    """All multi-indices of length d with total degree <= max_total."""
    if d == 0:
        yield ()
        return
    for total in range(max_total + 1):
        for head in range(total + 1):
            for rest in _fixed_total(d - 1, total - head):
                yield (head,) + rest


def _fixed_total(d, total):
    if d == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for rest in _fixed_total(d - 1, total - head):
            yield (head,) + rest


def falling_power(e, g):
    """coefficient of d^g y^e = e!/(e-g)! per dimension; 0 if g > e."""
    c = 1
    for ei, gi in zip(e, g):
        if gi > ei:
            return 0
        for k in range(gi):
            c *= ei - k
    return c


def index_splits(alpha, parts):
    """All ways to write alpha as an ordered sum of `parts` multi-indices,
    with the product-of-binomials multiplicity."""
    d = len(alpha)
    per_dim = []
    for i in range(d):
        per_dim.append(list(_dim_splits(alpha[i], parts)))
    for combo in itertools.product(*per_dim):
        coeff = 1
        split = []
        for j in range(parts):
            split.append(tuple(c[0][j] for c in combo))
        for c in combo:
            coeff *= c[1]
        yield tuple(split), coeff


def _dim_splits(total, parts):
    """(composition, multinomial coefficient) of one dimension."""
    from math import comb
    if parts == 1:
        yield (total,), 1
        return
    for head in range(total + 1):
        for tail, c in _dim_splits(total - head, parts - 1):
            yield (head,) + tail, c * comb(total, head)


# -- fiber part bookkeeping ---------------------------------------------------

def fiber_degree(fiber):
    kind, data = fiber
    return len(data) - 1


def fiber_order(fiber):
    kind, data = fiber
    if kind == "T":
        return len(data)
    return sum(idx_order(a) for a in data)


def wedge_merge(j1, j2):
    """Merge two ascending wedge tuples; (sign, merged) or (0, None)."""
    if set(j1) & set(j2):
        return 0, None
    inv = sum(1 for a in j1 for b in j2 if a > b)
    merged = tuple(sorted(j1 + j2))
    return (-1) ** inv, merged


def theta_derivative(J, j):
    """Left derivative by the odd variable j: (sign, J without j) or (0, None)."""
    if j not in J:
        return 0, None
    pos = J.index(j)
    return (-1) ** pos, tuple(x for x in J if x != j)


# -- fiber brackets (y-monomial level: terms are (coeff, ye, fiber)) ----------

def schouten_fiber(d, t1, t2):
    """Schouten bracket of (coeff, ye, ("T", J)) terms; yields terms.

    Realized as [F, G] = sum_j s1 (d_theta_j F)(d_y_j G) + s2 (d_theta_j G)(d_y_j F)
    with s1 = (-1)^{tG(1+tF)}, s2 = (-1)^{tG} on theta-counts tF, tG.  The
    rule was calibrated against graded antisymmetry, Jacobi (random d=3
    triples), the vector-field Lie bracket [y d_y, d_y] = -d_y, and
    [X, f] = X(f); see tests/test_fedosov_core.py.
    """
    c1, y1, (_, J1) = t1
    c2, y2, (_, J2) = t2
    tf = len(J1)
    tg = len(J2)
    s1 = (-1) ** (tg * (1 + tf))
    s2 = (-1) ** tg
    out = []
    for j in range(d):
        sg1, Jr = theta_derivative(J1, j)
        if sg1 and y2[j]:
            sgn, J = wedge_merge(Jr, J2)
            if sgn:
                ye = add_idx(y1, sub_idx(y2, unit_idx(d, j)))
                out.append((s1 * c1 * c2 * sg1 * sgn * y2[j], ye, ("T", J)))
        sg2, Jr2 = theta_derivative(J2, j)
        if sg2 and y1[j]:
            sgn, J = wedge_merge(Jr2, J1)
            if sgn:
                ye = add_idx(y2, sub_idx(y1, unit_idx(d, j)))
                out.append((s2 * c1 * c2 * sg2 * sgn * y1[j], ye, ("T", J)))
    return out


def gerstenhaber_compose_at(d, t1, i, t2):
    """Insert operator t2 into slot i of t1 (multi-index Leibniz); yields terms."""
    c1, y1, (_, s1) = t1
    c2, y2, (_, s2) = t2
    alpha = s1[i]
    n2 = len(s2)
    out = []
    # distribute alpha over (y^{y2}, slot_1, ..., slot_{n2})
    for split, mult in index_splits(alpha, n2 + 1):
        g0 = split[0]
        fp = falling_power(y2, g0)
        if not fp:
            continue
        new_slots = s1[:i] + tuple(add_idx(b, g) for b, g in zip(s2, split[1:])) \
            + s1[i + 1:]
        ye = add_idx(y1, sub_idx(y2, g0))
        out.append((c1 * c2 * mult * fp, ye, ("D", new_slots)))
    return out


def gerstenhaber_fiber(d, t1, t2):
    """[t1, t2]_G = t1 o t2 - (-1)^{deg deg} t2 o t1 on (coeff, ye, ("D", slots))."""
    _, _, (_, s1) = t1
    _, _, (_, s2) = t2
    p = len(s1) - 1
    q = len(s2) - 1
    out = []
    for i in range(len(s1)):
        sign = (-1) ** (i * q)
        for c, ye, fib in gerstenhaber_compose_at(d, t1, i, t2):
            out.append((sign * c, ye, fib))
    flip = -1 if (p % 2) and (q % 2) else 1
    for i in range(len(s2)):
        sign = (-1) ** (i * p)
        for c, ye, fib in gerstenhaber_compose_at(d, t2, i, t1):
            out.append((-flip * sign * c, ye, fib))
    return out


def fiber_bracket(d, t1, t2):
    kind = t1[2][0]
    if kind != t2[2][0]:
        raise InputError("cannot bracket mixed fiber kinds")
    if kind == "T":
        return schouten_fiber(d, t1, t2)
    return gerstenhaber_fiber(d, t1, t2)


# -- chart spaces --------------------------------------------------------------

class ChartSpaces:
    """All spaces of one chart at fixed caps; two connections on the same
    chart share this object so their sections interoperate.

    weight_cap is the assertion level; arithmetic runs at
    work_cap = weight_cap + headroom, where the default headroom is the
    structural depth of negative weights (d for polyvectors, the slot-order
    cap for operators), which makes every identity asserted at weight_cap
    exact.
    """

    def __init__(self, dimension, weight_cap, arity_cap, t_cap,
                 x_cap, order_cap, dpoly_degree_cap=None, tpoly_degree_cap=None,
                 headroom=None, name="chart"):
        self.d = dimension
        self.weight_cap = weight_cap
        self.x_cap = x_cap
        self.order_cap = order_cap
        self.dpoly_degree_cap = dpoly_degree_cap if dpoly_degree_cap is not None \
            else min(dimension, 2)
        self.tpoly_degree_cap = tpoly_degree_cap if tpoly_degree_cap is not None \
            else dimension - 1
        if headroom is None:
            headroom = max(dimension, order_cap)
        self.headroom = headroom
        self.work_cap = weight_cap + headroom
        self.name = name
        self.trunc = TruncationContext(self.work_cap,
                                       max(arity_cap, self.work_cap),
                                       max(t_cap, self.work_cap))
        self.arity_cap = arity_cap
        self.t_cap = t_cap
        self._spaces = {}

    # tags ------------------------------------------------------------------
    def tag(self, which):
        return f"{self.name}:{which}"

    # fiber part enumeration ---------------------------------------------------
    def tpoly_fibers(self):
        for k in range(-1, self.tpoly_degree_cap + 1):
            for J in itertools.combinations(range(self.d), k + 1):
                yield ("T", J)

    def dpoly_fibers(self):
        for m in range(0, self.dpoly_degree_cap + 2):
            for slots in itertools.product(
                    multi_indices(self.d, self.order_cap), repeat=m):
                if sum(idx_order(a) for a in slots) <= self.order_cap:
                    yield ("D", slots)

    def _omega_ids(self, which, fibers):
        out = []
        for fiber in fibers:
            order = fiber_order(fiber)
            fdeg = fiber_degree(fiber)
            for dxs in itertools.chain.from_iterable(
                    itertools.combinations(range(self.d), q)
                    for q in range(self.d + 1)):
                max_y = self.weight_cap + order - len(dxs)
                for ye in multi_indices(self.d, max(max_y, 0)):
                    weight = len(dxs) + idx_order(ye) - order
                    if weight > self.weight_cap:
                        continue
                    for xe in multi_indices(self.d, self.x_cap):
                        out.append(BasisId(self.tag(which),
                                           (xe, dxs, ye, fiber),
                                           len(dxs) + fdeg, weight))
        return out

    def _base_ids(self, which, fibers):
        out = []
        for fiber in fibers:
            for xe in multi_indices(self.d, self.x_cap):
                out.append(BasisId(self.tag(which), (xe, fiber),
                                   fiber_degree(fiber), 0))
        return out

    def _fiber_ids(self, which, fibers):
        out = []
        for fiber in fibers:
            order = fiber_order(fiber)
            for ye in multi_indices(self.d, self.weight_cap + order):
                weight = idx_order(ye) - order
                if weight <= self.weight_cap:
                    out.append(BasisId(self.tag(which), (ye, fiber),
                                       fiber_degree(fiber), weight))
        return out

    def space(self, which) -> Space:
        if which in self._spaces:
            return self._spaces[which]
        if which == "OT":
            ids = self._omega_ids(which, self.tpoly_fibers())
            min_w = -self.tpoly_degree_cap - 1
        elif which == "OD":
            ids = self._omega_ids(which, self.dpoly_fibers())
            min_w = -self.order_cap
        elif which == "bT":
            ids = self._base_ids(which, self.tpoly_fibers())
            min_w = 0
        elif which == "bD":
            ids = self._base_ids(which, self.dpoly_fibers())
            min_w = 0
        elif which == "fT":
            ids = self._fiber_ids(which, self.tpoly_fibers())
            min_w = -self.tpoly_degree_cap - 1
        elif which == "fD":
            ids = self._fiber_ids(which, self.dpoly_fibers())
            min_w = -self.order_cap
        else:
            raise InputError(f"unknown space {which}")
        trunc = self.trunc if which in ("OT", "OD", "fT", "fD") else \
            TruncationContext(self.work_cap, self.trunc.arity_cap,
                              self.trunc.t_cap)
        sp = Space(self.tag(which), trunc, ids, min_weight=min_w)
        self._spaces[which] = sp
        return sp

    # term-level bracket on Omega monomials -----------------------------------
    def bracket_terms(self, which, id1, id2):
        """[id1, id2] on Omega monomials: yields (coeff, (xe, dxs, ye, fiber))."""
        xe1, dxs1, ye1, f1 = id1
        xe2, dxs2, ye2, f2 = id2
        sgn_form = -1 if (len(dxs2) % 2) and (fiber_degree(f1) % 2) else 1
        wsgn, dxs = wedge_merge(dxs1, dxs2)
        if not wsgn:
            return
        xe = add_idx(xe1, xe2)
        for c, ye, fib in fiber_bracket(self.d, (Fraction(1), ye1, f1),
                                        (Fraction(1), ye2, f2)):
            yield (Fraction(c) * sgn_form * wsgn, (xe, dxs, ye, fib))

    def omega_bracket_fn(self, which):
        space = self.space(which)

        def fn(b1, b2):
            terms = {}
            for c, idx in self.bracket_terms(which, b1.index, b2.index):
                bid = self.make_omega_id(which, idx)
                if bid is None:
                    continue
                terms[bid] = terms.get(bid, ZERO) + c
            return space.element(terms)
        return fn

    def make_omega_id(self, which, idx):
        xe, dxs, ye, fiber = idx
        w = len(dxs) + idx_order(ye) - fiber_order(fiber)
        if w > self.work_cap:
            return None
        return BasisId(self.tag(which), idx,
                       len(dxs) + fiber_degree(fiber), w)

    def make_base_id(self, which, xe, fiber):
        return BasisId(self.tag(which), (xe, fiber), fiber_degree(fiber), 0)

    def make_fiber_id(self, which, ye, fiber):
        w = idx_order(ye) - fiber_order(fiber)
        if w > self.work_cap:
            return None
        return BasisId(self.tag(which), (ye, fiber),
                       fiber_degree(fiber), w)

    def base_bracket_fn(self, which):
        """Bracket on base spaces: x plays the fiber-coordinate role.
        x-degrees are never truncated (exact polynomial arithmetic); the x cap
        only bounds basis enumeration."""
        space = self.space(which)

        def fn(b1, b2):
            xe1, f1 = b1.index
            xe2, f2 = b2.index
            terms = {}
            for c, xe, fib in fiber_bracket(self.d, (Fraction(1), xe1, f1),
                                            (Fraction(1), xe2, f2)):
                bid = self.make_base_id(which, xe, fib)
                terms[bid] = terms.get(bid, ZERO) + Fraction(c)
            return space.element(terms)
        return fn

    def fiber_bracket_fn(self, which):
        space = self.space(which)

        def fn(b1, b2):
            ye1, f1 = b1.index
            ye2, f2 = b2.index
            terms = {}
            for c, ye, fib in fiber_bracket(self.d, (Fraction(1), ye1, f1),
                                            (Fraction(1), ye2, f2)):
                bid = self.make_fiber_id(which, ye, fib)
                if bid is None:
                    continue
                terms[bid] = terms.get(bid, ZERO) + Fraction(c)
            return space.element(terms)
        return fn
