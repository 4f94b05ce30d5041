"""One chart with one connection: the full resolution calculus.

delta, its normalized homotopy, the connection with curvature, the recursion
for the connection one-form A, the flat differential D = -delta + nabla +
[A, .], the flat lift tau, the evaluation map nu (with exact operator-table
extraction and its order-induction inverse), and the homotopy Dinv for D.

Every solver re-verifies its defining identities exactly before returning;
there is no trusted path.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from ..graded import (
    BasisId, CapError, GradedElement, InputError, InternalCheckError,
)
from .spaces import (
    ChartSpaces, add_idx, fiber_degree, fiber_order, idx_order, multi_indices,
    sub_idx, unit_idx, zero_index,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class ConnectionData:
    """Christoffel tables (symmetric in the lower indices, polynomial
    coefficients) plus the normalization section r (no constant or linear
    fiber terms)."""

    def __init__(self, spaces: ChartSpaces, christoffel=None, r_terms=None):
        self.spaces = spaces
        d = spaces.d
        table = {}
        for (k, i, j), poly in (christoffel or {}).items():
            if not all(0 <= t < d for t in (k, i, j)):
                raise InputError(f"Christoffel index out of range: {(k, i, j)}")
            for xe, c in poly.items():
                if idx_order(xe) > spaces.x_cap:
                    raise InputError("Christoffel tables must respect the x cap")
                key = (k, i, j)
                table.setdefault(key, {})[xe] = table.get(key, {}).get(xe, ZERO) \
                    + Fraction(c)
        # symmetrize and check
        for (k, i, j), poly in list(table.items()):
            other = table.get((k, j, i))
            if other is None:
                table[(k, j, i)] = dict(poly)
            elif other != poly:
                raise InputError(f"Christoffel table not symmetric at {(k, i, j)}")
        self.christoffel = table
        self.r_terms = dict(r_terms or {})

    def r_section(self, chart: "Chart") -> GradedElement:
        """r as a 0-form fiberwise vector field, at least quadratic in y."""
        sp = self.spaces.space("OT")
        terms = {}
        for (ye, k), c in self.r_terms.items():
            if idx_order(ye) < 2:
                raise InputError("r must vanish to second order in the fiber")
            bid = self.spaces.make_omega_id(
                "OT", (zero_index(self.spaces.d), (), tuple(ye), ("T", (k,))))
            if bid is not None:
                terms[bid] = terms.get(bid, ZERO) + Fraction(c)
        return sp.element(terms)


def _insert_dx(dxs, i):
    """(sign, new dxs) for dx^i wedged from the left; (0, None) if present."""
    if i in dxs:
        return 0, None
    pos = sum(1 for s in dxs if s < i)
    return (-1) ** pos, tuple(sorted(dxs + (i,)))


def _remove_dx(dxs, i):
    pos = dxs.index(i)
    return (-1) ** pos, tuple(s for s in dxs if s != i)


class Chart:
    """ChartSpaces + ConnectionData, with all derived operators cached."""

    def __init__(self, spaces: ChartSpaces, conn: ConnectionData):
        self.spaces = spaces
        self.conn = conn
        self.d = spaces.d
        self._cache = {}

    # -- elementary operators -------------------------------------------------

    def _space(self, which):
        return self.spaces.space(which)

    def delta(self, elem: GradedElement) -> GradedElement:
        """delta = "one y becomes a dx": odd derivation, delta(y^i .) = dx^i ."""
        which = self._which(elem)
        sp = self._space(which)
        terms = {}
        for b, c in elem.terms.items():
            xe, dxs, ye, fiber = b.index
            for i in range(self.d):
                if not ye[i]:
                    continue
                sgn, nd = _insert_dx(dxs, i)
                if not sgn:
                    continue
                idx = (xe, nd, sub_idx(ye, unit_idx(self.d, i)), fiber)
                bid = self.spaces.make_omega_id(which, idx)
                if bid is not None:
                    terms[bid] = terms.get(bid, ZERO) + c * sgn * ye[i]
        return sp.element(terms)

    def delta_inv(self, elem: GradedElement) -> GradedElement:
        """Normalized homotopy: (1/(p+q)) "one dx becomes a y", zero on p+q=0."""
        which = self._which(elem)
        sp = self._space(which)
        terms = {}
        for b, c in elem.terms.items():
            xe, dxs, ye, fiber = b.index
            p, q = idx_order(ye), len(dxs)
            if p + q == 0:
                continue
            for i in dxs:
                sgn, nd = _remove_dx(dxs, i)
                idx = (xe, nd, add_idx(ye, unit_idx(self.d, i)), fiber)
                bid = self.spaces.make_omega_id(which, idx)
                if bid is not None:
                    terms[bid] = terms.get(bid, ZERO) + \
                        Fraction(sgn, p + q) * c
        return sp.element(terms)

    def sigma(self, elem: GradedElement) -> GradedElement:
        """Project onto the y-free dx-free part (within the same space)."""
        sp = self._space(self._which(elem))
        return sp.element({b: c for b, c in elem.terms.items()
                           if not b.index[1] and not idx_order(b.index[2])})

    def d_x(self, elem: GradedElement) -> GradedElement:
        """The coefficient differential dx^i d/dx^i."""
        which = self._which(elem)
        sp = self._space(which)
        terms = {}
        for b, c in elem.terms.items():
            xe, dxs, ye, fiber = b.index
            for i in range(self.d):
                if not xe[i]:
                    continue
                sgn, nd = _insert_dx(dxs, i)
                if not sgn:
                    continue
                idx = (sub_idx(xe, unit_idx(self.d, i)), nd, ye, fiber)
                bid = self.spaces.make_omega_id(which, idx)
                if bid is not None:
                    terms[bid] = terms.get(bid, ZERO) + c * sgn * xe[i]
        return sp.element(terms)

    def _which(self, elem: GradedElement) -> str:
        tag = elem.space.tag
        return tag.rsplit(":", 1)[1]

    def bracket(self, x: GradedElement, y: GradedElement) -> GradedElement:
        which = self._which(x)
        fn = self._cache.get(("br", which))
        if fn is None:
            fn = self.spaces.omega_bracket_fn(which)
            self._cache[("br", which)] = fn
        memo = self._cache.setdefault(("brmemo", which), {})
        sp = self._space(which)
        terms = {}
        for b1, c1 in x.terms.items():
            for b2, c2 in y.terms.items():
                v = memo.get((b1, b2))
                if v is None:
                    v = fn(b1, b2)
                    memo[(b1, b2)] = v
                c = c1 * c2
                for t, ct in v.terms.items():
                    s = terms.get(t, ZERO) + c * ct
                    if s:
                        terms[t] = s
                    else:
                        del terms[t]
        return sp.element(terms)

    def _memo_linear(self, key, which, elem, basis_fn) -> GradedElement:
        """Apply a linear operator through a per-basis memo."""
        memo = self._cache.setdefault((key, which), {})
        sp = self._space(which)
        terms = {}
        for b, c in elem.terms.items():
            v = memo.get(b)
            if v is None:
                v = basis_fn(b)
                memo[b] = v
            for t, ct in v.terms.items():
                s = terms.get(t, ZERO) + c * ct
                if s:
                    terms[t] = s
                else:
                    del terms[t]
        return sp.element(terms)

    def t0_to_d(self, elem: GradedElement) -> GradedElement:
        """Relabel fiberwise vector fields as first-order operators (the
        arity-1 inclusion of polyvectors into operators)."""
        sp = self._space("OD")
        terms = {}
        for b, c in elem.terms.items():
            xe, dxs, ye, (kind, J) = b.index
            if kind != "T" or len(J) != 1:
                raise InputError("only fiberwise vector fields relabel to operators")
            idx = (xe, dxs, ye, ("D", (unit_idx(self.d, J[0]),)))
            bid = self.spaces.make_omega_id("OD", idx)
            if bid is not None:
                terms[bid] = terms.get(bid, ZERO) + c
        return sp.element(terms)

    # -- connection ------------------------------------------------------------

    def gamma_hat(self, which="OT") -> GradedElement:
        key = ("gamma", which)
        if key not in self._cache:
            sp = self._space(which)
            terms = {}
            for (k, i, j), poly in self.conn.christoffel.items():
                for xe, c in poly.items():
                    fiber = ("T", (k,)) if which == "OT" \
                        else ("D", (unit_idx(self.d, k),))
                    idx = (xe, (i,), tuple(unit_idx(self.d, j)), fiber)
                    bid = self.spaces.make_omega_id(which, idx)
                    if bid is not None:
                        terms[bid] = terms.get(bid, ZERO) + Fraction(c)
            self._cache[key] = sp.element(terms)
        return self._cache[key]

    def nabla(self, elem: GradedElement) -> GradedElement:
        which = self._which(elem)
        return self.d_x(elem) - self.bracket(self.gamma_hat(which), elem)

    def curvature(self) -> GradedElement:
        """R = -d GammaHat + [GammaHat, GammaHat]/2 (so that nabla^2 = [R, .])."""
        if "R" not in self._cache:
            g = self.gamma_hat("OT")
            self._cache["R"] = -1 * self.d_x(g) + \
                Fraction(1, 2) * self.bracket(g, g)
        return self._cache["R"]

    def curvature_component(self, i, j, k, l) -> Fraction:
        """(R_{ij})^k_l in the normalization R = -1/2 dx^i dx^j (R_{ij})^k_l y^l d_k."""
        R = self.curvature()
        if i == j:
            return ZERO
        sign = 1 if i < j else -1
        dxs = (min(i, j), max(i, j))
        bid = self.spaces.make_omega_id(
            "OT", (zero_index(self.d), dxs, tuple(unit_idx(self.d, l)), ("T", (k,))))
        return -sign * R.coefficient(bid)

    # -- the A recursion ---------------------------------------------------------

    def a_section(self, which="OT") -> GradedElement:
        """The unique solution of delta A = R + nabla A + [A, A]/2,
        delta_inv A = r, sigma A = 0 (verified)."""
        key = ("A", which)
        if key in self._cache:
            return self._cache[key]
        if which == "OD":
            self._cache[key] = self.t0_to_d(self.a_section("OT"))
            return self._cache[key]
        R = self.curvature()
        r = self.conn.r_section(self)
        a = self._space("OT").zero()
        limit = self.spaces.work_cap + self.spaces.order_cap + 3
        for _ in range(limit):
            new = self.delta(r) + self.delta_inv(
                R + self.nabla(a) + Fraction(1, 2) * self.bracket(a, a))
            if new == a:
                break
            a = new
        else:
            raise InternalCheckError("connection one-form recursion did not converge")
        lhs = self.delta(a)
        rhs = R + self.nabla(a) + Fraction(1, 2) * self.bracket(a, a)
        if not (lhs - rhs).is_zero():
            raise InternalCheckError("connection one-form fails its defining system")
        if not (self.delta_inv(a) - r).is_zero():
            raise InternalCheckError("connection one-form fails delta_inv A = r")
        if not self.sigma(a).is_zero():
            raise InternalCheckError("connection one-form fails sigma A = 0")
        self._cache[key] = a
        return a

    # -- Fedosov differential -----------------------------------------------------

    def b_section(self, which="OT") -> GradedElement:
        """B = D - d as a one-form of fiberwise vector fields."""
        key = ("B", which)
        if key not in self._cache:
            if which == "OD":
                self._cache[key] = self.t0_to_d(self.b_section("OT"))
            else:
                sp = self._space("OT")
                terms = {}
                for i in range(self.d):
                    idx = (zero_index(self.d), (i,), zero_index(self.d),
                           ("T", (i,)))
                    bid = self.spaces.make_omega_id("OT", idx)
                    terms[bid] = terms.get(bid, ZERO) - 1
                delta_gen = sp.element(terms)
                self._cache[key] = delta_gen - self.gamma_hat("OT") \
                    + self.a_section("OT")
        return self._cache[key]

    def fedosov_d(self, elem: GradedElement) -> GradedElement:
        """D = -delta + nabla + [A, .]."""
        which = self._which(elem)

        def on_basis(b):
            e = self._space(which).element({b: 1})
            return -1 * self.delta(e) + self.nabla(e) \
                + self.bracket(self.a_section(which), e)

        return self._memo_linear("D", which, elem, on_basis)

    def hochschild(self, elem: GradedElement) -> GradedElement:
        """The fiberwise operator differential [mu, .] (zero on polyvectors)."""
        which = self._which(elem)
        if which != "OD":
            raise InputError("the operator differential lives on the operator side")
        if "mu" not in self._cache:
            idx = (zero_index(self.d), (), zero_index(self.d),
                   ("D", (zero_index(self.d), zero_index(self.d))))
            bid = self.spaces.make_omega_id("OD", idx)
            self._cache["mu"] = self._space("OD").element({bid: 1})
        mu = self._cache["mu"]
        return self._memo_linear(
            "dM", which, elem,
            lambda b: self.bracket(mu, self._space(which).element({b: 1})))

    def full_d(self, elem: GradedElement) -> GradedElement:
        """D on polyvectors, D + fiberwise operator differential on operators."""
        if self._which(elem) == "OD":
            return self.fedosov_d(elem) + self.hochschild(elem)
        return self.fedosov_d(elem)

    # -- Taylor series and its homotopy --------------------------------------------

    def tau(self, a: GradedElement) -> GradedElement:
        """The flat lift: tau(a) = a + delta_inv(nabla tau + [A, tau])."""
        for b in a.terms:
            if b.index[1] or idx_order(b.index[2]):
                raise InputError("flat lifts take y-free dx-free inputs")
        key = ("tau", tuple(sorted(a.terms.items())))
        if key in self._cache:
            return self._cache[key]
        which = self._which(a)
        A = self.a_section(which)
        t = a
        limit = self.spaces.work_cap + self.spaces.order_cap + 3
        for _ in range(limit):
            new = a + self.delta_inv(self.nabla(t) + self.bracket(A, t))
            if new == t:
                break
            t = new
        else:
            raise InternalCheckError("flat lift recursion did not converge")
        self._cache[key] = t
        return t

    def d_inv(self, elem: GradedElement) -> GradedElement:
        """Dinv = -(sum_k K^k) delta_inv with K = [delta_inv, nabla + [A, .]];
        the homotopy for D."""
        which = self._which(elem)
        A = self.a_section(which)

        def K(y):
            inner = self.nabla(y) + self.bracket(A, y)
            return self.delta_inv(inner) - (
                self.nabla(self.delta_inv(y)) +
                self.bracket(A, self.delta_inv(y)))

        def on_basis(b):
            term = self.delta_inv(self._space(which).element({b: 1}))
            acc = term
            limit = self.spaces.work_cap + self.spaces.order_cap + 4
            count = 0
            while not term.is_zero():
                term = K(term)
                acc = acc + term
                count += 1
                if count > limit:
                    raise InternalCheckError("homotopy series did not terminate")
            return -1 * acc

        return self._memo_linear("Dinv", which, elem, on_basis)

    def tau_sigma(self, elem: GradedElement) -> GradedElement:
        s = self.sigma(elem)
        return self.tau(s) if not s.is_zero() else s

    # -- evaluation map nu ----------------------------------------------------------

    def lift_base(self, b: GradedElement) -> GradedElement:
        """Retag a base-space element as a y-free dx-free section."""
        which = "OT" if b.space.tag.endswith("bT") else "OD"
        sp = self._space(which)
        terms = {}
        for bid, c in b.terms.items():
            xe, fiber = bid.index
            nid = self.spaces.make_omega_id(
                which, (xe, (), zero_index(self.d), fiber))
            terms[nid] = c
        return sp.element(terms)

    def to_base(self, elem: GradedElement) -> GradedElement:
        """Retag a y-free dx-free section as a base-space element."""
        which = self._which(elem)
        base = "bT" if which == "OT" else "bD"
        sp = self._space(base)
        terms = {}
        for bid, c in elem.terms.items():
            xe, dxs, ye, fiber = bid.index
            if dxs or idx_order(ye):
                raise InputError("only y-free dx-free sections map to the base")
            terms[self.spaces.make_base_id(base, xe, fiber)] = c
        return sp.element(terms)

    def jet_table(self, alpha):
        """The operator f -> d_y^alpha tau(f)|_{y=0} as a table
        beta -> polynomial dict (exact extraction by order induction)."""
        key = ("jet", alpha)
        if key in self._cache:
            return self._cache[key]

        def apply_fn(poly):
            # poly: dict xe -> coeff (a base function)
            sp = self._space("OT")
            terms = {}
            for xe, c in poly.items():
                bid = self.spaces.make_omega_id(
                    "OT", (xe, (), zero_index(self.d), ("T", ())))
                terms[bid] = c
            lifted = self.tau(sp.element(terms))
            out = {}
            for bid, c in lifted.terms.items():
                xe, dxs, ye, fiber = bid.index
                if dxs or ye != alpha:
                    continue
                fp = 1
                for a in alpha:
                    for k in range(a):
                        fp *= k + 1
                out[xe] = out.get(xe, ZERO) + c * fp
            return out

        self._cache[key] = extract_operator(apply_fn, self.d, idx_order(alpha))
        return self._cache[key]

    def nu_element(self, w: GradedElement) -> GradedElement:
        """nu of a y-free dx-free section, as a base-space element.

        Polyvectors: the identity on coefficient tables (hence connection
        independent). Operators: substitute the exact jet operator for each
        fiber-derivative slot."""
        which = self._which(w)
        if which == "OT":
            return self.to_base(w)
        base = self._space("bD")
        acc = base.zero()
        for bid, c in w.terms.items():
            xe, dxs, ye, fiber = bid.index
            if dxs or idx_order(ye):
                raise InputError("nu takes y-free dx-free sections")
            _, slots = fiber
            choices = [list(self.jet_table(a).items()) for a in slots]
            for combo in itertools.product(*choices):
                acc = acc + self._nu_expand(base, xe, c, combo)
        return acc

    def _nu_expand(self, base, xe, coeff, combo):
        terms = {}
        polys = [poly for _, poly in combo]
        betas = tuple(beta for beta, _ in combo)
        for exps in itertools.product(*(list(p.items()) for p in polys)):
            total = xe
            c = coeff
            for e, v in exps:
                total = add_idx(total, e)
                c *= v
            bid = self.spaces.make_base_id("bD", total, ("D", betas))
            terms[bid] = terms.get(bid, ZERO) + c
        return base.element(terms)

    def nu_inverse(self, C: GradedElement) -> GradedElement:
        """Inverse of nu on the operator side by order induction; exact, with
        the residual re-checked to vanish."""
        if C.space.tag.endswith("bT"):
            return self.lift_base(C)
        which = "OD"
        sp = self._space(which)
        w = sp.zero()
        remaining = C
        max_order = max((fiber_order(b.index[1]) for b in C.terms), default=0)
        for order in range(max_order, -1, -1):
            terms = {}
            for bid, c in remaining.terms.items():
                xe, fiber = bid.index
                if fiber_order(fiber) != order:
                    continue
                nid = self.spaces.make_omega_id(
                    which, (xe, (), zero_index(self.d), fiber))
                if nid is not None:
                    terms[nid] = c
            w = w + sp.element(terms)
            remaining = C - self.nu_element(w)
        if not remaining.is_zero():
            raise CapError("nu inversion exceeded the operator caps")
        return w

    def tau_nu_inverse(self, C: GradedElement) -> GradedElement:
        return self.tau(self.nu_inverse(C))

    # -- evaluation forms (used to cross-check nu) --------------------------------

    def apply_section(self, w: GradedElement, args):
        """Apply an operator- or polyvector-valued section to 0-form function
        sections; returns a function-type section (0-form polyvector of
        degree -1) with the section's form factor."""
        which = self._which(w)
        sp = self._space(which)
        acc = sp.zero()
        arg_polys = [_as_fiber_poly(a) for a in args]
        for bid, c in w.terms.items():
            xe, dxs, ye, (kind, data) = bid.index
            if kind == "D":
                if len(data) != len(args):
                    raise InputError("argument count does not match the valence")
                vals = [_poly_derive(arg_polys[i], data[i], self.d)
                        for i in range(len(data))]
                for combo in itertools.product(*(list(v.items()) for v in vals)):
                    coeff = c
                    tot_x, tot_y = xe, ye
                    for (xa, ya), v in combo:
                        coeff *= v
                        tot_x = add_idx(tot_x, xa)
                        tot_y = add_idx(tot_y, ya)
                    nid = self.spaces.make_omega_id(
                        which, (tot_x, dxs, tot_y, ("D", ())))
                    if nid is not None:
                        acc = acc + sp.element({nid: coeff})
            else:
                if len(data) != len(args):
                    raise InputError("argument count does not match the valence")
                for perm in itertools.permutations(range(len(data))):
                    sgn = _perm_sign(perm)
                    vals = [_poly_derive(arg_polys[perm[i]],
                                         unit_idx(self.d, data[i]), self.d)
                            for i in range(len(data))]
                    for combo in itertools.product(
                            *(list(v.items()) for v in vals)):
                        coeff = c * sgn
                        tot_x, tot_y = xe, ye
                        for (xa, ya), v in combo:
                            coeff *= v
                            tot_x = add_idx(tot_x, xa)
                            tot_y = add_idx(tot_y, ya)
                        nid = self.spaces.make_omega_id(
                            which, (tot_x, dxs, tot_y, ("T", ())))
                        if nid is not None:
                            acc = acc + sp.element({nid: coeff})
        return acc

    def nu_map(self, w: GradedElement, args):
        """nu(w)(f_0, ..., f_k) = sigma(w(tau f_0, ..., tau f_k)) for base
        functions; returns the base function (as a polynomial element)."""
        lifts = [self.tau(self.lift_base(f)) for f in args]
        val = self.sigma(self.apply_section(w, lifts))
        return self.to_base(_retag_function(self, val))


def _retag_function(chart: Chart, elem: GradedElement) -> GradedElement:
    """Functions computed on the operator side live in ("D", ()) slots; view
    them as polyvector-side functions for base conversion uniformity."""
    which = chart._which(elem)
    if which == "OT":
        return elem
    sp = chart._space("OT")
    terms = {}
    for bid, c in elem.terms.items():
        xe, dxs, ye, fiber = bid.index
        if fiber not in (("D", ()), ("T", ())):
            raise InputError("not a function-type section")
        nid = chart.spaces.make_omega_id("OT", (xe, dxs, ye, ("T", ())))
        if nid is not None:
            terms[nid] = c
    return sp.element(terms)


def _as_fiber_poly(elem: GradedElement):
    """A function-type 0-form as {(xe, ye): coeff}."""
    out = {}
    for bid, c in elem.terms.items():
        xe, dxs, ye, fiber = bid.index
        if dxs or fiber not in (("T", ()), ("D", ())):
            raise InputError("arguments must be function-type 0-forms")
        out[(xe, ye)] = out.get((xe, ye), ZERO) + c
    return out


def _poly_derive(poly, alpha, d):
    """d_y^alpha of {(xe, ye): coeff} -> same shape."""
    from .spaces import falling_power
    out = {}
    for (xe, ye), c in poly.items():
        fp = falling_power(ye, alpha)
        if fp:
            key = (xe, sub_idx(ye, alpha))
            out[key] = out.get(key, ZERO) + c * fp
    return out


def _perm_sign(perm):
    sgn = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sgn = -sgn
    return sgn


def extract_operator(apply_fn, d, max_order):
    """Exact coefficient extraction of a differential operator of order
    <= max_order from its action on monomials: returns beta -> poly dict."""
    table = {}
    for beta in sorted(multi_indices(d, max_order), key=idx_order):
        # apply to x^beta and subtract the lower-order parts
        mono = {beta: ONE}
        got = dict(apply_fn(mono))
        for gamma, poly in table.items():
            fp = Fraction(_falling(beta, gamma))
            if fp:
                shifted = sub_idx(beta, gamma)
                for xe, c in poly.items():
                    key = add_idx(xe, shifted)
                    got[key] = got.get(key, ZERO) - c * fp
                    if not got[key]:
                        del got[key]
        fact = Fraction(_falling(beta, beta))
        coeff_poly = {xe: c / fact for xe, c in got.items() if c}
        if coeff_poly:
            table[beta] = coeff_poly
    return table


def _falling(e, g):
    from .spaces import falling_power
    return falling_power(e, g)
