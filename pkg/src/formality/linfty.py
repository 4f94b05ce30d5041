"""Filtered DGLAs and L-infinity structures as Taylor-coefficient tables.

Conventions realized here (adjudicated by the tensor-coalgebra oracle in
tests/test_linfty.py):

* All Koszul signs use shifted degrees, |x| = degree(x) - 1.
* A DGLA becomes an L-infinity structure via Q_1 = -d and
  Q_2(x v y) = -(-1)^{|x|} [x, y] on canonical words.
* The coderivation extension Q_n^i sums over two-block unshuffles
  (n-i+1, i-1): the first block is fed to Q^1_{n-i+1} and wedged back in
  front, the unshuffle Koszul sign is the only sign.
* The coalgebra-morphism extension F_n^j sums over set partitions of the
  word into j blocks (blocks ordered by minimal element), F^1 applied
  blockwise, with the partition's Koszul sign; F has shifted degree 0 so no
  further signs appear.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from .graded import (
    BasisId, GradedElement, InputError, RankError, Space, StructureError,
    SymWord, TruncationContext, ZERO, normalize_word, set_partitions,
    solve_linear_exact, unshuffles,
)


def _sorted_basis(space: Space):
    cache = getattr(space, "_sorted_basis", None)
    if cache is None:
        cache = sorted(space.iter_basis(), key=lambda b: (b.shifted_degree, b))
        space._sorted_basis = cache
    return cache


def iter_words(space: Space, n: int):
    """All canonical basis words of length n (odd squares excluded)."""
    basis = _sorted_basis(space)
    for combo in itertools.combinations_with_replacement(basis, n):
        if any(x == y and x.shifted_degree % 2
               for x, y in zip(combo, combo[1:])):
            continue
        yield combo


class SymElement:
    """Element of Sym^i(L[1]): canonical word tuples with rational coefficients."""

    __slots__ = ("space", "terms")

    def __init__(self, space: Space):
        self.space = space
        self.terms = {}

    def add_word(self, factors, coeff):
        """Accumulate coeff * (factors), normalizing to canonical form."""
        coeff = Fraction(coeff)
        if not coeff:
            return
        w = normalize_word(factors)
        if w.is_zero():
            return
        c = self.terms.get(w.factors, ZERO) + coeff * w.sign
        if c:
            self.terms[w.factors] = c
        else:
            self.terms.pop(w.factors, None)

    def items(self):
        return self.terms.items()

    def is_zero(self):
        return not self.terms


class TaylorTable:
    """Symmetric multilinear map Sym^n -> target, stored sparsely on canonical
    basis words and filled on demand."""

    def __init__(self, arity: int, source: Space, target: Space, fn, name=""):
        self.arity = arity
        self.source = source
        self.target = target
        self._fn = fn
        self.name = name
        self._memo = {}
        self._elem_memo = {}

    def on_word(self, factors) -> GradedElement:
        val = self._memo.get(factors)
        if val is None:
            val = self._fn(factors)
            self._memo[factors] = val
        return val

    def on_elements(self, args) -> GradedElement:
        """Evaluate on a tuple of GradedElements by multilinear expansion
        (memoized: elements are immutable)."""
        if len(args) != self.arity:
            raise InputError(f"{self.name or 'map'} has arity {self.arity}, "
                             f"got {len(args)} arguments")
        cached = self._elem_memo.get(args)
        if cached is not None:
            return cached
        terms = {}
        for combo in itertools.product(*(a.terms.items() for a in args)):
            factors = [b for b, _ in combo]
            coeff = Fraction(1)
            for _, c in combo:
                coeff *= c
            w = normalize_word(factors)
            if w.is_zero():
                continue
            coeff *= w.sign
            for t, ct in self.on_word(w.factors).terms.items():
                s = terms.get(t, ZERO) + coeff * ct
                if s:
                    terms[t] = s
                else:
                    del terms[t]
        acc = GradedElement(self.target, terms)
        self._elem_memo[args] = acc
        return acc

    def on_sym_element(self, se: SymElement) -> GradedElement:
        acc = self.target.zero()
        for factors, coeff in se.items():
            acc = acc + coeff * self.on_word(factors)
        return acc


def zero_table(arity, source, target):
    return TaylorTable(arity, source, target, lambda w: target.zero(), name="0")


class LInftyStructure:
    """Codifferential given by Taylor coefficients Q^1_n, n <= arity cap.

    ``zero_above``: arity above which Taylor coefficients are structurally
    zero (2 for DGLA-backed structures); None when nothing is known beyond
    the arity cap, in which case series demanding higher arities raise
    CapError instead of silently truncating.
    """

    def __init__(self, space: Space, taylor, dgla=None, zero_above=None):
        self.space = space
        self.taylor = dict(taylor)  # arity -> TaylorTable (missing = zero)
        self.dgla = dgla            # backing DGLA when built by from_dgla
        self.trunc = space.trunc
        self.zero_above = zero_above

    def arities(self):
        return sorted(self.taylor)

    @property
    def max_arity(self):
        return max(self.taylor, default=0)

    def q_word(self, n: int, factors) -> GradedElement:
        tab = self.taylor.get(n)
        return tab.on_word(factors) if tab else self.space.zero()

    def q(self, n: int, args) -> GradedElement:
        tab = self.taylor.get(n)
        return tab.on_elements(tuple(args)) if tab else self.space.zero()

    def q1(self, elem: GradedElement) -> GradedElement:
        return self.q(1, (elem,))


class DgLie:
    """A DGLA: degree +1 differential and degree 0 bracket on a basis space."""

    def __init__(self, space: Space, d_fn, bracket_fn):
        self.space = space
        self._d = d_fn             # BasisId -> GradedElement
        self._br = bracket_fn      # (BasisId, BasisId) -> GradedElement
        self._d_memo = {}
        self._br_memo = {}

    def d_basis(self, b) -> GradedElement:
        v = self._d_memo.get(b)
        if v is None:
            v = self._d(b)
            self._d_memo[b] = v
        return v

    def bracket_basis(self, x, y) -> GradedElement:
        key = (x, y)
        v = self._br_memo.get(key)
        if v is None:
            v = self._br(x, y)
            self._br_memo[key] = v
        return v

    def d(self, elem: GradedElement) -> GradedElement:
        acc = self.space.zero()
        for b, c in elem.terms.items():
            acc = acc + c * self.d_basis(b)
        return acc

    def bracket(self, x: GradedElement, y: GradedElement) -> GradedElement:
        acc = self.space.zero()
        for bx, cx in x.terms.items():
            for by, cy in y.terms.items():
                acc = acc + (cx * cy) * self.bracket_basis(bx, by)
        return acc

    def _acc_bracket(self, acc, x, elem_terms, coeff, acap):
        """acc += coeff * [x, elem] as a raw dict, dropping weight > acap."""
        for t, c in elem_terms.items():
            for u, cu in self.bracket_basis(x, t).terms.items():
                if u.weight > acap:
                    continue
                v = acc.get(u, ZERO) + coeff * c * cu
                if v:
                    acc[u] = v
                else:
                    del acc[u]

    def validate(self, pairs=None, triples=True, assert_cap=None):
        """Exhaustive DGLA axioms on basis tuples; StructureError with the
        failing tuple. ``pairs`` may restrict the basis used.

        Composed identities (d^2, Leibniz, Jacobi) are asserted modulo
        weight > assert_cap: in spaces with negative-weight directions the
        working cap exceeds the assertion window by exactly the structural
        headroom, which makes these reductions exact."""
        basis = list(pairs) if pairs is not None else self.space.basis_list()
        cap = self.space.trunc.weight_cap
        acap = cap if assert_cap is None else assert_cap

        def sgn(k):
            return -1 if k % 2 else 1

        for b in basis:
            db = self.d_basis(b)
            if not self.d(db).reduce_to(acap).is_zero():
                raise StructureError(f"d^2 != 0 on {b}")
            for t, _ in db.terms.items():
                if t.degree != b.degree + 1:
                    raise StructureError(f"d not degree +1 on {b}")
                if t.weight < b.weight:
                    raise StructureError(f"d lowers filtration on {b}")
        pair = {}
        for x, y in itertools.product(basis, repeat=2):
            br = self.bracket_basis(x, y)
            pair[(x, y)] = br
            flip = self.bracket_basis(y, x)
            if not (br + sgn(x.degree * y.degree) * flip).is_zero():
                raise StructureError(f"graded antisymmetry fails on ({x}, {y})")
            for t in br.terms:
                if t.degree != x.degree + y.degree:
                    raise StructureError(f"bracket not degree 0 on ({x}, {y})")
                if t.weight < min(x.weight + y.weight, cap + 1):
                    raise StructureError(f"bracket lowers filtration on ({x}, {y})")
            leib = self.d(br) - self.bracket(self.d_basis(x), self.space.element({y: 1}))
            leib = leib - sgn(x.degree) * self.bracket(
                self.space.element({x: 1}), self.d_basis(y))
            if not leib.reduce_to(acap).is_zero():
                raise StructureError(f"Leibniz fails on ({x}, {y})")
        if triples:
            for x, y, z in itertools.product(basis, repeat=3):
                byz = pair[(y, z)]
                bxy = pair[(x, y)]
                bxz = pair[(x, z)]
                if not (byz.terms or bxy.terms or bxz.terms):
                    continue
                acc = {}
                self._acc_bracket(acc, x, byz.terms, 1, acap)
                # -[[x,y],z] accumulated via antisymmetry: [w,z] terms
                s = -sgn(x.degree * y.degree)
                self._acc_bracket(acc, y, bxz.terms, s, acap)
                for t, c in bxy.terms.items():
                    for u, cu in self.bracket_basis(t, z).terms.items():
                        if u.weight > acap:
                            continue
                        v = acc.get(u, ZERO) - c * cu
                        if v:
                            acc[u] = v
                        else:
                            del acc[u]
                if acc:
                    raise StructureError(f"Jacobi fails on ({x}, {y}, {z})")


def from_dgla(algebra: DgLie, validate=True) -> LInftyStructure:
    """Q_1 = -d, Q_2(x v y) = -(-1)^{|x|}[x, y], Q_n = 0 for n >= 3."""
    if validate:
        algebra.validate()
    space = algebra.space

    def q1(word):
        return -1 * algebra.d_basis(word[0])

    def q2(word):
        x, y = word
        sign = -1 if x.shifted_degree % 2 == 0 else 1
        return sign * algebra.bracket_basis(x, y)

    return LInftyStructure(space, {
        1: TaylorTable(1, space, space, q1, name="Q1"),
        2: TaylorTable(2, space, space, q2, name="Q2"),
    }, dgla=algebra, zero_above=2)


def extend_codifferential(Q: LInftyStructure, n: int, i: int):
    """The component Q_n^i: Sym^n -> Sym^i of the coderivation, as a function
    canonical word -> SymElement."""
    if not (1 <= i <= n) or n > Q.trunc.arity_cap:
        raise InputError(f"Q_{n}^{i} outside caps")
    k = n - i + 1

    def apply(factors) -> SymElement:
        out = SymElement(Q.space)
        if Q.taylor.get(k) is None:
            return out
        word = SymWord(factors, 1)
        parts = (k,) if i == 1 else (k, n - k)
        for blocks, sign in unshuffles(word, parts):
            head = blocks[0]
            rest = blocks[1].factors if len(blocks) > 1 else ()
            val = Q.q_word(k, head.factors)
            for b, c in val.terms.items():
                out.add_word((b,) + rest, sign * c)
        return out

    return apply


def extend_morphism(F: "LInftyMorphism", n: int, j: int):
    """The component F_n^j: Sym^n -> Sym^j of the cofree-coalgebra extension,
    as a function canonical word -> SymElement over the target."""
    if not (1 <= j <= n) or n > F.source.trunc.arity_cap:
        raise InputError(f"F_{n}^{j} outside caps")

    def apply(factors) -> SymElement:
        out = SymElement(F.target.space)
        degs = [b.shifted_degree for b in factors]
        for partition in set_partitions(range(n), j):
            if any(F.taylor.get(len(block)) is None for block in partition):
                continue
            flat = [idx for block in partition for idx in block]
            from .graded import koszul_sign
            sign = koszul_sign(flat, degs)
            block_vals = [F.f_word(len(block), tuple(factors[idx] for idx in block))
                          for block in partition]
            for combo in itertools.product(*(v.terms.items() for v in block_vals)):
                coeff = Fraction(sign)
                for _, c in combo:
                    coeff *= c
                out.add_word(tuple(b for b, _ in combo), coeff)
        return out

    return apply


class LInftyMorphism:
    """Taylor components F^1_n: Sym^n(L[1]) -> L'[1] of a coalgebra morphism."""

    def __init__(self, source: LInftyStructure, target: LInftyStructure, taylor):
        self.source = source
        self.target = target
        self.taylor = dict(taylor)

    @property
    def max_arity(self):
        return max(self.taylor, default=0)

    def f_word(self, n: int, factors) -> GradedElement:
        tab = self.taylor.get(n)
        return tab.on_word(factors) if tab else self.target.space.zero()

    def f(self, n: int, args) -> GradedElement:
        tab = self.taylor.get(n)
        return tab.on_elements(tuple(args)) if tab else self.target.space.zero()

    def f1(self, elem: GradedElement) -> GradedElement:
        return self.f(1, (elem,))


def identity_morphism(Q: LInftyStructure) -> LInftyMorphism:
    space = Q.space
    tab = TaylorTable(1, space, space,
                      lambda w: space.element({w[0]: 1}), name="id")
    return LInftyMorphism(Q, Q, {1: tab})


def strict_morphism(Qs, Qt, f1_on_basis, name="F1") -> LInftyMorphism:
    tab = TaylorTable(1, Qs.space, Qt.space, lambda w: f1_on_basis(w[0]), name=name)
    return LInftyMorphism(Qs, Qt, {1: tab})


def _qq_component(Q: LInftyStructure, n: int, factors,
                  exhaustive=False) -> GradedElement:
    """(Q o Q)^1_n on a canonical word."""
    acc = Q.space.zero()
    for i in Q.arities():
        k = n - i + 1
        if k < 1 or Q.taylor.get(k) is None:
            continue
        ext = extend_codifferential(Q, n, i)(factors)
        tab = Q.taylor[i]
        acc = acc + tab.on_sym_element(ext)
    return acc


def _qq_possible(Q: LInftyStructure, n: int) -> bool:
    return any(1 <= n - i + 1 and Q.taylor.get(n - i + 1) is not None
               for i in Q.arities())


def check_linfty_structure(Q: LInftyStructure, max_arity=None, assert_cap=None,
                           exhaustive=False):
    """Verify (Q o Q)^1_n = 0 on every canonical basis word through the arity
    cap; returns None or the first failing (word, value) in canonical order.

    Arities where every summand factors through an absent Taylor table are
    skipped structurally unless ``exhaustive`` is set.
    """
    top = max_arity or Q.trunc.arity_cap
    cap = assert_cap if assert_cap is not None else Q.trunc.weight_cap
    for n in range(1, top + 1):
        if not exhaustive and not _qq_possible(Q, n):
            continue
        for word in iter_words(Q.space, n):
            val = _qq_component(Q, n, word).reduce_to(cap)
            if not val.is_zero():
                return (word, val)
    return None


def check_morphism_equation(F: LInftyMorphism, max_arity=None, assert_cap=None,
                            exhaustive=False):
    """Verify (F Q)^1_n = (Q' F)^1_n on every canonical source basis word;
    returns None or the first failing (word, difference)."""
    Q, Qp = F.source, F.target
    top = max_arity or Q.trunc.arity_cap
    cap = assert_cap if assert_cap is not None else Qp.space.trunc.weight_cap
    maxF = F.max_arity
    for n in range(1, top + 1):
        possible = any(n - i + 1 >= 1 and Q.taylor.get(n - i + 1) is not None
                       for i in F.taylor)
        possible = possible or any(j <= n <= j * maxF for j in Qp.taylor)
        if not exhaustive and not possible:
            continue
        for word in iter_words(Q.space, n):
            fq = F.target.space.zero()
            for i in sorted(F.taylor):
                k = n - i + 1
                if k < 1 or Q.taylor.get(k) is None:
                    continue
                ext = extend_codifferential(Q, n, i)(word)
                fq = fq + F.taylor[i].on_sym_element(ext)
            qf = F.target.space.zero()
            for j in sorted(Qp.taylor):
                if not (j <= n <= j * maxF):
                    continue
                ext = extend_morphism(F, n, j)(word)
                qf = qf + Qp.taylor[j].on_sym_element(ext)
            diff = (fq - qf).reduce_to(cap)
            if not diff.is_zero():
                return (word, diff)
    return None


def compose_morphisms(G: LInftyMorphism, F: LInftyMorphism) -> LInftyMorphism:
    """(G F)^1_n = sum_l G^1_l o F_n^l."""
    if F.target.space.tag != G.source.space.tag:
        raise InputError("composition needs F target == G source")
    taylor = {}
    maxF = F.max_arity
    top = F.source.trunc.arity_cap

    def make(n):
        def fn(word):
            acc = G.target.space.zero()
            for ell in sorted(G.taylor):
                if not (ell <= n <= ell * maxF):
                    continue
                ext = extend_morphism(F, n, ell)(word)
                acc = acc + G.taylor[ell].on_sym_element(ext)
            return acc
        return TaylorTable(n, F.source.space, G.target.space, fn, name=f"(GF){n}")

    for n in range(1, top + 1):
        if any(ell <= n <= ell * maxF for ell in G.taylor):
            taylor[n] = make(n)
    return LInftyMorphism(F.source, G.target, taylor)


def first_map_inverse(F: LInftyMorphism):
    """Invert F^1_1 as a filtered linear map by exact elimination; returns a
    function target-BasisId -> source GradedElement. RankError with a kernel
    witness when F^1_1 is singular."""
    src = F.source.space
    tgt = F.target.space
    src_basis = src.basis_list()
    images = {s: F.f_word(1, (s,)) for s in src_basis}
    # kernel check
    rows = []
    tgt_ids = sorted({t for img in images.values() for t in img.terms})
    for t in tgt_ids:
        rows.append(({s: images[s].coefficient(t) for s in src_basis}, ZERO))
    sol = solve_linear_exact(rows, unknowns=src_basis)
    if sol.consistent and sol.kernel:
        witness = src.element(sol.kernel[0])
        raise RankError(f"first structure map has kernel: {witness}")
    memo = {}

    def inv(b: BasisId) -> GradedElement:
        if b in memo:
            return memo[b]
        rows_b = [({s: images[s].coefficient(t) for s in src_basis},
                   Fraction(1) if t == b else ZERO)
                  for t in sorted(set(tgt_ids) | {b})]
        sol_b = solve_linear_exact(rows_b)
        if not sol_b.consistent:
            raise RankError(f"first structure map does not hit {b}")
        memo[b] = src.element(sol_b.particular)
        return memo[b]

    return inv


def invert_strict_first(F: LInftyMorphism, first_inverse=None) -> LInftyMorphism:
    """Inverse morphism by arity induction:
    G_1 = (F^1_1)^{-1}, G_n(w) = -sum_{l<n} G_l(F_n^l(G_1 w_1 v ... v G_1 w_n)).
    """
    inv = first_inverse or first_map_inverse(F)
    tgt_space = F.target.space
    src_space = F.source.space
    g_tables = {}
    g_tables[1] = TaylorTable(1, tgt_space, src_space,
                              lambda w: inv(w[0]), name="G1")
    G = LInftyMorphism(F.target, F.source, g_tables)
    top = F.source.trunc.arity_cap
    maxF = F.max_arity
    if maxF <= 1:
        return G

    def make(n):
        def fn(word):
            pulled = tuple(inv(b) for b in word)
            acc = src_space.zero()
            for ell in range(1, n):
                if g_tables.get(ell) is None or not (ell <= n <= ell * maxF):
                    continue
                ext = extend_morphism(F, n, ell)
                se = SymElement(F.target.space)
                # expand F_n^l on the tuple of pulled-back elements
                for combo in itertools.product(*(p.terms.items() for p in pulled)):
                    factors = [b for b, _ in combo]
                    coeff = Fraction(1)
                    for _, c in combo:
                        coeff *= c
                    w = normalize_word(factors)
                    if w.is_zero():
                        continue
                    part = ext(w.factors)
                    for fct, c2 in part.items():
                        se.add_word(fct, coeff * w.sign * c2)
                acc = acc + g_tables[ell].on_sym_element(se)
            return -1 * acc
        return TaylorTable(n, tgt_space, src_space, fn, name=f"G{n}")

    for n in range(2, top + 1):
        g_tables[n] = make(n)
    return LInftyMorphism(F.target, F.source, g_tables)


def morphisms_equal(F: LInftyMorphism, G: LInftyMorphism, max_arity=None,
                    assert_cap=None) -> bool:
    """Componentwise table equality on all canonical words through the cap."""
    top = max_arity or F.source.trunc.arity_cap
    cap = assert_cap if assert_cap is not None else \
        F.target.space.trunc.weight_cap
    for n in range(1, top + 1):
        if F.taylor.get(n) is None and G.taylor.get(n) is None:
            continue
        for word in iter_words(F.source.space, n):
            if not (F.f_word(n, word) - G.f_word(n, word)).reduce_to(cap).is_zero():
                return False
    return True


def _rank(rows) -> int:
    rows = [dict(r) for r in rows if r]
    rank = 0
    while rows:
        row = rows.pop()
        if not row:
            continue
        piv = next(iter(sorted(row, key=repr)))
        pv = row[piv]
        rank += 1
        reduced = []
        for r in rows:
            if piv in r:
                f = r[piv] / pv
                nr = {k: v - f * row.get(k, ZERO) for k, v in r.items()}
                nr.update({k: -f * v for k, v in row.items() if k not in r})
                nr = {k: v for k, v in nr.items() if v}
                reduced.append(nr)
            else:
                reduced.append(r)
        rows = [r for r in reduced if r]
    return rank


def q1_cohomology_dims(Q: LInftyStructure):
    """Advisory: dimension of Q^1_1-cohomology per degree on the truncated
    space (exact rank computation)."""
    by_degree = {}
    for b in Q.space.iter_basis():
        by_degree.setdefault(b.degree, []).append(b)
    dims = {}
    for deg, basis in sorted(by_degree.items()):
        im_rows = [Q.q_word(1, (b,)).terms
                   for b in by_degree.get(deg - 1, [])]
        ker_dim = len(basis) - _rank([Q.q_word(1, (b,)).terms for b in basis])
        dims[deg] = ker_dim - _rank(im_rows)
    return dims


def induced_cohomology_map(F: LInftyMorphism):
    """Matrix data of the map induced by F^1_1 on Q^1_1-cohomology, as a dict
    (degree, rep-index) -> class coefficients; used to compare homotopic
    morphisms."""
    Q, Qp = F.source, F.target
    reps = _cohomology_representatives(Q)
    out = {}
    for (deg, idx), rep in reps.items():
        out[(deg, idx)] = _class_coefficients(Qp, F.f1(rep))
    return out


def _cohomology_representatives(Q: LInftyStructure):
    by_degree = {}
    for b in Q.space.iter_basis():
        by_degree.setdefault(b.degree, []).append(b)
    reps = {}
    for deg, basis in sorted(by_degree.items()):
        # kernel of Q1 in this degree
        rows = []
        tgts = sorted({t for b in basis for t in Q.q_word(1, (b,)).terms})
        for t in tgts:
            rows.append(({b: Q.q_word(1, (b,)).coefficient(t) for b in basis}, ZERO))
        sol = solve_linear_exact(rows, unknowns=basis)
        ker_vecs = sol.kernel
        im_rows = [Q.q_word(1, (b,)).terms for b in by_degree.get(deg - 1, [])]
        chosen = []
        current = list(im_rows)
        base_rank = _rank(current)
        for vec in ker_vecs:
            if _rank(current + [vec]) > base_rank:
                current.append(vec)
                base_rank += 1
                chosen.append(vec)
        for i, vec in enumerate(chosen):
            reps[(deg, i)] = Q.space.element(vec)
    return reps


def _class_coefficients(Q: LInftyStructure, elem: GradedElement):
    """Coefficients of a closed element's class in the chosen representatives
    (image directions quotiented out)."""
    deg = elem.degree()
    if deg is None:
        return ()
    reps = [(key, rep) for key, rep in _cohomology_representatives(Q).items()
            if key[0] == deg]
    by_degree = {}
    for b in Q.space.iter_basis():
        by_degree.setdefault(b.degree, []).append(b)
    im_gens = [Q.q_word(1, (b,)) for b in by_degree.get(deg - 1, [])]
    unknowns = [("rep", key) for key, _ in reps] + \
               [("im", i) for i in range(len(im_gens))]
    cols = {("rep", key): rep for key, rep in reps}
    cols.update({("im", i): g for i, g in enumerate(im_gens)})
    tgts = sorted({t for v in cols.values() for t in v.terms} | set(elem.terms))
    rows = [({u: cols[u].coefficient(t) for u in unknowns}, elem.coefficient(t))
            for t in tgts]
    sol = solve_linear_exact(rows)
    if not sol.consistent:
        raise StructureError("element is not closed modulo the image")
    return tuple(sol.particular.get(("rep", key), ZERO) for key, _ in reps)
