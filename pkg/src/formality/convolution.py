"""The convolution structure on maps Sym(L[1]) -> L': morphisms as
Maurer-Cartan elements, the two filtrations, the homotopy-of-morphisms
checker, and the three homotopy constructors (twist, post-compose,
pre-compose).

Filtration modes:

* ``arity``  -- weight of a map is the smallest arity it does not kill;
* ``mixed``  -- weight of a map also counts how much it raises the target
  filtration: an entry (arity n, word w -> term tau) weighs
  n + weight(tau) - weight(w).  Twist homotopies only become polynomial
  paths in this mode, so it is their default.

Component values of elements in mixed mode are truncated entrywise at the
convolution cap; all convolution operations preserve that filtration, so
identities checked modulo the cap are exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .graded import (
    CapError, FormalPath, GradedElement, InputError, InternalCheckError,
    koszul_sign, normalize_word, set_partitions, unshuffles, SymWord,
)
from .linfty import (
    LInftyMorphism, LInftyStructure, TaylorTable, extend_codifferential,
    extend_morphism, iter_words,
)
from .mc import (
    GaugeDatum, HomotopyDatum, apply_taylor_to_paths, check_homotopy_datum,
    exp_ad_path, homotopy_from_gauge, pushforward_homotopy,
    solve_generator_path, verify_generator_path,
)


def _compositions(total, parts):
    """Ordered compositions of `total` into `parts` summands >= 1."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class ConvolutionAlgebra:
    """Structure container for Hom(Sym(L[1]), L') with one of the two
    filtration modes and an entry-level cap."""

    def __init__(self, source: LInftyStructure, target: LInftyStructure,
                 mode="arity", cap=None):
        if mode not in ("arity", "mixed"):
            raise InputError(f"unknown filtration mode {mode}")
        self.source = source
        self.target = target
        self.mode = mode
        self.cap = cap if cap is not None else source.trunc.arity_cap
        self.arity_store = source.trunc.arity_cap
        self.t_cap = source.trunc.t_cap
        # arities at which the convolution brackets can be nonzero
        self.zero_above = target.zero_above

    def truncate_value(self, n: int, word, value: GradedElement) -> GradedElement:
        if self.mode == "arity":
            return value
        bound = sum(b.weight for b in word) + self.cap - n
        return value.reduce_to(min(bound, value.space.trunc.weight_cap))

    def zero(self) -> "ConvElement":
        return ConvElement(self, {}, 0)

    def from_morphism(self, F: LInftyMorphism) -> "ConvElement":
        fns = {n: (lambda tab: (lambda word: tab.on_word(word)))(tab)
               for n, tab in F.taylor.items()}
        return ConvElement(self, fns, 0)

    def qhat1(self, X: "ConvElement") -> "ConvElement":
        """Q'^1_1 o X - (-1)^{|X|} X o Q."""
        sgn = -1 if X.shifted_degree % 2 else 1
        arities = set()
        max_x = max(X.arities, default=0)
        max_q = self.source.max_arity
        for m in range(1, self.arity_store + 1):
            if m in X.arities or any(
                    i in X.arities and 1 <= m - i + 1 <= max_q
                    for i in range(1, m + 1)):
                arities.add(m)

        def make(m):
            def fn(word):
                acc = self.target.space.zero()
                if m in X.arities:
                    acc = acc + self.target.q(1, (X.component(m, word),))
                for i in range(1, m + 1):
                    if i not in X.arities:
                        continue
                    if not (1 <= m - i + 1 <= max_q):
                        continue
                    ext = extend_codifferential(self.source, m, i)(word)
                    for factors, coeff in ext.items():
                        acc = acc - (sgn * coeff) * X.component(i, factors)
                return acc
            return fn

        return ConvElement(self, {m: make(m) for m in arities},
                           X.shifted_degree + 1)

    def qhatn(self, n: int, args) -> "ConvElement":
        """(Q')^1_n o wedge o (X_1 x ... x X_n) o reduced-coproduct^{n-1}."""
        args = tuple(args)
        degs = [X.shifted_degree for X in args]
        min_arities = [min(X.arities, default=self.arity_store + 1) for X in args]
        lo = sum(min_arities)
        arities = set(range(lo, self.arity_store + 1))

        def make(m):
            def fn(word):
                acc = self.target.space.zero()
                sword = SymWord(word, 1)
                for parts in _compositions(m, n):
                    if any(p < mi for p, mi in zip(parts, min_arities)):
                        continue
                    for blocks, sign in unshuffles(sword, parts):
                        cross = 1
                        run = 0
                        for j, blk in enumerate(blocks):
                            if degs[j] % 2 and run % 2:
                                cross = -cross
                            run += blk.total_shifted_degree()
                        vals = [X.component(len(blk), blk.factors)
                                for X, blk in zip(args, blocks)]
                        term = self.target.q(n, vals)
                        acc = acc + (sign * cross) * term
                return acc
            return fn

        return ConvElement(self, {m: make(m) for m in arities},
                           sum(degs) + 1)

    def q(self, n: int, args) -> "ConvElement":
        if n == 1:
            return self.qhat1(args[0])
        if self.zero_above is not None and n > self.zero_above:
            return self.zero()
        if n > self.target.trunc.arity_cap:
            raise CapError(f"convolution bracket needs target arity {n}")
        return self.qhatn(n, args)

    def mc_residual(self, F: "ConvElement") -> "ConvElement":
        """sum_k qhat_k(F^k)/k!; zero iff F is a morphism."""
        top = self.zero_above if self.zero_above is not None \
            else self.target.trunc.arity_cap
        acc = self.qhat1(F)
        for k in range(2, top + 1):
            acc = acc + Fraction(1, factorial(k)) * self.q(k, (F,) * k)
        return acc

    def element_is_zero(self, X: "ConvElement", max_arity=None):
        """First nonzero entry (n, word, value) through the caps, or None."""
        top = min(max_arity or self.arity_store, self.arity_store)
        for n in range(1, top + 1):
            if n not in X.arities:
                continue
            for word in iter_words(self.source.space, n):
                v = X.component(n, word)
                if not v.is_zero():
                    return (n, word, v)
        return None


class ConvElement:
    """A point of the convolution algebra: arity-indexed multilinear maps
    into the target, with the algebra's mode truncation applied entrywise."""

    __slots__ = ("conv", "fns", "shifted_degree", "_memo")

    def __init__(self, conv: ConvolutionAlgebra, fns, shifted_degree: int):
        self.conv = conv
        self.fns = dict(fns)
        self.shifted_degree = shifted_degree
        self._memo = {}

    @property
    def arities(self):
        return set(self.fns)

    def component(self, n: int, word) -> GradedElement:
        fn = self.fns.get(n)
        if fn is None:
            return self.conv.target.space.zero()
        key = (n, word)
        val = self._memo.get(key)
        if val is None:
            val = self.conv.truncate_value(n, word, fn(word))
            self._memo[key] = val
        return val

    def apply_sym(self, n: int, se_items) -> GradedElement:
        acc = self.conv.target.space.zero()
        for factors, coeff in se_items:
            acc = acc + coeff * self.component(n, factors)
        return acc

    def degree(self):
        return self.shifted_degree + 1

    def min_weight(self):
        # the convolution filtration starts at 1 in both modes
        return 1 if self.fns else self.conv.cap + 1

    def is_zero(self):
        return self.conv.element_is_zero(self) is None

    def __add__(self, other):
        if other.shifted_degree != self.shifted_degree and other.fns and self.fns:
            raise InputError("adding convolution elements of different degree")
        fns = {}
        for n in self.arities | other.arities:
            fns[n] = (lambda m: lambda w: self.component(m, w) + other.component(m, w))(n)
        deg = self.shifted_degree if self.fns else other.shifted_degree
        return ConvElement(self.conv, fns, deg)

    def __rmul__(self, scalar):
        scalar = Fraction(scalar)
        if not scalar:
            return ConvElement(self.conv, {}, self.shifted_degree)
        fns = {n: (lambda m: lambda w: scalar * self.component(m, w))(n)
               for n in self.arities}
        return ConvElement(self.conv, fns, self.shifted_degree)

    __mul__ = __rmul__

    def __neg__(self):
        return (-1) * self

    def as_morphism(self) -> LInftyMorphism:
        taylor = {}
        for n in sorted(self.arities):
            tab = TaylorTable(n, self.conv.source.space, self.conv.target.space,
                              (lambda m: lambda w: self.component(m, w))(n),
                              name=f"conv{n}")
            taylor[n] = tab
        return LInftyMorphism(self.conv.source, self.conv.target, taylor)


def build_convolution(Qsrc: LInftyStructure, Qtgt: LInftyStructure,
                      mode="arity", cap=None) -> ConvolutionAlgebra:
    if Qsrc.trunc.weight_cap != Qtgt.trunc.weight_cap and mode == "mixed":
        raise InputError("mixed-mode convolution needs matching weight caps")
    return ConvolutionAlgebra(Qsrc, Qtgt, mode=mode, cap=cap)


def filtration_weight(X: ConvElement, mode=None, max_arity=None) -> int:
    """Exact filtration weight of a convolution element in the chosen mode
    (defaults to the algebra's mode); conv.cap + 1 for the zero element.
    ``max_arity`` restricts the scan (the weight over the scanned arities)."""
    conv = X.conv
    mode = mode or conv.mode
    top = min(max_arity or conv.arity_store, conv.arity_store)
    best = None
    for n in sorted(X.arities):
        if n > top:
            continue
        for word in iter_words(conv.source.space, n):
            v = X.component(n, word)
            if v.is_zero():
                continue
            if mode == "arity":
                w = n
            else:
                word_weight = sum(b.weight for b in word)
                w = min(n + t.weight - word_weight for t in v.terms)
            best = w if best is None else min(best, w)
            if mode == "arity":
                break  # smallest arity found; no smaller weight possible at this n
        if best is not None and mode == "arity":
            break
    return best if best is not None else conv.cap + 1


@dataclass
class MorphismHomotopy:
    """A polynomial path of convolution elements F(t) with generator
    Lambda(t); every coefficient lives in the algebra's chosen mode."""

    conv: ConvolutionAlgebra
    f_coeffs: list
    lambda_coeffs: list

    @property
    def t_cap(self):
        return self.conv.t_cap

    def f_path(self, n: int, word) -> FormalPath:
        return FormalPath([c.component(n, word) for c in self.f_coeffs],
                          self.t_cap)

    def lambda_path(self, n: int, word) -> FormalPath:
        return FormalPath([c.component(n, word) for c in self.lambda_coeffs],
                          self.t_cap)

    def endpoint(self, s) -> ConvElement:
        arities = set()
        for c in self.f_coeffs:
            arities |= c.arities
        fns = {}
        for n in arities:
            fns[n] = (lambda m: lambda w: self.f_path(m, w).evaluate(s))(n)
        return ConvElement(self.conv, fns, 0)

    def endpoint_morphism(self, s) -> LInftyMorphism:
        return self.endpoint(s).as_morphism()


def _rhs_component_path(h: MorphismHomotopy, n: int, word) -> FormalPath:
    """Qhat^1(Lambda(t) v exp F(t)) at component (n, word), exactly in t."""
    conv = h.conv
    tgt = conv.target
    zero = tgt.space.zero()
    t_cap = h.t_cap
    acc = FormalPath([zero], t_cap)

    # k = 0: Qhat_1(Lambda): Q'_1 o Lambda - (-1)^{|Lambda|} Lambda o Q
    lam_deg = -1
    sgn = -1 if lam_deg % 2 else 1
    term = FormalPath([tgt.q(1, (c,)) for c in
                       (h.lambda_path(n, word)).coeffs], t_cap)
    acc = acc + term
    max_q = conv.source.max_arity
    for i in range(1, n + 1):
        if not (1 <= n - i + 1 <= max_q):
            continue
        ext = extend_codifferential(conv.source, n, i)(word)
        for factors, coeff in ext.items():
            acc = acc - (sgn * coeff) * h.lambda_path(i, factors)

    # k >= 1: Qhat_{k+1}(Lambda v F^k)/k!
    top = conv.zero_above if conv.zero_above is not None \
        else tgt.trunc.arity_cap
    sword = SymWord(word, 1)
    for k in range(1, min(n - 1, top - 1) + 1):
        coeff_k = Fraction(1, factorial(k))
        for parts in _compositions(n, k + 1):
            for blocks, sign in unshuffles(sword, parts):
                # argument degrees: (|Lambda|, 0, ..., 0); only Lambda is odd
                # and it crosses nothing (first slot), so no extra sign
                paths = [h.lambda_path(len(blocks[0]), blocks[0].factors)]
                paths += [h.f_path(len(b), b.factors) for b in blocks[1:]]
                term = apply_taylor_to_paths(tgt.q, k + 1, paths, zero, t_cap)
                acc = acc + (coeff_k * sign) * term
    return acc


def check_morphism_homotopy(h: MorphismHomotopy, max_arity=None):
    """Verify dF/dt = Qhat^1(Lambda v exp F) componentwise as exact
    t-polynomials modulo the mode's cap, and both endpoints' morphism
    equations; returns None or the first failure witness."""
    conv = h.conv
    top = min(max_arity or conv.cap, conv.arity_store)
    for n in range(1, top + 1):
        for word in iter_words(conv.source.space, n):
            lhs = h.f_path(n, word).differentiate()
            rhs = _rhs_component_path(h, n, word)
            kmax = max(len(lhs.coeffs), len(rhs.coeffs))
            for k in range(kmax):
                diff = conv.truncate_value(
                    n, word, lhs.coefficient(k) - rhs.coefficient(k))
                if not diff.is_zero():
                    return ("ode", n, word, k, diff)
    for s in (0, 1):
        w = _endpoint_morphism_witness(h, s, top)
        if w is not None:
            return ("endpoint", s) + w
    return None


def _endpoint_morphism_witness(h: MorphismHomotopy, s, top):
    """Morphism equation for the endpoint, compared modulo the mode cap."""
    conv = h.conv
    F = h.endpoint(s)
    Q, Qp = conv.source, conv.target
    max_f = max(F.arities, default=0)
    morph = F.as_morphism()
    for n in range(1, top + 1):
        for word in iter_words(Q.space, n):
            fq = Qp.space.zero()
            for i in range(1, n + 1):
                if i not in F.arities or not (1 <= n - i + 1 <= Q.max_arity):
                    continue
                ext = extend_codifferential(Q, n, i)(word)
                fq = fq + F.apply_sym(i, ext.items())
            qf = Qp.space.zero()
            for j in sorted(Qp.taylor):
                if not (j <= n <= j * max(max_f, 1)):
                    continue
                ext = extend_morphism(morph, n, j)(word)
                qf = qf + Qp.taylor[j].on_sym_element(ext)
            diff = conv.truncate_value(n, word, fq - qf)
            if not diff.is_zero():
                return (n, word, diff)
    return None


def build_twist_homotopy(F: LInftyMorphism, g: GaugeDatum, cap=None,
                         mode="mixed") -> MorphismHomotopy:
    """The homotopy from F to e^{[-A'(1),.]} o F^pi o e^{[A(1),.]} where
    pi = exp([g,.]) |> 0, following the path
    F(t) = e^{[-A'(t),.]} o F^{pi(t)} o e^{[A(t),.]} with generator
    Lambda(t) built from lambda^F_k(t)(...) = F^{pi(t)}_{k+1}(g v ...)."""
    Ds = F.source.dgla
    Dt = F.target.dgla
    if Ds is None or Dt is None:
        raise InputError("twist homotopies need DGLA-backed endpoints")
    t_cap = F.source.trunc.t_cap
    datum = homotopy_from_gauge(Ds, g, Ds.space.zero())
    a_path = datum.lambda_path.integrate()  # A(t) = t g
    tgt_datum = pushforward_homotopy(F, datum)
    a_prime = solve_generator_path(Dt, tgt_datum.lambda_path)
    verify_generator_path(Dt, a_prime, tgt_datum)
    conv = ConvolutionAlgebra(F.source, F.target, mode=mode, cap=cap)
    pi_path = datum.pi_path
    max_f = max(F.taylor, default=0)
    zero_t = Dt.space.zero()
    neg_a_prime = -1 * a_prime
    word_memo = {}

    def twisted_conjugated(n, word, prepend):
        """e^{-ad A'(t)} F^{pi(t)}_{n+len(prepend)}(prepend v conj word)."""
        conj = [exp_ad_path(Ds, a_path,
                            FormalPath.constant(Ds.space.element({b: 1}), t_cap))
                for b in word]
        pre = [FormalPath.constant(p, t_cap) for p in prepend]
        base = len(pre) + n
        acc = FormalPath([zero_t], t_cap)
        k = 0
        while base + k <= max_f:
            term = apply_taylor_to_paths(
                F.f, base + k, [pi_path] * k + pre + conj, zero_t, t_cap)
            acc = acc + Fraction(1, factorial(k)) * term
            k += 1
        return exp_ad_path(Dt, neg_a_prime, acc)

    def f_word_path(n, word):
        key = ("f", n, word)
        if key not in word_memo:
            word_memo[key] = twisted_conjugated(n, word, ())
        return word_memo[key]

    def lambda_word_path(n, word):
        key = ("l", n, word)
        if key not in word_memo:
            word_memo[key] = twisted_conjugated(n, word, (g.g,))
        return word_memo[key]

    f_coeffs = [ConvElement(conv,
                            {n: (lambda m, kk: lambda w: f_word_path(m, w).coefficient(kk))(n, k)
                             for n in range(1, conv.arity_store + 1)}, 0)
                for k in range(t_cap + 1)]
    lambda_coeffs = [ConvElement(conv,
                                 {n: (lambda m, kk: lambda w: lambda_word_path(m, w).coefficient(kk))(n, k)
                                  for n in range(1, conv.arity_store + 1)}, -1)
                     for k in range(t_cap + 1)]
    return MorphismHomotopy(conv, f_coeffs, lambda_coeffs)


def transport_postcompose(h: MorphismHomotopy, H: LInftyMorphism) -> MorphismHomotopy:
    """H F_0 ~ H F_1 via (H F(t), H^1 o (Lambda v exp F) o coproducts)."""
    if H.source.space.tag != h.conv.target.space.tag:
        raise InputError("post-composition needs H source == homotopy target")
    conv = ConvolutionAlgebra(h.conv.source, H.target,
                              mode=h.conv.mode, cap=h.conv.cap)
    t_cap = h.t_cap
    zero = H.target.space.zero()
    memo = {}

    def hf_word_path(n, word):
        key = ("f", n, word)
        if key in memo:
            return memo[key]
        degs = [b.shifted_degree for b in word]
        acc = FormalPath([zero], t_cap)
        for ell in sorted(H.taylor):
            if ell > n:
                continue
            for partition in set_partitions(range(n), ell):
                flat = [i for blk in partition for i in blk]
                sign = koszul_sign(flat, degs)
                paths = [h.f_path(len(blk), tuple(word[i] for i in blk))
                         for blk in partition]
                acc = acc + sign * apply_taylor_to_paths(
                    H.f, ell, paths, zero, t_cap)
        memo[key] = acc
        return acc

    def hlam_word_path(n, word):
        key = ("l", n, word)
        if key in memo:
            return memo[key]
        degs = [b.shifted_degree for b in word]
        acc = FormalPath([zero], t_cap)
        for ell in sorted(H.taylor):
            if ell > n:
                continue
            for partition in set_partitions(range(n), ell):
                for marked in range(ell):
                    order = (partition[marked],) + tuple(
                        blk for j, blk in enumerate(partition) if j != marked)
                    flat = [i for blk in order for i in blk]
                    sign = koszul_sign(flat, degs)
                    paths = [h.lambda_path(len(order[0]),
                                           tuple(word[i] for i in order[0]))]
                    paths += [h.f_path(len(blk), tuple(word[i] for i in blk))
                              for blk in order[1:]]
                    acc = acc + sign * apply_taylor_to_paths(
                        H.f, ell, paths, zero, t_cap)
        memo[key] = acc
        return acc

    return _paths_to_homotopy(conv, hf_word_path, hlam_word_path, t_cap)


def transport_precompose(h: MorphismHomotopy, H: LInftyMorphism) -> MorphismHomotopy:
    """F_0 H ~ F_1 H via (F(t) o H, Lambda(t) o H)."""
    if H.target.space.tag != h.conv.source.space.tag:
        raise InputError("pre-composition needs H target == homotopy source")
    conv = ConvolutionAlgebra(H.source, h.conv.target,
                              mode=h.conv.mode, cap=h.conv.cap)
    t_cap = h.t_cap
    zero = h.conv.target.space.zero()
    memo = {}

    def make(path_of, tag):
        def word_path(n, word):
            key = (tag, n, word)
            if key in memo:
                return memo[key]
            acc = FormalPath([zero], t_cap)
            for ell in range(1, n + 1):
                ext = extend_morphism(H, n, ell)(word)
                for factors, coeff in ext.items():
                    acc = acc + coeff * path_of(ell, factors)
            memo[key] = acc
            return acc
        return word_path

    return _paths_to_homotopy(conv, make(h.f_path, "f"),
                              make(h.lambda_path, "l"), t_cap)


def _paths_to_homotopy(conv, f_word_path, lambda_word_path, t_cap):
    f_coeffs = [ConvElement(conv,
                            {n: (lambda m, kk: lambda w: f_word_path(m, w).coefficient(kk))(n, k)
                             for n in range(1, conv.arity_store + 1)}, 0)
                for k in range(t_cap + 1)]
    lambda_coeffs = [ConvElement(conv,
                                 {n: (lambda m, kk: lambda w: lambda_word_path(m, w).coefficient(kk))(n, k)
                                  for n in range(1, conv.arity_store + 1)}, -1)
                     for k in range(t_cap + 1)]
    return MorphismHomotopy(conv, f_coeffs, lambda_coeffs)


def _apply_path_component(path_of, n, args, zero, t_cap) -> FormalPath:
    """Evaluate a component family on a tuple of elements by expansion."""
    acc = FormalPath([zero], t_cap)
    for combo in itertools.product(*(a.terms.items() for a in args)):
        factors = [b for b, _ in combo]
        coeff = Fraction(1)
        for _, c in combo:
            coeff *= c
        w = normalize_word(factors)
        if w.is_zero():
            continue
        acc = acc + (coeff * w.sign) * path_of(n, w.factors)
    return acc


def mc_gauge_witness_pushforward(h: MorphismHomotopy, pi: GradedElement,
                                 check=True) -> HomotopyDatum:
    """(pi'(t), lambda'(t)) = (F(t)^1(exp-bar pi), Lambda(t)^1(exp-bar pi)),
    re-verified against the target homotopy ODE before returning."""
    conv = h.conv
    if check:
        from .mc import mc_residual
        if not mc_residual(conv.source, pi).is_zero():
            raise InputError("witness pushforward needs a Maurer-Cartan element")
    t_cap = h.t_cap
    zero = conv.target.space.zero()
    pi_w = pi.min_weight()
    cap = conv.source.trunc.weight_cap
    pi_out = FormalPath([zero], t_cap)
    lam_out = FormalPath([zero], t_cap)
    n = 1
    while not pi.is_zero() and n * pi_w <= cap and n <= conv.arity_store:
        pi_out = pi_out + Fraction(1, factorial(n)) * _apply_path_component(
            h.f_path, n, (pi,) * n, zero, t_cap)
        lam_out = lam_out + Fraction(1, factorial(n)) * _apply_path_component(
            h.lambda_path, n, (pi,) * n, zero, t_cap)
        n += 1
    datum = HomotopyDatum(pi_out, lam_out)
    assert_cap = min(conv.target.trunc.weight_cap, conv.cap)
    witness = check_homotopy_datum(conv.target, datum, assert_cap=assert_cap)
    if witness is not None:
        raise InternalCheckError(
            f"pushed-forward witness fails the target ODE re-check: {witness}")
    return datum
