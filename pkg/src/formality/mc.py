"""Maurer-Cartan elements, the gauge action, twisting, and the equivalence
solvers for filtered DGLAs and L-infinity structures.

Series conventions (all exact, truncated at the weight cap):

    gauge action      exp([g,.]) |> pi = pi - sum_k ad_g^k (Dg + [pi,g]) / (k+1)!
    conjugation       D + [pi',.] = e^{ad_g} (D + [pi,.]) e^{-ad_g}
    homotopy relation d pi(t)/dt = Q^1(lambda(t) v exp(pi(t))),
                      pi(0) = pi_0, pi(1) = pi_1
    generator curve   lambda(t) = (exp(ad_{A(t)}) - id)/ad_{A(t)} dA(t)/dt,
                      A(0) = 0, g = A(1)
    twists            Q^pi_n = sum_k Q_{n+k}(pi^k v .)/k!,
                      F^pi_n = sum_k F_{n+k}(pi^k v .)/k!

Every solver is a filtration fixed-point iteration; the corrections gain one
filtration level per pass, so exact convergence within the cap is guaranteed
and is asserted.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .graded import (
    CapError, FormalPath, GradedElement, InputError, InternalCheckError,
    PreconditionError,
)
from .linfty import DgLie, LInftyMorphism, LInftyStructure, TaylorTable


# -- residuals ---------------------------------------------------------------

def dgla_residual(D: DgLie, pi: GradedElement) -> GradedElement:
    """D pi + [pi, pi]/2."""
    return D.d(pi) + Fraction(1, 2) * D.bracket(pi, pi)


def _series_arity_bound(Q, weights_fixed, step_weight, cap):
    """Largest k with weights_fixed + k*step_weight <= cap (inf -> cap)."""
    if step_weight <= 0:
        return None
    return max(0, (cap - weights_fixed) // step_weight)


def mc_residual(Q: LInftyStructure, pi: GradedElement, check=True) -> GradedElement:
    """sum_{n>=1} Q^1_n(pi v ... v pi) / n!  (terminates: pi has weight >= 1)."""
    if check:
        if pi.degree() not in (None, 1):
            raise InputError(f"Maurer-Cartan candidates have degree 1, got {pi.degree()}")
        if not pi.is_zero() and pi.min_weight() < 1:
            raise InputError("Maurer-Cartan candidates need filtration weight >= 1")
    if pi.is_zero():
        return Q.space.zero()
    cap = Q.trunc.weight_cap
    kmax = _series_arity_bound(Q, 0, pi.min_weight(), cap)
    acc = Q.space.zero()
    for n in range(1, kmax + 1):
        if Q.zero_above is not None and n > Q.zero_above:
            break
        if n > Q.trunc.arity_cap:
            raise CapError(f"Maurer-Cartan series needs arity {n} beyond the cap")
        acc = acc + Fraction(1, factorial(n)) * Q.q(n, (pi,) * n)
    return acc


def is_mc(Q: LInftyStructure, pi: GradedElement) -> bool:
    return mc_residual(Q, pi).is_zero()


# -- gauge action ------------------------------------------------------------

@dataclass
class GaugeDatum:
    """A gauge generator: degree 0, filtration weight >= 1."""
    g: GradedElement

    def __post_init__(self):
        if self.g.degree() not in (None, 0):
            raise InputError(f"gauge generators have degree 0, got {self.g.degree()}")
        if not self.g.is_zero() and self.g.min_weight() < 1:
            raise InputError("gauge generators need filtration weight >= 1")


@dataclass
class HomotopyDatum:
    """pi(t) in F^1 L^1[t] and lambda(t) in F^1 L^0[t] with the homotopy ODE
    re-checkable via check_homotopy_datum."""
    pi_path: FormalPath
    lambda_path: FormalPath


def _ad_series(D: DgLie, g: GradedElement, x: GradedElement, shift: int):
    """sum_{k>=0} ad_g^k(x) / (k+shift)!; terminates at the weight cap."""
    acc = D.space.zero()
    term = x
    k = 0
    limit = D.space.trunc.weight_cap - D.space.min_weight + 2
    while not term.is_zero():
        if k > limit:
            raise InternalCheckError("ad-series failed to terminate within caps")
        acc = acc + Fraction(1, factorial(k + shift)) * term
        term = D.bracket(g, term)
        k += 1
    return acc


def exp_ad(D: DgLie, g: GradedElement, x: GradedElement) -> GradedElement:
    """e^{[g, .]} x."""
    return _ad_series(D, g, x, 0)


def gauge_act(D: DgLie, g: GaugeDatum, pi: GradedElement, check=True) -> GradedElement:
    """exp([g,.]) |> pi; precondition: pi is Maurer-Cartan."""
    if check:
        res = dgla_residual(D, pi)
        if not res.is_zero():
            raise PreconditionError(f"gauge_act needs a Maurer-Cartan input, residual {res}")
    v = D.d(g.g) + D.bracket(pi, g.g)
    return pi - _ad_series(D, g.g, v, 1)


def conjugation_witness(D: DgLie, g: GaugeDatum, pi: GradedElement,
                        pi_new: GradedElement):
    """First basis element where D + [pi',.] != e^{ad_g} (D + [pi,.]) e^{-ad_g},
    or None. (The isomorphism-of-DGLAs identity.)"""
    for b in D.space.basis_list():
        x = D.space.element({b: 1})
        lhs = D.d(x) + D.bracket(pi_new, x)
        pulled = exp_ad(D, -1 * g.g, x)
        rhs = exp_ad(D, g.g, D.d(pulled) + D.bracket(pi, pulled))
        if not (lhs - rhs).is_zero():
            return (b, lhs - rhs)
    return None


# -- twisting ----------------------------------------------------------------

def _twisted_table(Q: LInftyStructure, pi: GradedElement, n: int) -> TaylorTable:
    cap = Q.trunc.weight_cap
    pw = pi.min_weight()

    def fn(word):
        word_weight = sum(b.weight for b in word)
        acc = Q.space.zero()
        k = 0
        while True:
            if k and k * pw + word_weight > cap:
                break
            m = n + k
            if Q.zero_above is not None and m > Q.zero_above:
                break
            if m > Q.trunc.arity_cap:
                raise CapError(f"twist needs arity {m} beyond the cap")
            args = (pi,) * k + tuple(Q.space.element({b: 1}) for b in word)
            acc = acc + Fraction(1, factorial(k)) * Q.q(m, args)
            k += 1
        return acc

    return TaylorTable(n, Q.space, Q.space, fn, name=f"Q^pi_{n}")


def twist_structure(Q: LInftyStructure, pi: GradedElement, check=True) -> LInftyStructure:
    """Structure with Taylor maps Q^pi_n = sum_k Q_{n+k}(pi^k v .)/k!."""
    if check and not mc_residual(Q, pi).is_zero():
        raise PreconditionError("twisting needs a Maurer-Cartan element")
    top = Q.max_arity if Q.zero_above is not None else Q.trunc.arity_cap
    taylor = {n: _twisted_table(Q, pi, n) for n in range(1, top + 1)}
    out = LInftyStructure(Q.space, taylor, dgla=None)
    out.zero_above = Q.zero_above
    return out


def twist_dgla(D: DgLie, pi: GradedElement) -> DgLie:
    """(g, D + [pi, .], [.,.]) -- the DGLA-level twist."""
    return DgLie(D.space,
                 lambda b: D.d_basis(b) + D.bracket(pi, D.space.element({b: 1})),
                 D.bracket_basis)


def pushforward_mc(F: LInftyMorphism, pi: GradedElement, check=True) -> GradedElement:
    """S = sum_n F^1_n(pi^n)/n!; asserts S is Maurer-Cartan in the target."""
    if check and not mc_residual(F.source, pi).is_zero():
        raise PreconditionError("pushforward needs a Maurer-Cartan element")
    if pi.is_zero():
        return F.target.space.zero()
    cap = F.source.trunc.weight_cap
    kmax = _series_arity_bound(F, 0, pi.min_weight(), cap)
    acc = F.target.space.zero()
    for n in range(1, kmax + 1):
        if n > max(F.taylor, default=0):
            break
        acc = acc + Fraction(1, factorial(n)) * F.f(n, (pi,) * n)
    if check:
        res = mc_residual(F.target, acc)
        if not res.is_zero():
            raise InternalCheckError(
                f"pushforward of a Maurer-Cartan element is not Maurer-Cartan: {res}")
    return acc


def twist_morphism(F: LInftyMorphism, pi: GradedElement, check=True) -> LInftyMorphism:
    """F^pi with F^pi_n = sum_k F_{n+k}(pi^k v .)/k!, between the twisted
    structures."""
    S = pushforward_mc(F, pi, check=check)
    src = twist_structure(F.source, pi, check=False)
    tgt = twist_structure(F.target, S, check=False)
    cap = F.source.trunc.weight_cap
    pw = pi.min_weight() if not pi.is_zero() else cap + 1
    maxF = max(F.taylor, default=0)

    def make(n):
        def fn(word):
            word_weight = sum(b.weight for b in word)
            acc = F.target.space.zero()
            k = 0
            while True:
                if k and k * pw + word_weight > cap:
                    break
                m = n + k
                if m > maxF:
                    # remaining tables are structurally zero only if the
                    # morphism stores all its nonzero arities; tables are
                    # always built through the arity cap, so beyond maxF the
                    # summand vanishes.
                    break
                args = (pi,) * k + tuple(F.source.space.element({b: 1}) for b in word)
                acc = acc + Fraction(1, factorial(k)) * F.f(m, args)
                k += 1
            return acc
        return TaylorTable(n, F.source.space, F.target.space, fn, name=f"F^pi_{n}")

    taylor = {n: make(n) for n in range(1, maxF + 1)}
    return LInftyMorphism(src, tgt, taylor)


# -- homotopy equivalence ----------------------------------------------------

def apply_taylor_to_paths(q_fn, arity: int, paths, zero_value, t_cap: int) -> FormalPath:
    """Evaluate a multilinear map on FormalPath arguments by convolving
    t-coefficients."""
    lens = [len(p.coeffs) for p in paths]
    out = {}
    for combo in itertools.product(*(range(l) for l in lens)):
        val = q_fn(arity, tuple(p.coeffs[i] for p, i in zip(paths, combo)))
        if val.is_zero():
            continue
        power = sum(combo)
        out[power] = out.get(power, zero_value) + val
    top = max(out, default=0)
    return FormalPath([out.get(k, zero_value) for k in range(top + 1)], t_cap)


def homotopy_rhs(Q, lam_path: FormalPath, pi_path: FormalPath) -> FormalPath:
    """Q^1(lambda(t) v exp(pi(t))) = sum_{n>=0} Q^1_{n+1}(lambda v pi^n)/n!."""
    cap = Q.trunc.weight_cap
    zero = Q.space.zero() if hasattr(Q, "space") else Q.zero()
    t_cap = lam_path.t_cap
    acc = FormalPath([zero], t_cap)
    lam_w = min(c.min_weight() for c in lam_path.coeffs)
    pi_w = min((c.min_weight() for c in pi_path.coeffs))
    n = 0
    while True:
        if n and lam_w + n * max(pi_w, 1) > cap:
            break
        m = n + 1
        if Q.zero_above is not None and m > Q.zero_above:
            break
        if m > Q.trunc.arity_cap:
            raise CapError(f"homotopy series needs arity {m} beyond the cap")
        term = apply_taylor_to_paths(Q.q, m, [lam_path] + [pi_path] * n, zero, t_cap)
        acc = acc + Fraction(1, factorial(n)) * term
        n += 1
    return acc


def solve_homotopy_ode(Q: LInftyStructure, pi0: GradedElement,
                       lam: FormalPath) -> FormalPath:
    """The unique truncated polynomial solution of
    d pi/dt = Q^1(lambda(t) v exp(pi(t))), pi(0) = pi0, by filtration
    induction; every evaluation of the result is Maurer-Cartan."""
    if not mc_residual(Q, pi0).is_zero():
        raise PreconditionError("homotopy ODE needs a Maurer-Cartan start")
    for c in lam.coeffs:
        if c.degree() not in (None, 0):
            raise InputError("lambda(t) must have degree 0 coefficients")
        if not c.is_zero() and c.min_weight() < 1:
            raise InputError("lambda(t) must have filtration weight >= 1")
    t_cap = lam.t_cap
    pi = FormalPath.constant(pi0, t_cap)
    limit = Q.trunc.weight_cap + 2
    for _ in range(limit):
        rhs = homotopy_rhs(Q, lam, pi)
        new = FormalPath.constant(pi0, t_cap) + rhs.integrate()
        if new == pi:
            return pi
        pi = new
    raise InternalCheckError("homotopy ODE iteration failed to stabilize")


def check_homotopy_datum(Q: LInftyStructure, datum: HomotopyDatum,
                         assert_cap=None):
    """Residual of the homotopy ODE and of both endpoints; None if exact."""
    cap = assert_cap if assert_cap is not None else Q.trunc.weight_cap
    rhs = homotopy_rhs(Q, datum.lambda_path, datum.pi_path)
    diff = datum.pi_path.differentiate() - rhs
    for k, c in enumerate(diff.coeffs):
        c = c.reduce_to(cap)
        if not c.is_zero():
            return ("ode", k, c)
    for s in (0, 1):
        res = mc_residual(Q, datum.pi_path.evaluate(s)).reduce_to(cap)
        if not res.is_zero():
            return ("endpoint", s, res)
    return None


def homotopy_from_gauge(D: DgLie, g: GaugeDatum, pi0: GradedElement) -> HomotopyDatum:
    """lambda(t) = g constant, pi(t) = exp([tg,.]) |> pi0 (a polynomial in t)."""
    res = dgla_residual(D, pi0)
    if not res.is_zero():
        raise PreconditionError(f"homotopy_from_gauge needs Maurer-Cartan pi0: {res}")
    t_cap = D.space.trunc.t_cap
    v = D.d(g.g) + D.bracket(pi0, g.g)
    # pi(t) = pi0 - sum_k t^{k+1} ad_g^k(v)/(k+1)!
    coeffs = [pi0]
    term = v
    k = 0
    limit = D.space.trunc.weight_cap - D.space.min_weight + 2
    while not term.is_zero():
        if k > limit:
            raise InternalCheckError("gauge series failed to terminate")
        if k + 1 > t_cap:
            raise CapError("gauge path exceeds the t-degree cap")
        coeffs.append(Fraction(-1, factorial(k + 1)) * term)
        term = D.bracket(g.g, term)
        k += 1
    lam = FormalPath.constant(g.g, t_cap)
    return HomotopyDatum(FormalPath(coeffs, t_cap), lam)


def solve_generator_path(D: DgLie, lam: FormalPath) -> FormalPath:
    """A(t) with (exp(ad_A) - id)/ad_A (dA/dt) = lambda(t), A(0) = 0, by
    filtration fixed-point iteration."""
    t_cap = lam.t_cap
    a_dot = lam
    limit = D.space.trunc.weight_cap + 2

    def correction(a_path, a_dot_path):
        # sum_{k>=1} ad_A^k(a_dot)/(k+1)!
        acc = FormalPath([D.space.zero()], t_cap)
        term = a_dot_path
        k = 1
        while True:
            term = apply_taylor_to_paths(
                lambda _n, args: D.bracket(args[0], args[1]), 2,
                [a_path, term], D.space.zero(), t_cap)
            if term.is_zero():
                return acc
            acc = acc + Fraction(1, factorial(k + 1)) * term
            k += 1
            if k > limit + D.space.trunc.weight_cap:
                raise InternalCheckError("generator series failed to terminate")

    for _ in range(limit):
        a_path = a_dot.integrate()
        new_dot = lam - correction(a_path, a_dot)
        if new_dot == a_dot:
            return a_dot.integrate()
        a_dot = new_dot
    raise InternalCheckError("generator ODE iteration failed to stabilize")


def verify_generator_path(D: DgLie, a_path: FormalPath, datum: HomotopyDatum):
    """Check the closed form
    pi(t) = e^{ad_{A(t)}} pi0 - sum_k ad_{A(t)}^k(D A(t))/(k+1)!
    exactly against datum.pi_path; InternalCheckError on mismatch."""
    pi0 = datum.pi_path.coefficient(0)
    t_cap = datum.pi_path.t_cap

    def ad_a(path):
        return apply_taylor_to_paths(
            lambda _n, args: D.bracket(args[0], args[1]), 2,
            [a_path, path], D.space.zero(), t_cap)

    acc = FormalPath.constant(pi0, t_cap)
    term = FormalPath.constant(pi0, t_cap)
    k = 1
    while True:
        term = ad_a(term)
        if term.is_zero():
            break
        acc = acc + Fraction(1, factorial(k)) * term
        k += 1
    d_a = FormalPath([D.d(c) for c in a_path.coeffs], t_cap)
    term = d_a
    acc = acc - term
    k = 1
    while True:
        term = ad_a(term)
        if term.is_zero():
            break
        acc = acc - Fraction(1, factorial(k + 1)) * term
        k += 1
    if not (acc - datum.pi_path).is_zero():
        raise InternalCheckError(
            "generator path does not reproduce pi(t); invalid homotopy datum")


def gauge_from_homotopy(D: DgLie, datum: HomotopyDatum) -> GaugeDatum:
    """Solve for A(t), verify the closed form for pi(t) exactly, return
    g = A(1)."""
    Q = _as_structure(D)
    witness = check_homotopy_datum(Q, datum)
    if witness is not None:
        raise PreconditionError(f"homotopy datum fails its ODE re-check: {witness}")
    a_path = solve_generator_path(D, datum.lambda_path)
    verify_generator_path(D, a_path, datum)
    return GaugeDatum(a_path.evaluate(1))


def exp_ad_path(D: DgLie, a_path: FormalPath, x_path: FormalPath) -> FormalPath:
    """e^{[A(t), .]} applied to a path, exactly in t."""
    acc = x_path
    term = x_path
    k = 1
    limit = D.space.trunc.weight_cap - D.space.min_weight + 2
    while True:
        term = apply_taylor_to_paths(
            lambda _n, args: D.bracket(args[0], args[1]), 2,
            [a_path, term], D.space.zero(), x_path.t_cap)
        if term.is_zero():
            return acc
        acc = acc + Fraction(1, factorial(k)) * term
        k += 1
        if k > 2 * limit:
            raise InternalCheckError("exponential series failed to terminate")


def pushforward_homotopy(F: LInftyMorphism, datum: HomotopyDatum) -> HomotopyDatum:
    """Transport a homotopy datum along a morphism:
    pi'(t) = F^1(exp-bar pi(t)), lambda'(t) = F^1(lambda(t) v exp pi(t));
    the result passes the target-side ODE re-check."""
    cap = F.source.trunc.weight_cap
    t_cap = datum.pi_path.t_cap
    zero = F.target.space.zero()
    pi_w = min(c.min_weight() for c in datum.pi_path.coeffs)
    lam_w = min(c.min_weight() for c in datum.lambda_path.coeffs)
    maxF = max(F.taylor, default=0)

    pi_out = FormalPath([zero], t_cap)
    n = 1
    while n <= maxF and (n - 1) * max(pi_w, 1) < cap + 1:
        term = apply_taylor_to_paths(F.f, n, [datum.pi_path] * n, zero, t_cap)
        pi_out = pi_out + Fraction(1, factorial(n)) * term
        n += 1

    lam_out = FormalPath([zero], t_cap)
    n = 0
    while n + 1 <= maxF and lam_w + n * max(pi_w, 1) <= cap:
        term = apply_taylor_to_paths(
            F.f, n + 1, [datum.lambda_path] + [datum.pi_path] * n, zero, t_cap)
        lam_out = lam_out + Fraction(1, factorial(n)) * term
        n += 1
    return HomotopyDatum(pi_out, lam_out)


_structure_cache = {}


def _as_structure(D: DgLie) -> LInftyStructure:
    key = id(D)
    if key not in _structure_cache:
        from .linfty import from_dgla
        _structure_cache[key] = from_dgla(D, validate=False)
    return _structure_cache[key]
