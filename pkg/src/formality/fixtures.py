"""Small DGLA fixtures and seeded generators used by tests and the CLI suites.

The workhorse is the three-element algebra ``fix_a``:
    a (degree 0, weight 1), b (degree 1, weight 1), c (degree 1, weight 2)
    da = b,  db = dc = 0,  [a, b] = c,  all other brackets 0,
    filtration  F^1 = <a, b, c>,  F^2 = <c>,  F^3 = 0.
Leibniz and Jacobi hold, the differential and bracket respect the filtration,
and every degree-1 element is Maurer-Cartan.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .graded import BasisId, GradedElement, Space, TruncationContext
from .linfty import (
    DgLie, LInftyMorphism, LInftyStructure, TaylorTable, from_dgla,
    iter_words, solve_linear_exact,
)

DEFAULT_TRUNC = TruncationContext(weight_cap=3, arity_cap=4, t_cap=4)


def table_dgla(tag, spec, d_table, bracket_table, trunc=None, validate=True):
    """Build a DgLie from name-keyed tables.

    spec: list of (name, degree, weight); d_table: name -> {name: coeff};
    bracket_table: (name, name) -> {name: coeff}, one order per pair (the
    graded-antisymmetric counterpart is filled in automatically).
    """
    trunc = trunc or DEFAULT_TRUNC
    ids = {name: BasisId(tag, (name,), deg, w) for name, deg, w in spec}
    space = Space(tag, trunc, list(ids.values()))

    full_bracket = {}
    for (x, y), val in bracket_table.items():
        full_bracket[(x, y)] = dict(val)
        sign = -1 if (ids[x].degree % 2) and (ids[y].degree % 2) else 1
        if (y, x) not in bracket_table:
            full_bracket[(y, x)] = {n: -sign * Fraction(c) for n, c in val.items()}

    def d_fn(b):
        row = d_table.get(b.index[0], {})
        return space.element({ids[n]: Fraction(c) for n, c in row.items()})

    def br_fn(b1, b2):
        row = full_bracket.get((b1.index[0], b2.index[0]), {})
        return space.element({ids[n]: Fraction(c) for n, c in row.items()})

    algebra = DgLie(space, d_fn, br_fn)
    if validate:
        algebra.validate()
    return algebra, ids


def fix_a(trunc=None, validate=True):
    return table_dgla(
        "g",
        [("a", 0, 1), ("b", 1, 1), ("c", 1, 2)],
        {"a": {"b": 1}},
        {("a", "b"): {"c": 1}},
        trunc=trunc, validate=validate)


def fix_a_shifted_d(trunc=None):
    """Variant with a degree-2 generator z and db = z: degree-1 elements are
    no longer all Maurer-Cartan (the residual of b is z)."""
    return table_dgla(
        "g",
        [("a", 0, 1), ("b", 1, 1), ("c", 1, 2), ("z", 2, 2)],
        {"b": {"z": 1}},
        {("a", "b"): {"c": 1}},
        trunc=trunc, validate=True)


def abelian(trunc=None):
    """Zero bracket and zero differential on the fix_a basis."""
    return table_dgla(
        "g",
        [("a", 0, 1), ("b", 1, 1), ("c", 1, 2)],
        {}, {}, trunc=trunc, validate=True)


def abelian_with_d(trunc=None):
    """Zero bracket, da = b."""
    return table_dgla(
        "g",
        [("a", 0, 1), ("b", 1, 1), ("c", 1, 2)],
        {"a": {"b": 1}}, {}, trunc=trunc, validate=True)


def leibniz_breaker(trunc=None):
    """du = v, dw = z, [u, v] = w: Leibniz fails (d[u,v] = z but [du,v] = 0),
    so the structure check has a witness at arity 2."""
    return table_dgla(
        "g",
        [("u", 0, 1), ("v", 1, 1), ("w", 1, 2), ("z", 2, 2)],
        {"u": {"v": 1}, "w": {"z": 1}},
        {("u", "v"): {"w": 1}},
        trunc=trunc, validate=False)


def filtration_breaker(trunc=None):
    """[a, b] = b lands in F^1 instead of F^2: a consistent unfiltered DGLA
    whose filtration compatibility fails."""
    return table_dgla(
        "g",
        [("a", 0, 1), ("b", 1, 1), ("c", 1, 2)],
        {"a": {"b": 1}},
        {("a", "b"): {"b": 1}},
        trunc=trunc, validate=False)


def mk_even_basis():
    """Three distinct even generators (shifted degree 0) for word combinatorics."""
    return [BasisId("e", (n,), 1, 1) for n in ("x", "y", "z")]


def seeded_rng(seed: int) -> random.Random:
    return random.Random(seed)


def random_element(space: Space, ids, names, rng, nonzero=True) -> GradedElement:
    """Coefficients drawn from {-2..2} on the named generators."""
    while True:
        e = space.element({ids[n]: Fraction(rng.randint(-2, 2)) for n in names})
        if not nonzero or not e.is_zero():
            return e


def solve_arity2_component(F1_diag, Qs: LInftyStructure, Qt: LInftyStructure):
    """Test-data generator: given a strict chain map (as a diagonal table
    name -> scalar on matching bases), solve the arity-2 morphism constraint
    for F_2 and return the resulting morphism. Returns None if only F_2 = 0
    solves it."""
    src, tgt = Qs.space, Qt.space
    src_ids = {b.index[0]: b for b in src.iter_basis()}
    tgt_ids = {b.index[0]: b for b in tgt.iter_basis()}

    def f1_on_basis(b):
        coeff = Fraction(F1_diag.get(b.index[0], 0))
        t = tgt_ids.get(b.index[0])
        return tgt.element({t: coeff}) if t is not None else tgt.zero()

    # unknowns: (word, target basis id) with matching degree and admissible weight
    unknowns = []
    for word in iter_words(src, 2):
        want_degree = sum(b.shifted_degree for b in word) + 1
        weight = sum(b.weight for b in word)
        for t in tgt.iter_basis():
            if t.degree == want_degree and t.weight >= weight:
                unknowns.append((word, t))
    if not unknowns:
        return None

    def f2_sym_element(se):
        """Linear expansion of F_2 over a SymElement, as a row in the unknowns."""
        row = {}
        for factors, coeff in se.items():
            for (w, t) in unknowns:
                if w == factors:
                    row[(w, t)] = row.get((w, t), Fraction(0)) + coeff
        return row

    rows = []
    from .linfty import extend_codifferential
    for word in iter_words(src, 2):
        # constant part: F1(Q2(word)) - Q'2(F1 x v F1 y)
        const = _f1_apply(tgt, f1_on_basis, Qs.q_word(2, word))
        const = const - Qt.q(2, (f1_on_basis(word[0]), f1_on_basis(word[1])))
        # linear parts: F2(Q_2^2(word)) - Q'1(F2(word))
        ext = extend_codifferential(Qs, 2, 2)(word)
        lin = {}
        for (w, t), v in f2_sym_element(ext).items():
            lin[(w, t)] = lin.get((w, t), Fraction(0)) + v
        for t in tgt.iter_basis():
            # row for each target coordinate
            row = {}
            for (w, u), v in lin.items():
                if u == t:
                    # F2 contributes u to the t-coordinate directly
                    row[(w, u)] = row.get((w, u), Fraction(0)) + v
            # Q'1 F2(word): expand through the differential of each candidate
            for (w, u) in unknowns:
                if w == word:
                    q1u = Qt.q_word(1, (u,))
                    cf = q1u.coefficient(t)
                    if cf:
                        row[(w, u)] = row.get((w, u), Fraction(0)) - cf
            rhs = -const.coefficient(t)
            if row or rhs:
                rows.append((row, rhs))
    sol = solve_linear_exact(rows, unknowns=unknowns)
    if not sol.consistent:
        return None
    assignment = dict(sol.particular)
    if all(v == 0 for v in assignment.values()) and sol.kernel:
        # prefer a nonzero solution when the kernel allows one
        for k, v in sol.kernel[0].items():
            assignment[k] = assignment.get(k, Fraction(0)) + v

    table = {}
    for (w, t), v in assignment.items():
        if v:
            table.setdefault(w, {})[t] = v

    def f2(word):
        return tgt.element(table.get(word, {}))

    taylor = {1: TaylorTable(1, src, tgt, lambda w: f1_on_basis(w[0]), name="F1"),
              2: TaylorTable(2, src, tgt, f2, name="F2")}
    return LInftyMorphism(Qs, Qt, taylor)


def _f1_apply(target, f1_on_basis, elem):
    acc = target.zero()
    for b, c in elem.terms.items():
        acc = acc + c * f1_on_basis(b)
    return acc
