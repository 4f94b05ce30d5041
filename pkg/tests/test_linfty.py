"""Structures, coalgebra extensions (vs. the tensor-coalgebra oracle),
morphism checks, composition and strict-first inversion."""
import itertools
from fractions import Fraction

import pytest

from formality.fixtures import (
    abelian, abelian_with_d, fix_a, fix_a_shifted_d, filtration_breaker,
    leibniz_breaker, solve_arity2_component, table_dgla,
)
from formality.graded import StructureError, normalize_word
from formality.linfty import (
    check_linfty_structure, check_morphism_equation, compose_morphisms,
    extend_codifferential, extend_morphism, from_dgla, identity_morphism,
    invert_strict_first, iter_words, morphisms_equal, q1_cohomology_dims,
    strict_morphism, induced_cohomology_map,
)


# ---------------------------------------------------------------------------
# tensor-coalgebra oracle: symmetrize, apply the coderivation / morphism
# extension on the tensor coalgebra, compare with the symmetric extension.
# ---------------------------------------------------------------------------

def _tensor_add(acc, key, coeff):
    if coeff:
        acc[key] = acc.get(key, Fraction(0)) + coeff
        if not acc[key]:
            del acc[key]


def symmetrize(factors):
    """iota: Sym -> Tensor, sum over all permutations with Koszul signs."""
    from formality.graded import koszul_sign
    degs = [b.shifted_degree for b in factors]
    out = {}
    for perm in itertools.permutations(range(len(factors))):
        sign = koszul_sign(list(perm), degs)
        _tensor_add(out, tuple(factors[i] for i in perm), Fraction(sign))
    return out


def tensor_coderivation(Q, tensor):
    """Coderivation on the tensor coalgebra cogenerated by (1/k!) Q_k o proj,
    inserted on consecutive blocks with Koszul prefix signs."""
    out = {}
    for word, coeff in tensor.items():
        n = len(word)
        for k in Q.arities():
            for j in range(0, n - k + 1):
                prefix = word[:j]
                block = word[j:j + k]
                suffix = word[j + k:]
                sign = 1
                # Q has shifted degree +1: crossing the prefix
                if sum(b.shifted_degree for b in prefix) % 2:
                    sign = -1
                w = normalize_word(block)
                if w.is_zero():
                    continue
                val = Q.q_word(k, w.factors)
                norm = Fraction(1)
                for i in range(1, k + 1):
                    norm /= i
                for b, c in val.terms.items():
                    _tensor_add(out, prefix + (b,) + suffix,
                                coeff * sign * w.sign * norm * c)
    return out


def tensor_morphism(F, tensor, blocks):
    """Coalgebra-morphism extension on tensors: sum over ordered compositions
    into `blocks` parts, (1/k!) F_k o proj applied per part."""
    out = {}
    for word, coeff in tensor.items():
        n = len(word)
        for sizes in itertools.product(range(1, n + 1), repeat=blocks):
            if sum(sizes) != n:
                continue
            pieces = []
            pos = 0
            for s in sizes:
                pieces.append(word[pos:pos + s])
                pos += s
            vals = []
            ok = True
            for piece in pieces:
                w = normalize_word(piece)
                if w.is_zero():
                    ok = False
                    break
                norm = Fraction(1)
                for i in range(1, len(piece) + 1):
                    norm /= i
                v = F.f_word(len(piece), w.factors)
                vals.append([(b, w.sign * norm * c) for b, c in v.terms.items()])
            if not ok:
                continue
            for combo in itertools.product(*vals):
                key = tuple(b for b, _ in combo)
                val = coeff
                for _, c in combo:
                    val *= c
                _tensor_add(out, key, val)
    return out


def sym_element_to_tensor(se):
    out = {}
    for factors, coeff in se.items():
        for key, c in symmetrize(factors).items():
            _tensor_add(out, key, coeff * c)
    return out


@pytest.fixture(scope="module")
def fixa():
    algebra, ids = fix_a()
    return from_dgla(algebra), algebra, ids


def test_from_dgla_q1_is_minus_d(fixa):
    Q, algebra, ids = fixa
    val = Q.q_word(1, (ids["a"],))
    assert val == Q.space.element({ids["b"]: -1})


def test_from_dgla_q2_sign(fixa):
    Q, algebra, ids = fixa
    # Q2(a v b) = -(-1)^{|a|} [a, b] = +c since |a| = -1
    val = Q.q_word(2, normalize_word([ids["a"], ids["b"]]).factors)
    assert val == Q.space.element({ids["c"]: 1})


def test_from_dgla_abelian_all_zero():
    Q = from_dgla(abelian()[0])
    for n in (1, 2):
        for word in iter_words(Q.space, n):
            assert Q.q_word(n, word).is_zero()


def test_check_structure_passes_fix_a(fixa):
    Q, _, _ = fixa
    assert check_linfty_structure(Q) is None
    assert check_linfty_structure(Q, exhaustive=True) is None


def test_check_structure_abelian_passes():
    assert check_linfty_structure(from_dgla(abelian()[0])) is None


def test_leibniz_breaker_witness_at_arity_2():
    algebra, ids = leibniz_breaker()
    with pytest.raises(StructureError):
        algebra.validate()
    Q = from_dgla(algebra, validate=False)
    witness = check_linfty_structure(Q)
    assert witness is not None
    word, val = witness
    assert len(word) == 2 and not val.is_zero()


def test_filtration_breaker_caught_by_validate():
    algebra, ids = filtration_breaker()
    with pytest.raises(StructureError, match="filtration"):
        algebra.validate()


def test_extension_leibniz_at_arity_2(fixa):
    # Q_2^2(x v y) = Q_1 x v y + (-1)^{|x|} x v Q_1 y
    Q, _, ids = fixa
    for word in iter_words(Q.space, 2):
        got = extend_codifferential(Q, 2, 2)(word)
        expected = {}
        x, y = word
        for b, cf in Q.q_word(1, (x,)).terms.items():
            w = normalize_word([b, y])
            if not w.is_zero():
                _tensor_add(expected, w.factors, cf * w.sign)
        sgn = -1 if x.shifted_degree % 2 else 1
        for b, cf in Q.q_word(1, (y,)).terms.items():
            w = normalize_word([x, b])
            if not w.is_zero():
                _tensor_add(expected, w.factors, sgn * cf * w.sign)
        assert dict(got.items()) == expected


def test_extension_i_equals_1_is_taylor_table(fixa):
    Q, _, ids = fixa
    for n in (1, 2, 3):
        for word in iter_words(Q.space, n):
            se = extend_codifferential(Q, n, 1)(word)
            direct = Q.q_word(n, word)
            acc = Q.space.zero()
            for factors, coeff in se.items():
                assert len(factors) == 1
                acc = acc + coeff * Q.space.element({factors[0]: 1})
            assert acc == direct


def test_codifferential_extension_matches_tensor_oracle(fixa):
    Q, _, _ = fixa
    for n in (2, 3, 4):
        for word in iter_words(Q.space, n):
            tensor = symmetrize(word)
            oracle = tensor_coderivation(Q, tensor)
            for i in range(1, n + 1):
                got = sym_element_to_tensor(extend_codifferential(Q, n, i)(word))
                want = {k: v for k, v in oracle.items() if len(k) == i}
                assert got == want, (word, i)


def test_morphism_extension_matches_tensor_oracle(fixa):
    Q, algebra, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    assert F is not None and not F.f_word(2, _word(ids, "b", "b")).is_zero()
    for n in (2, 3):
        for word in iter_words(Q.space, n):
            tensor = symmetrize(word)
            for j in range(1, n + 1):
                got = sym_element_to_tensor(extend_morphism(F, n, j)(word))
                want = tensor_morphism(F, tensor, j)
                want = {k: v for k, v in want.items() if len(k) == j}
                assert got == want, (word, j)


def _word(ids, *names):
    return normalize_word([ids[n] for n in names]).factors


def test_identity_passes_morphism_check(fixa):
    Q, _, _ = fixa
    assert check_morphism_equation(identity_morphism(Q)) is None


def test_strict_non_bracket_map_fails_at_arity_2(fixa):
    Q, _, ids = fixa
    scale = {"a": 1, "b": 1, "c": 2}

    def f1(b):
        return Q.space.element({b: scale[b.index[0]]})

    F = strict_morphism(Q, Q, f1)
    witness = check_morphism_equation(F)
    assert witness is not None and len(witness[0]) == 2


def test_generated_arity2_morphism_passes(fixa):
    Q, _, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    assert F is not None
    # F2(b v b) = (gamma - alpha^2) c = c
    assert F.f_word(2, _word(ids, "b", "b")) == Q.space.element({ids["c"]: 1})
    assert check_morphism_equation(F) is None


def test_compose_with_identity(fixa):
    Q, _, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    I = identity_morphism(Q)
    assert morphisms_equal(compose_morphisms(I, F), F)
    assert morphisms_equal(compose_morphisms(F, I), F)


def test_compose_arity1_functoriality(fixa):
    Q, _, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    G = solve_arity2_component({"a": 1, "b": 1, "c": 3}, Q, Q)
    H = compose_morphisms(G, F)
    for b in Q.space.iter_basis():
        x = Q.space.element({b: 1})
        assert H.f1(x) == G.f1(F.f1(x))


def test_compose_strict_morphisms_strict(fixa):
    Q, _, ids = fixa

    def f1(b):
        return Q.space.element({b: 2})

    F = strict_morphism(Q, Q, f1)
    G = strict_morphism(Q, Q, f1)
    H = compose_morphisms(G, F)
    for n in range(2, Q.trunc.arity_cap + 1):
        for word in iter_words(Q.space, n):
            assert H.f_word(n, word).is_zero()
    for b in Q.space.iter_basis():
        assert H.f_word(1, (b,)) == Q.space.element({b: 4})


def test_compose_is_associative(fixa):
    Q, _, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    G = solve_arity2_component({"a": 1, "b": 1, "c": 3}, Q, Q)
    H = solve_arity2_component({"a": 2, "b": 2, "c": 1}, Q, Q)
    left = compose_morphisms(H, compose_morphisms(G, F))
    right = compose_morphisms(compose_morphisms(H, G), F)
    assert morphisms_equal(left, right)


def test_invert_identity(fixa):
    Q, _, _ = fixa
    I = identity_morphism(Q)
    G = invert_strict_first(I)
    assert morphisms_equal(G, I)


def test_invert_strict_iso(fixa):
    Q, _, ids = fixa
    scale = {"a": 2, "b": 2, "c": 3}

    def f1(b):
        return Q.space.element({b: scale[b.index[0]]})

    F = strict_morphism(Q, Q, f1)
    G = invert_strict_first(F)
    for b in Q.space.iter_basis():
        assert G.f_word(1, (b,)) == Q.space.element(
            {b: Fraction(1, scale[b.index[0]])})
    assert morphisms_equal(compose_morphisms(G, F), identity_morphism(Q))


def test_invert_arity2_correction():
    # F1 = id with a single nonzero F2 on the abelian structure: G2 = -F2
    algebra, ids = abelian()
    Q = from_dgla(algebra)
    F = solve_arity2_component({"a": 1, "b": 1, "c": 1}, Q, Q)
    if F is None or all(F.f_word(2, w).is_zero() for w in iter_words(Q.space, 2)):
        pytest.skip("generator found no nonzero F2")
    G = invert_strict_first(F)
    for word in iter_words(Q.space, 2):
        assert G.f_word(2, word) == -1 * F.f_word(2, word)
    assert morphisms_equal(compose_morphisms(G, F), identity_morphism(Q))
    assert morphisms_equal(compose_morphisms(F, G), identity_morphism(Q))


def test_invert_nonstrict_two_sided(fixa):
    Q, _, ids = fixa
    F = solve_arity2_component({"a": 1, "b": 1, "c": 2}, Q, Q)
    G = invert_strict_first(F)
    assert morphisms_equal(compose_morphisms(G, F), identity_morphism(Q))
    assert morphisms_equal(compose_morphisms(F, G), identity_morphism(Q))


def test_invert_singular_raises(fixa):
    from formality.graded import RankError
    Q, _, ids = fixa

    def f1(b):
        if b.index[0] == "c":
            return Q.space.zero()
        return Q.space.element({b: 1})

    F = strict_morphism(Q, Q, f1)
    with pytest.raises(RankError):
        invert_strict_first(F)


def test_cohomology_dims(fixa):
    Q, _, _ = fixa
    dims = q1_cohomology_dims(Q)
    # d: <a> -> <b, c>: H^0 = 0, H^1 = 1
    assert dims[0] == 0 and dims[1] == 1


def test_induced_cohomology_map_identity(fixa):
    Q, _, _ = fixa
    I = identity_morphism(Q)
    data = induced_cohomology_map(I)
    assert any(any(v != 0 for v in vals) for vals in data.values())


def test_mc_residual_example_variant():
    # valid variant with db = c: residual of b is c (checked in test_mc too)
    algebra, ids = fix_a_shifted_d()
    Q = from_dgla(algebra)
    assert check_linfty_structure(Q) is None
