"""Exact sparse multilinear algebra over Q for graded filtered vector spaces.

Everything downstream is built on four primitives that live here:

* ``BasisId`` / ``Space`` / ``GradedElement`` -- sparse rational linear
  combinations of basis terms in a graded space with a descending integer
  filtration, truncated at a weight cap.
* ``SymWord`` and the Koszul-sign combinatorics (``koszul_sign``,
  ``normalize_word``, ``unshuffles``) on symmetric words in the shifted
  grading.
* ``FormalPath`` -- polynomials in a parameter t with element coefficients
  and exact calculus (differentiate / integrate / evaluate).
* ``solve_linear_exact`` -- Gaussian elimination over Q with a kernel basis
  and an explicit inconsistency certificate.

All coefficients are ``fractions.Fraction``; there is no floating point
anywhere, so every identity checked by the package is exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class InputError(ValueError):
    """Malformed arguments (bad permutation, mixed spaces, size mismatch)."""


class CapError(RuntimeError):
    """A computation needs more room than the truncation caps provide."""


class StructureError(RuntimeError):
    """An algebraic invariant failed (carries a witness)."""


class PreconditionError(RuntimeError):
    """A documented operation precondition failed (carries the residual)."""


class InternalCheckError(RuntimeError):
    """A mandatory internal re-verification failed; indicates corrupt input data."""


class RankError(RuntimeError):
    """A linear map required to be invertible is not (carries a kernel witness)."""


def rat(x) -> Fraction:
    """Coerce ints / strings like ``"2/3"`` to Fraction."""
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True, order=True)
class BasisId:
    """A basis term: space tag, structured index, degree and filtration weight.

    ``degree`` is the cohomological degree in the unshifted space; the shifted
    degree used for Koszul signs is ``degree - 1``.
    """

    space: str
    index: tuple
    degree: int
    weight: int

    @property
    def shifted_degree(self) -> int:
        return self.degree - 1

    def __repr__(self):
        return f"{self.space}{list(self.index)}"


@dataclass(frozen=True)
class TruncationContext:
    """Caps: compute mod weight > weight_cap, Taylor tables up to arity_cap,
    t-polynomials up to degree t_cap.

    ``arity_cap >= weight_cap`` makes the exponential sums over weight >= 1
    elements terminate inside the stored tables, so truncation is exact.
    """

    weight_cap: int
    arity_cap: int
    t_cap: int

    def __post_init__(self):
        if self.arity_cap < self.weight_cap:
            raise InputError(
                f"arity cap {self.arity_cap} must be >= weight cap {self.weight_cap}")
        if self.t_cap < self.weight_cap:
            raise InputError(
                f"t-degree cap {self.t_cap} must be >= weight cap {self.weight_cap}")


class Space:
    """A graded filtered space with a (possibly lazily enumerated) basis."""

    def __init__(self, tag: str, trunc: TruncationContext, basis=None, min_weight=None):
        self.tag = tag
        self.trunc = trunc
        self._basis = list(basis) if basis is not None else None
        if self._basis is not None:
            for b in self._basis:
                if b.space != tag:
                    raise InputError(f"basis id {b} does not belong to space {tag}")
        if min_weight is None and self._basis:
            min_weight = min(b.weight for b in self._basis)
        self.min_weight = 0 if min_weight is None else min_weight

    def iter_basis(self):
        if self._basis is None:
            raise InputError(f"space {self.tag} has no enumerable basis")
        return iter(self._basis)

    def basis_list(self):
        return list(self.iter_basis())

    def zero(self) -> "GradedElement":
        return GradedElement(self, {})

    def element(self, terms) -> "GradedElement":
        return GradedElement(self, terms)

    def __repr__(self):
        return f"Space({self.tag})"


class GradedElement:
    """Sparse exact-rational combination of basis terms of one space.

    Terms of weight above the space's weight cap are dropped at construction
    ("working mod F^{N+1}"); zero coefficients are never stored.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space: Space, terms):
        self.space = space
        cap = space.trunc.weight_cap
        clean = {}
        for b, c in terms.items():
            if b.space != space.tag:
                raise InputError(f"term {b} does not live in space {space.tag}")
            c = rat(c)
            if c and b.weight <= cap:
                clean[b] = c
        self.terms = clean

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, GradedElement)
                and self.space.tag == other.space.tag
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.space.tag, frozenset(self.terms.items())))

    def __add__(self, other):
        if other.space.tag != self.space.tag:
            raise InputError("cannot add elements of different spaces")
        out = dict(self.terms)
        for b, c in other.terms.items():
            s = out.get(b, ZERO) + c
            if s:
                out[b] = s
            else:
                out.pop(b, None)
        return GradedElement(self.space, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return GradedElement(self.space, {b: -c for b, c in self.terms.items()})

    def __rmul__(self, scalar):
        scalar = rat(scalar)
        if not scalar:
            return GradedElement(self.space, {})
        return GradedElement(self.space, {b: scalar * c for b, c in self.terms.items()})

    __mul__ = __rmul__

    def coefficient(self, basis_id) -> Fraction:
        return self.terms.get(basis_id, ZERO)

    def degree(self):
        """Common degree of all terms, or None for 0 / mixed elements."""
        degs = {b.degree for b in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def min_weight(self):
        """Smallest filtration weight present (cap + 1 for the zero element)."""
        if not self.terms:
            return self.space.trunc.weight_cap + 1
        return min(b.weight for b in self.terms)

    def reduce_to(self, cap: int) -> "GradedElement":
        """Drop terms of weight > cap (assertion-level reduction)."""
        return GradedElement(self.space, {b: c for b, c in self.terms.items()
                                          if b.weight <= cap})

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for b in sorted(self.terms):
            bits.append(f"{self.terms[b]}*{b}")
        return " + ".join(bits)


def koszul_sign(permutation, shifted_degrees) -> int:
    """Sign of rearranging graded factors: position i of the result holds
    factor ``permutation[i]`` of the input.

    Each crossing of two factors of shifted degrees p, q contributes (-1)^{pq}.
    """
    n = len(shifted_degrees)
    if sorted(permutation) != list(range(n)):
        raise InputError(f"not a permutation of 0..{n - 1}: {permutation}")
    sign = 1
    for i in range(n):
        for j in range(i + 1, n):
            if permutation[i] > permutation[j]:
                if (shifted_degrees[permutation[i]] % 2) and \
                   (shifted_degrees[permutation[j]] % 2):
                    sign = -sign
    return sign


class SymWord:
    """A symmetric word in the shifted space: canonically ordered factors with
    the Koszul sign accumulated during sorting. ``sign == 0`` encodes the zero
    word (repeated factor of odd shifted degree)."""

    __slots__ = ("factors", "sign")

    def __init__(self, factors, sign):
        self.factors = tuple(factors)
        self.sign = sign

    def is_zero(self) -> bool:
        return self.sign == 0

    def shifted_degrees(self):
        return tuple(b.shifted_degree for b in self.factors)

    def total_shifted_degree(self) -> int:
        return sum(b.shifted_degree for b in self.factors)

    def weight(self) -> int:
        return sum(b.weight for b in self.factors)

    def __len__(self):
        return len(self.factors)

    def __eq__(self, other):
        return self.factors == other.factors and self.sign == other.sign

    def __hash__(self):
        return hash((self.factors, self.sign))

    def __repr__(self):
        if self.sign == 0:
            return "0w"
        body = "v".join(repr(b) for b in self.factors) or "()"
        return f"{'+' if self.sign > 0 else '-'}{body}"


def _word_key(b: BasisId):
    return (b.shifted_degree, b)


def normalize_word(raw_factors, raw_sign=1) -> SymWord:
    """Sort factors into canonical order (shifted degree, then basis id),
    accumulating the Koszul sign; detect odd squares."""
    factors = list(raw_factors)
    space_tags = {b.space for b in factors}
    if len(space_tags) > 1:
        raise InputError(f"word mixes spaces {space_tags}")
    order = sorted(range(len(factors)), key=lambda i: _word_key(factors[i]))
    degs = [b.shifted_degree for b in factors]
    sign = raw_sign * koszul_sign(order, degs)
    sorted_factors = [factors[i] for i in order]
    for x, y in zip(sorted_factors, sorted_factors[1:]):
        if x == y and x.shifted_degree % 2:
            return SymWord(sorted_factors, 0)
    return SymWord(sorted_factors, sign)


def canonical_word(raw_factors):
    """(factors tuple, sign) of the canonical form; sign 0 for the zero word."""
    w = normalize_word(raw_factors)
    return w.factors, w.sign


def unshuffles(word: SymWord, parts):
    """All (i_1,...,i_l)-unshuffles of a word into ordered blocks, each block
    keeping the canonical factor order, with Koszul signs.

    Returns a list of (tuple of SymWord blocks, sign); the count equals the
    multinomial coefficient when all factors are distinct.
    """
    n = len(word)
    parts = tuple(parts)
    if any(p < 1 for p in parts) or sum(parts) != n:
        raise InputError(f"parts {parts} do not partition a word of length {n}")
    degs = list(word.shifted_degrees())
    out = []
    for assignment in _block_assignments(tuple(range(n)), parts):
        flat = [i for block in assignment for i in block]
        sign = koszul_sign(flat, degs) * word.sign
        blocks = tuple(SymWord([word.factors[i] for i in block], 1)
                       for block in assignment)
        out.append((blocks, sign))
    return out


def _block_assignments(indices, parts):
    """Split an ascending index tuple into ordered blocks of given sizes, each
    block ascending."""
    if not parts:
        yield ()
        return
    first, rest = parts[0], parts[1:]
    for block in itertools.combinations(indices, first):
        remaining = tuple(i for i in indices if i not in block)
        for tail in _block_assignments(remaining, rest):
            yield (block,) + tail


def set_partitions(indices, blocks: int):
    """Set partitions of an index tuple into a given number of nonempty blocks,
    each block ascending, blocks ordered by their minimal element."""
    indices = tuple(indices)
    if blocks == 0:
        if not indices:
            yield ()
        return
    if len(indices) < blocks:
        return
    if blocks == 1:
        yield (indices,)
        return
    first, rest = indices[0], indices[1:]
    # block containing the first index, then recurse on the rest
    for k in range(0, len(rest) + 1):
        for others in itertools.combinations(rest, k):
            block = (first,) + others
            remaining = tuple(i for i in rest if i not in others)
            for tail in set_partitions(remaining, blocks - 1):
                yield (block,) + tail


class FormalPath:
    """Polynomial in the homotopy parameter t with element coefficients.

    Coefficient values just need +, unary -, scalar * and ``is_zero``; both
    GradedElement and the convolution elements qualify.
    """

    __slots__ = ("coeffs", "t_cap")

    def __init__(self, coeffs, t_cap: int):
        coeffs = list(coeffs)
        if not coeffs:
            raise InputError("a path needs at least one coefficient (its value at 0)")
        if len(coeffs) - 1 > t_cap:
            raise CapError(f"t-degree {len(coeffs) - 1} exceeds cap {t_cap}")
        self.coeffs = coeffs
        self.t_cap = t_cap

    @classmethod
    def constant(cls, value, t_cap: int):
        return cls([value], t_cap)

    def zero_value(self):
        return ZERO * self.coeffs[0]

    def coefficient(self, k: int):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return self.zero_value()

    def degree(self) -> int:
        d = len(self.coeffs) - 1
        while d > 0 and self.coeffs[d].is_zero():
            d -= 1
        return d

    def differentiate(self) -> "FormalPath":
        if len(self.coeffs) == 1:
            return FormalPath([self.zero_value()], self.t_cap)
        return FormalPath([Fraction(k) * c for k, c in enumerate(self.coeffs)][1:],
                          self.t_cap)

    def integrate(self) -> "FormalPath":
        """Antiderivative with constant term 0; raises CapError on t overflow."""
        if self.degree() + 1 > self.t_cap:
            raise CapError(
                f"integration needs t-degree {self.degree() + 1} > cap {self.t_cap}")
        out = [self.zero_value()]
        out.extend(Fraction(1, k + 1) * c for k, c in enumerate(self.coeffs))
        return FormalPath(out, self.t_cap)

    def evaluate(self, s):
        s = rat(s)
        acc = self.zero_value()
        power = ONE
        for c in self.coeffs:
            acc = acc + power * c
            power *= s
        return acc

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return FormalPath([self.coefficient(k) + other.coefficient(k)
                           for k in range(n)], self.t_cap)

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        scalar = rat(scalar)
        return FormalPath([scalar * c for c in self.coeffs], self.t_cap)

    __mul__ = __rmul__

    def shift_t(self) -> "FormalPath":
        """Multiply by t."""
        if len(self.coeffs) > self.t_cap:
            raise CapError("t-degree overflow")
        return FormalPath([self.zero_value()] + self.coeffs, self.t_cap)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return all(self.coefficient(k) == other.coefficient(k) for k in range(n))

    def __repr__(self):
        return " + ".join(f"({c})t^{k}" for k, c in enumerate(self.coeffs)
                          if not (hasattr(c, "is_zero") and c.is_zero())) or "0"


@dataclass
class LinearSolution:
    """Particular solution plus kernel basis of an exact linear system."""
    particular: dict
    kernel: list
    unknowns: list

    @property
    def consistent(self):
        return True


@dataclass
class Inconsistency:
    """Certificate: coefficients of input rows combining to 0 = nonzero."""
    combination: dict
    value: Fraction

    @property
    def consistent(self):
        return False


def _row_terms(row):
    return row.terms if isinstance(row, GradedElement) else row


def solve_linear_exact(rows, unknowns=None):
    """Solve a finite linear system over Q.

    ``rows`` is a list of (coefficients, rhs) where coefficients is a dict
    unknown -> Fraction (a GradedElement works: its terms map is used). Returns
    LinearSolution (particular + kernel basis) or an Inconsistency certificate
    combining the input rows into 0 = nonzero.

    ``unknowns`` forces the variable set (zero columns then show up in the
    kernel); by default only variables with a nonzero coefficient count.
    """
    mat = []
    seen = set()
    for coeffs, rhs in rows:
        terms = {k: rat(v) for k, v in _row_terms(coeffs).items() if rat(v)}
        seen.update(terms)
        mat.append((terms, rat(rhs)))
    if unknowns is not None:
        seen.update(unknowns)
    unknowns = sorted(seen, key=repr)
    col_of = {u: i for i, u in enumerate(unknowns)}
    m, n = len(mat), len(unknowns)
    # dense elimination with row-combination tracking (certificates)
    a = [[ZERO] * n for _ in range(m)]
    b = [ZERO] * m
    hist = [{i: ONE} for i in range(m)]  # row i as combination of input rows
    for i, (terms, rhs) in enumerate(mat):
        for u, v in terms.items():
            a[i][col_of[u]] = v
        b[i] = rhs
    pivots = {}
    row = 0
    for col in range(n):
        piv = next((r for r in range(row, m) if a[r][col]), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        b[row], b[piv] = b[piv], b[row]
        hist[row], hist[piv] = hist[piv], hist[row]
        inv = 1 / a[row][col]
        a[row] = [x * inv for x in a[row]]
        b[row] *= inv
        hist[row] = {k: v * inv for k, v in hist[row].items()}
        for r in range(m):
            if r != row and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[row])]
                b[r] -= f * b[row]
                for k, v in hist[row].items():
                    nv = hist[r].get(k, ZERO) - f * v
                    if nv:
                        hist[r][k] = nv
                    else:
                        hist[r].pop(k, None)
        pivots[col] = row
        row += 1
        if row == m:
            break
    for r in range(m):
        if b[r] and all(not x for x in a[r]):
            return Inconsistency(combination=hist[r], value=b[r])
    particular = {}
    for col, r in pivots.items():
        if b[r]:
            particular[unknowns[col]] = b[r]
    kernel = []
    free_cols = [c for c in range(n) if c not in pivots]
    for fc in free_cols:
        vec = {unknowns[fc]: ONE}
        for col, r in pivots.items():
            if a[r][fc]:
                vec[unknowns[col]] = -a[r][fc]
        kernel.append(vec)
    return LinearSolution(particular=particular, kernel=kernel, unknowns=unknowns)
