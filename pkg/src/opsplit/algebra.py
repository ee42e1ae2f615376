"""Order-condition algebra for splitting and composition integrators.

A splitting scheme alternates flows of two vector fields.  The flow weighted
by ``a[j]`` integrates part 1 and the flow weighted by ``b[j]`` integrates
part 2, applied in the order ``a[0], b[0], a[1], ..., b[s-1], a[s]``.  The
order of accuracy is characterised by polynomial conditions indexed either by
words over the alphabet {1, 2} or by multi-indices of positive integers; in
both families it suffices to check Lyndon representatives.

This module provides the combinatorial generators (Lyndon words and
multi-indices, shuffle products), the coefficient polynomials for split
schemes (``word_coefficient``, ``multiindex_condition``), compositions of a
time-symmetric kernel (``composition_u``), compositions of an adjoint pair
(``adjoint_pair_w``), and the derived order queries built on top of them.
All functions are pure and all containers immutable, so concurrent use is
safe.  Arithmetic is generic: exact results are returned for exact inputs
(``int``/``Fraction``), while float and complex inputs use compensated
summation where cancellations matter.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Mapping, Sequence, Union

__all__ = [
    "AlphaSequence",
    "GammaSequence",
    "MultiIndex",
    "NotConsistent",
    "OrderReport",
    "SchemeCoefficients",
    "Word",
    "adjoint_pair_w",
    "composition_u",
    "exclude_index_ge",
    "flow_sequence_order",
    "flow_sequence_word_coefficients",
    "generalized_order",
    "is_lyndon",
    "lyndon_multi_indices",
    "lyndon_words",
    "multiindex_condition",
    "multiindex_rhs",
    "negative_step_witness",
    "rkn_order",
    "rkn_retained_multi_indices",
    "shuffle",
    "swap_parts",
    "word_coefficient",
    "word_order",
]

#: A word over the two-letter alphabet {1, 2}.
Word = tuple[int, ...]

#: A multi-index: a tuple of positive integers.  Its weight is the sum.
MultiIndex = tuple[int, ...]

#: A flow generator for :func:`flow_sequence_word_coefficients`: either a
#: single letter (1 or 2) or a word polynomial given as a mapping.
FlowGenerator = Union[int, Mapping[Word, object]]

_DEFAULT_TOL = 1e-10


class NotConsistent(ValueError):
    """Raised when an order query requires Σa = Σb = 1 but the sums differ."""


def _csum(terms: Sequence) -> object:
    """Sum a list of scalars, exactly for rationals, compensated for floats."""
    terms = list(terms)
    if not terms:
        return 0
    if all(isinstance(t, Rational) for t in terms):
        return sum(terms)
    if any(isinstance(t, complex) for t in terms):
        return complex(
            math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms)
        )
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Coefficient containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeCoefficients:
    """Weights of a two-part splitting scheme, in application order.

    Parameters
    ----------
    a:
        ``s + 1`` weights for the part-1 flow.
    b:
        ``s`` weights for the part-2 flow.
    """

    a: tuple
    b: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        if len(self.a) != len(self.b) + 1:
            raise ValueError(
                f"need len(a) == len(b) + 1, got {len(self.a)} and {len(self.b)}"
            )
        if not self.b:
            raise ValueError("at least one part-2 stage is required")

    @property
    def stages(self) -> int:
        """Number of part-2 stages ``s``."""
        return len(self.b)

    @property
    def c_cumulative(self) -> tuple:
        """Cumulative sums ``c_i = a_1 + ... + a_i`` for ``i = 1..s``."""
        out, acc = [], 0
        for aj in self.a[:-1]:
            acc = acc + aj
            out.append(acc)
        return tuple(out)

    @property
    def real(self) -> bool:
        """True when every coefficient has zero imaginary part."""
        return all(complex(x).imag == 0 for x in self.a + self.b)

    def consistent(self, tol: float = 1e-12) -> bool:
        """True when Σa and Σb both equal 1 within ``tol``."""
        return (
            abs(_csum(self.a) - 1) <= tol and abs(_csum(self.b) - 1) <= tol
        )


@dataclass(frozen=True)
class GammaSequence:
    """Weights of a composition of a time-symmetric kernel.

    Parameters
    ----------
    gamma:
        Substep fractions, in application order.
    basic_order:
        Even order of the kernel being composed (2 for a symmetric
        second-order kernel).  Determines which multi-indices carry
        meaningful conditions: indices from ``{1, basic_order + 1,
        basic_order + 3, ...}``.
    """

    gamma: tuple
    basic_order: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", tuple(self.gamma))
        if self.basic_order < 2 or self.basic_order % 2:
            raise ValueError("basic_order must be an even integer >= 2")

    @property
    def stages(self) -> int:
        return len(self.gamma)

    @property
    def palindromic(self) -> bool:
        """True when the sequence reads the same in both directions."""
        return self.gamma == self.gamma[::-1]


@dataclass(frozen=True)
class AlphaSequence:
    """Weights of a composition alternating a map and its adjoint.

    The sequence ``alpha`` has even length ``2s``; odd positions weight the
    adjoint kernel and even positions the kernel itself, in application
    order.
    """

    alpha: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(self.alpha))
        if len(self.alpha) % 2:
            raise ValueError("alpha must have even length")

    @property
    def stages(self) -> int:
        return len(self.alpha) // 2

    @property
    def time_symmetric(self) -> bool:
        """True when the sequence is palindromic."""
        return self.alpha == self.alpha[::-1]

    @property
    def symmetric_conjugate(self) -> bool:
        """True when reversal equals elementwise complex conjugation."""
        return all(
            complex(x) == complex(y).conjugate()
            for x, y in zip(self.alpha, self.alpha[::-1])
        )


@dataclass(frozen=True)
class OrderReport:
    """Result of an order determination.

    Attributes
    ----------
    order:
        Largest ``r`` such that every condition of weight ``<= r`` holds
        within the tolerance used.
    worst_residuals:
        Worst absolute condition residual found at each weight checked.
    """

    order: int
    worst_residuals: dict[int, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Lyndon combinatorics
# ---------------------------------------------------------------------------

def is_lyndon(seq: Sequence[int]) -> bool:
    """True when ``seq`` is strictly smaller than all its proper suffixes."""
    s = tuple(seq)
    if not s:
        return False
    return all(s < s[i:] for i in range(1, len(s)))


def lyndon_words(max_len: int) -> list[Word]:
    """All Lyndon words over {1, 2} up to ``max_len`` letters.

    Uses Duval's generation; the result is sorted by (length, lexicographic).

    Examples
    --------
    >>> lyndon_words(2)
    [(1,), (2,), (1, 2)]
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out: list[Word] = []
    w = [1]
    while w:
        out.append(tuple(w))
        # extend periodically to max length, then increment the last letter
        w = [w[i % len(w)] for i in range(max_len)]
        while w and w[-1] == 2:
            w.pop()
        if w:
            w[-1] += 1
    out.sort(key=lambda word: (len(word), word))
    return out


def _compositions(total: int):
    """All ordered tuples of positive integers summing to ``total``."""
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def exclude_index_ge(m: int) -> Callable[[MultiIndex], bool]:
    """Filter predicate keeping multi-indices whose entries are all below ``m``."""

    def keep(mi: MultiIndex) -> bool:
        return all(i < m for i in mi)

    return keep


_NAMED_FILTERS: dict[str, Callable[[MultiIndex], bool]] = {
    "all": lambda mi: True,
    "odd_indices": lambda mi: all(i % 2 == 1 for i in mi),
    "odd_weight": lambda mi: sum(mi) % 2 == 1,
}


def lyndon_multi_indices(
    max_weight: int,
    filter: Union[str, Callable[[MultiIndex], bool]] = "all",
) -> list[MultiIndex]:
    """Lyndon multi-indices with weight in ``(1, max_weight]``.

    Parameters
    ----------
    max_weight:
        Inclusive upper bound on the weight; must be at least 2 (the single
        index ``(1,)`` is excluded, matching the consistency condition).
    filter:
        One of ``"all"``, ``"odd_indices"``, ``"odd_weight"``, or a
        predicate such as :func:`exclude_index_ge`.

    Examples
    --------
    >>> lyndon_multi_indices(3)
    [(2,), (3,), (1, 2)]
    """
    if max_weight < 2:
        raise ValueError("max_weight must be >= 2")
    keep = _NAMED_FILTERS[filter] if isinstance(filter, str) else filter
    out = [
        mi
        for weight in range(2, max_weight + 1)
        for mi in _compositions(weight)
        if is_lyndon(mi) and keep(mi)
    ]
    out.sort(key=lambda mi: (sum(mi), len(mi), mi))
    return out


def rkn_retained_multi_indices(max_weight: int) -> list[MultiIndex]:
    """Lyndon multi-indices surviving the kick-drift bracket reductions.

    Multi-indices containing an index >= 4 drop out because the triple
    self-bracket of the kick field on the drift vanishes; at weight 8 the
    additional bracket identity removes ``(2, 3, 3)``.  Reductions beyond
    weight 8 from deeper identities are not applied, so counts are only
    meaningful up to that weight.
    """
    return [
        mi
        for mi in lyndon_multi_indices(max_weight, exclude_index_ge(4))
        if mi != (2, 3, 3)
    ]


def shuffle(w1: Sequence, w2: Sequence) -> Counter:
    """Multiset of all interleavings of two sequences with internal order kept.

    Examples
    --------
    >>> dict(shuffle((1,), (2,)))
    {(1, 2): 1, (2, 1): 1}
    """
    w1, w2 = tuple(w1), tuple(w2)
    out: Counter = Counter()

    def rec(prefix: tuple, i: int, j: int) -> None:
        if i == len(w1) and j == len(w2):
            out[prefix] += 1
            return
        if i < len(w1):
            rec(prefix + (w1[i],), i + 1, j)
        if j < len(w2):
            rec(prefix + (w2[j],), i, j + 1)

    rec((), 0, 0)
    return out


# ---------------------------------------------------------------------------
# Word coefficients of a splitting scheme
# ---------------------------------------------------------------------------

def _slots(coeffs: SchemeCoefficients):
    """Flow weights in application order, tagged with their letter."""
    s = coeffs.stages
    for j in range(s):
        yield coeffs.a[j], 1
        yield coeffs.b[j], 2
    yield coeffs.a[s], 1


def word_coefficient(coeffs: SchemeCoefficients, word: Sequence[int]) -> object:
    """Coefficient of a word in the expansion of the scheme's flow product.

    The scheme has order ``r`` exactly when this value equals ``1/n!`` for
    every Lyndon word of length ``n <= r``.

    Examples
    --------
    >>> word_coefficient(SchemeCoefficients(a=(0.5, 0.5), b=(1.0,)), (1, 2))
    0.5
    """
    word = tuple(word)
    if not word or any(t not in (1, 2) for t in word):
        raise ValueError("word must be a nonempty sequence over {1, 2}")
    n = len(word)
    reversed_word = word[::-1]
    # state[p] accumulates the weight of consuming the first p letters of the
    # reversed word; each flow in application order may consume a run of its
    # own letter with weight x^k / k!.
    state: list = [0] * (n + 1)
    state[0] = 1
    for x, letter in _slots(coeffs):
        new = list(state)
        for pos in range(n):
            base = state[pos]
            if base == 0:
                continue
            weight = base
            k = 0
            while pos + k < n and reversed_word[pos + k] == letter:
                k += 1
                weight = weight * x / k
                new[pos + k] += weight
        state = new
    return state[n]


def word_order(
    coeffs: SchemeCoefficients, r_max: int, tol: float = _DEFAULT_TOL
) -> OrderReport:
    """Order of accuracy determined from Lyndon word conditions.

    Raises
    ------
    NotConsistent
        If Σa or Σb differs from 1 by more than ``tol``.
    """
    _require_consistent(coeffs, tol)
    worst: dict[int, float] = {}
    for w in lyndon_words(r_max):
        n = len(w)
        residual = abs(word_coefficient(coeffs, w) - Fraction(1, math.factorial(n)))
        worst[n] = max(worst.get(n, 0.0), residual)
    return OrderReport(order=_largest_prefix(worst, r_max, tol), worst_residuals=worst)


def _require_consistent(coeffs: SchemeCoefficients, tol: float) -> None:
    sum_a, sum_b = _csum(coeffs.a), _csum(coeffs.b)
    if abs(sum_a - 1) > tol or abs(sum_b - 1) > tol:
        raise NotConsistent(
            f"coefficient sums must equal 1, got sum(a)={sum_a}, sum(b)={sum_b}"
        )


def _largest_prefix(worst: dict[int, float], r_max: int, tol: float) -> int:
    order = 0
    for n in range(1, r_max + 1):
        if worst.get(n, 0.0) > tol:
            break
        order = n
    return order


# ---------------------------------------------------------------------------
# Multi-index conditions
# ---------------------------------------------------------------------------

def multiindex_rhs(mi: Sequence[int]) -> Fraction:
    """Target value of a multi-index condition: one over the product of the
    left partial sums ``i1 * (i1 + i2) * ... * (i1 + ... + ik)``."""
    denom, acc = 1, 0
    for i in mi:
        acc += i
        denom *= acc
    return Fraction(1, denom)


def multiindex_condition(
    coeffs: SchemeCoefficients, mi: Sequence[int]
) -> tuple[object, Fraction]:
    """Left- and right-hand side of one multi-index order condition.

    The left side sums ``b[j1] c[j1]^(i1-1) ... b[jk] c[jk]^(ik-1)`` over
    weakly increasing stage tuples ``j1 <= ... <= jk``, dividing each term by
    the product of factorials of the run lengths of equal stages.

    Examples
    --------
    >>> multiindex_condition(SchemeCoefficients(a=(0.5, 0.5), b=(1.0,)), (2,))
    (0.5, Fraction(1, 2))
    """
    mi = tuple(mi)
    if not mi or any(i < 1 for i in mi):
        raise ValueError("multi-index entries must be positive integers")
    b, c = coeffs.b, coeffs.c_cumulative
    s, k = coeffs.stages, len(mi)
    powers = [[cj ** (i - 1) for cj in c] for i in mi]
    # Weakly increasing stage tuples assign a contiguous block of indices to
    # each stage, so a prefix sweep suffices: ``state[t]`` holds the total
    # weight of all assignments of the first ``t`` indices to stages seen so
    # far, and each new stage extends a prefix by a block of length ``r``
    # (divided by ``r!``, the run-length factorial).
    state: list = [1] + [0] * k
    for j in range(s):
        new = list(state)
        for t in range(k):
            term = state[t]
            divisor = 1
            for r in range(1, k - t + 1):
                term = term * (b[j] * powers[t + r - 1][j])
                divisor *= r
                new[t + r] = new[t + r] + _divide(term, divisor)
        state = new
    return state[k], multiindex_rhs(mi)


def multiindex_order(
    coeffs: SchemeCoefficients, r_max: int, tol: float = _DEFAULT_TOL
) -> OrderReport:
    """Order of accuracy determined from Lyndon multi-index conditions.

    Dual to :func:`word_order`; the two agree on every scheme, but this
    route evaluates far fewer conditions at high orders.
    """
    _require_consistent(coeffs, tol)
    return _order_from_multiindices(
        coeffs, lyndon_multi_indices(r_max), r_max, tol
    )


def _order_from_multiindices(
    coeffs: SchemeCoefficients,
    mis: Sequence[MultiIndex],
    r_max: int,
    tol: float,
) -> OrderReport:
    worst: dict[int, float] = {}
    for mi in mis:
        lhs, rhs = multiindex_condition(coeffs, mi)
        n = sum(mi)
        worst[n] = max(worst.get(n, 0.0), abs(lhs - rhs))
    return OrderReport(order=_largest_prefix(worst, r_max, tol), worst_residuals=worst)


def rkn_order(
    coeffs: SchemeCoefficients, r_max: int, tol: float = _DEFAULT_TOL
) -> int:
    """Order under the kick-drift bracket reductions.

    Valid when the flow weighted by ``a`` integrates the field whose triple
    self-bracket on the other part vanishes (the kick of a kick-drift
    system); see :func:`swap_parts` when the roles are reversed.  Only
    reductions up to weight 8 are known, so ``r_max`` beyond 8 falls back to
    the same retained set.

    Raises
    ------
    NotConsistent
        If Σa or Σb differs from 1 by more than ``tol``.
    """
    _require_consistent(coeffs, tol)
    retained = rkn_retained_multi_indices(r_max)
    return _order_from_multiindices(coeffs, retained, r_max, tol).order


def generalized_order(
    coeffs: SchemeCoefficients, r_max: int, tol: float = _DEFAULT_TOL
) -> tuple[int, ...]:
    """Per-grade orders ``(r_1, ..., r_m)`` for perturbed-splitting use.

    Grade ``k`` collects the multi-index conditions with exactly ``k``
    entries; ``r_k`` is the largest weight bound up to which they all hold.
    The profile is reported non-increasing, with the trailing constant run
    collapsed to a single entry and at least two grades shown.

    Raises
    ------
    NotConsistent
        If Σa or Σb differs from 1 by more than ``tol``.
    """
    _require_consistent(coeffs, tol)
    all_mis = lyndon_multi_indices(r_max)
    max_grade = max(2, max((len(mi) for mi in all_mis), default=2))
    raw = []
    for grade in range(1, max_grade + 1):
        mis = [mi for mi in all_mis if len(mi) == grade]
        raw.append(_order_from_multiindices(coeffs, mis, r_max, tol).order)
    return _trim_generalized(tuple(raw))


def _trim_generalized(raw: Sequence[int]) -> tuple[int, ...]:
    """Cap a raw per-grade profile non-increasing and trim the constant tail."""
    capped: list[int] = []
    for r in raw:
        capped.append(min(r, capped[-1]) if capped else r)
    last = capped[-1]
    cut = len(capped)
    while cut > 1 and capped[cut - 2] == last:
        cut -= 1
    trimmed = capped[:cut]
    if len(trimmed) < 2:
        trimmed.append(trimmed[-1])
    return tuple(trimmed)


def negative_step_witness(
    coeffs: SchemeCoefficients,
) -> tuple[int, int] | None:
    """Indices of one strictly negative ``a`` and one strictly negative ``b``.

    Every real splitting of order three or higher must step backwards in
    both parts, so such a pair exists for those schemes.  Returns ``None``
    when no pair exists (in particular for nonnegative schemes).

    Raises
    ------
    ValueError
        If any coefficient has a nonzero imaginary part.
    """
    if not coeffs.real:
        raise ValueError("negative-step analysis applies to real coefficients only")
    ia = next((i for i, x in enumerate(coeffs.a) if x.real < 0), None)
    ib = next((i for i, x in enumerate(coeffs.b) if x.real < 0), None)
    if ia is None or ib is None:
        return None
    return ia, ib


def swap_parts(coeffs: SchemeCoefficients) -> SchemeCoefficients:
    """Exchange the roles of the two parts, preserving the flow sequence.

    The returned scheme applies the identical flows in the identical order,
    but what was part 1 is relabelled part 2 and vice versa (the stage count
    grows by one to restart the alternation on the other letter).
    """
    zero = 0 * coeffs.a[0]
    return SchemeCoefficients(
        a=(zero,) + coeffs.b + (zero,),
        b=coeffs.a,
    )


# ---------------------------------------------------------------------------
# Composition conditions
# ---------------------------------------------------------------------------

def composition_u(
    gammas: Union[GammaSequence, Sequence], mi: Sequence[int]
) -> object:
    """Order-condition polynomial for a composition of a symmetric kernel.

    For multi-indices with all indices odd this is the star sum: nested sums
    over stage indices ``j1 <= ... <= jm`` of products ``gamma[jt]^{i_t}``
    where each inner sum halves its top term.  Multi-indices containing an
    even index vanish identically because the kernel is time-symmetric, and
    0 is returned exactly.

    Examples
    --------
    >>> composition_u(GammaSequence(gamma=(1.0,)), (3,))
    1.0
    """
    g = gammas.gamma if isinstance(gammas, GammaSequence) else tuple(gammas)
    mi = tuple(mi)
    if not mi or any(i < 1 for i in mi):
        raise ValueError("multi-index entries must be positive integers")
    if any(i % 2 == 0 for i in mi):
        return 0
    s, m = len(g), len(mi)
    inner = [1] * s
    for t in range(m - 1):
        powers = [g[j] ** mi[t] * inner[j] for j in range(s)]
        new, prefix = [], 0
        for j in range(s):
            new.append(prefix + powers[j] / 2)
            prefix = prefix + powers[j]
        inner = new
    return _csum([g[j] ** mi[m - 1] * inner[j] for j in range(s)])


def adjoint_pair_w(
    alphas: Union[AlphaSequence, Sequence], mi: Sequence[int]
) -> object:
    """Order-condition polynomial for a composition of a map and its adjoint.

    Computed by the prefix recursion: appending an adjoint substep with
    weight ``x`` subtracts ``(-x)^i`` times the one-shorter polynomial at
    the extended prefix, and appending a direct substep adds ``x^i`` times
    the one-shorter polynomial at the previous prefix.

    Examples
    --------
    >>> adjoint_pair_w(AlphaSequence(alpha=(0.5, 0.5)), (2,))
    0.0
    """
    al = alphas.alpha if isinstance(alphas, AlphaSequence) else tuple(alphas)
    mi = tuple(mi)
    if not mi or any(i < 1 for i in mi):
        raise ValueError("multi-index entries must be positive integers")
    m = len(mi)
    w: list = [1] + [0] * m
    for p, x in enumerate(al, start=1):
        if p % 2:
            for t in range(1, m + 1):
                w[t] = w[t] - (-x) ** mi[t - 1] * w[t - 1]
        else:
            for t in range(m, 0, -1):
                w[t] = w[t] + x ** mi[t - 1] * w[t - 1]
    return w[m]


# ---------------------------------------------------------------------------
# Flow-sequence series route
# ---------------------------------------------------------------------------

def flow_sequence_word_coefficients(
    stages: Sequence[tuple[FlowGenerator, object]], max_len: int
) -> dict[Word, object]:
    """Word coefficients of an arbitrary product of exponentials.

    Parameters
    ----------
    stages:
        Pairs ``(generator, weight)`` in application order.  A generator is
        a single letter (1 or 2) or a mapping from words to scalars, e.g. a
        nested-bracket combination such as ``{(1,1,2): 1, (1,2,1): -2,
        (2,1,1): 1}``.
    max_len:
        Truncation length of the expansion.

    Returns
    -------
    dict
        Coefficients of every word up to ``max_len`` letters (absent words
        are zero).  For a plain alternating scheme this agrees with
        :func:`word_coefficient`; unlike the stage recursion it also covers
        flows generated by commutators, as used by modified-potential
        schemes.
    """
    acc: dict[Word, object] = {(): 1}
    for generator, weight in stages:
        if isinstance(generator, int):
            term = {(generator,): weight}
        else:
            term = {tuple(w): weight * cv for w, cv in generator.items()}
        acc = _series_product(_series_exponential(term, max_len), acc, max_len)
    acc.pop((), None)
    return acc


def _series_product(s1: dict, s2: dict, max_len: int) -> dict:
    out: dict[Word, object] = {}
    for w1, c1 in s1.items():
        for w2, c2 in s2.items():
            if len(w1) + len(w2) <= max_len:
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
    return out


def _divide(value, k: int):
    """Exact division by an integer for rationals, plain division otherwise."""
    if isinstance(value, int):
        return Fraction(value, k)
    return value / k


def _series_exponential(term: dict, max_len: int) -> dict:
    out: dict[Word, object] = {(): 1}
    power: dict[Word, object] = {(): 1}
    shortest = min((len(w) for w in term), default=max_len + 1)
    if shortest == 0:
        raise ValueError("generator words must be nonempty")
    k = 0
    while (k + 1) * shortest <= max_len:
        k += 1
        power = _series_product(power, term, max_len)
        power = {w: _divide(cv, k) for w, cv in power.items()}
        for w, cv in power.items():
            out[w] = out.get(w, 0) + cv
    return out


def flow_sequence_order(
    stages: Sequence[tuple[FlowGenerator, object]],
    r_max: int,
    tol: float = _DEFAULT_TOL,
) -> OrderReport:
    """Order of accuracy of a product of exponentials, checking all words."""
    series = flow_sequence_word_coefficients(stages, r_max)
    worst: dict[int, float] = {}
    for n in range(1, r_max + 1):
        target = Fraction(1, math.factorial(n))
        worst[n] = max(
            abs(series.get(w, 0) - target)
            for w in itertools.product((1, 2), repeat=n)
        )
    return OrderReport(order=_largest_prefix(worst, r_max, tol), worst_residuals=worst)
