"""Scheme records, classification, builtin coefficient sets, and a text file
format for externally sourced coefficients with validation at load.

Every scheme that enters the catalog — builtin or file-loaded — is checked
against its claimed order by the routines in :mod:`opsplit.algebra` before it
is handed out: plain splittings through the word and multi-index conditions,
commutator-modified schemes through the exponential-product word series, and
implicit (ADI/LOD) schemes through the word series of their resolvent
factors.  A scheme whose claim cannot be confirmed raises
:class:`ValidationFailed` rather than entering the catalog.

Conventions
-----------
Coefficients follow :class:`opsplit.algebra.SchemeCoefficients`: ``a`` weights
the first part, ``b`` the second, flows applied in index order starting with
``a[0]``.  ``commutator_coeffs`` is aligned with the ``a`` slots; entry ``j``
is the weight (times ``h^3``) of the flow of ``W = [K, [D, K]]`` applied
immediately after the ``j``-th first-part flow, where ``K`` is the kick part
named by ``kick_part`` ("A" or "B") and ``D`` the other part.
"""

from __future__ import annotations

import cmath
import itertools
import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Union

from . import algebra
from .algebra import (
    AlphaSequence,
    GammaSequence,
    NotConsistent,
    SchemeCoefficients,
)

__all__ = [
    "FAMILIES",
    "ADI_KINDS",
    "SplittingScheme",
    "CoefficientFile",
    "CoefficientRecord",
    "ValidationFailed",
    "ParseError",
    "builtin_catalog",
    "get_scheme",
    "classify",
    "to_splitting",
    "validate_scheme",
    "parse_coefficient_file",
    "read_coefficient_file",
    "format_coefficient_file",
    "load_catalog",
]

FAMILIES = frozenset(
    {
        "SS-composition",
        "AB-split",
        "ABA",
        "BAB",
        "RKN",
        "RKN-modified",
        "near-integrable",
        "complex",
        "ADI-LOD",
        "processed",
    }
)

ADI_KINDS = (
    "marchuk-yanenko",
    "yanenko-cn",
    "peaceman-rachford",
    "douglas-rachford",
)

_DEFAULT_TOL = 1e-10

Coefficients = Union[SchemeCoefficients, GammaSequence]


class ValidationFailed(ValueError):
    """A scheme failed an algebraic check of its claimed properties."""

    def __init__(self, scheme_id: str, condition: str):
        self.scheme_id = scheme_id
        self.condition = condition
        super().__init__(f"{scheme_id}: {condition}")


class ParseError(ValueError):
    """A coefficient file could not be parsed; the message cites the line."""


# ---------------------------------------------------------------------------
# Scheme records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingScheme:
    """One catalog entry.

    Fields
    ------
    id:
        Unique key, e.g. ``"strang-aba"``.
    family:
        One of :data:`FAMILIES`.
    coefficients:
        :class:`SchemeCoefficients` for splittings, :class:`GammaSequence`
        for compositions of a second-order basic method, or ``None`` for
        ADI/LOD schemes (which are defined by resolvent products instead).
    commutator_coeffs / kick_part:
        Schedule of modified-potential flows; see the module docstring.
    claimed_order / claimed_generalized_order:
        Orders the validator must confirm.
    adi_kind:
        For the ADI-LOD family, one of :data:`ADI_KINDS`.
    validated:
        True only on instances returned by :func:`validate_scheme` (and
        therefore on everything from :func:`builtin_catalog` and
        :func:`load_catalog`).
    """

    id: str
    family: str
    claimed_order: int
    coefficients: Optional[Coefficients] = None
    commutator_coeffs: Optional[tuple] = None
    kick_part: Optional[str] = None
    claimed_generalized_order: Optional[tuple] = None
    processor_id: Optional[str] = None
    source: str = ""
    adi_kind: Optional[str] = None
    validated: bool = False

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "ADI-LOD":
            if self.adi_kind not in ADI_KINDS:
                raise ValueError(f"unknown ADI kind {self.adi_kind!r}")
            if self.coefficients is not None:
                raise ValueError("ADI-LOD schemes carry no splitting coefficients")
        elif self.coefficients is None:
            raise ValueError("non-ADI schemes need coefficients")
        if self.kick_part not in (None, "A", "B"):
            raise ValueError("kick_part must be 'A' or 'B'")
        if self.commutator_coeffs is not None:
            if self.kick_part is None:
                raise ValueError("commutator_coeffs requires kick_part")
            n_a = len(self.splitting_coefficients().a)
            if len(self.commutator_coeffs) != n_a:
                raise ValueError(
                    "commutator_coeffs must align with the first-part slots"
                )

    @property
    def stages(self) -> int:
        """Stage count: kicks for splittings, basic maps for compositions,
        implicit solves for ADI schemes."""
        if self.coefficients is None:
            return 2
        return self.coefficients.stages

    def splitting_coefficients(self) -> SchemeCoefficients:
        """The scheme's coefficients flattened to splitting form."""
        c = self.coefficients
        if isinstance(c, SchemeCoefficients):
            return c
        if isinstance(c, GammaSequence):
            return to_splitting(c, basic="Strang")
        raise ValueError(f"{self.id} has no splitting coefficients")


# ---------------------------------------------------------------------------
# Classification and flattening
# ---------------------------------------------------------------------------

def classify(scheme: Union[SplittingScheme, Coefficients]) -> dict:
    """Symmetry and sign flags of a scheme's (flattened) coefficients.

    Returns a dict with keys ``palindromic``, ``symmetric_conjugate``,
    ``positive_coeffs``, ``positive_real_part`` and ``complex``.  Compositions
    are flattened over the Strang basic method first, so the flags describe
    the executed flow sequence.
    """
    if isinstance(scheme, SplittingScheme):
        coeffs = scheme.splitting_coefficients()
    elif isinstance(scheme, GammaSequence):
        coeffs = to_splitting(scheme, basic="Strang")
    else:
        coeffs = scheme
    a, b = coeffs.a, coeffs.b
    conj_a = tuple(_conj(x) for x in a)
    conj_b = tuple(_conj(x) for x in b)
    is_real = coeffs.real
    return {
        "palindromic": a == a[::-1] and b == b[::-1],
        "symmetric_conjugate": a[::-1] == conj_a and b[::-1] == conj_b,
        "positive_coeffs": is_real and min(x.real for x in map(complex, a + b)) >= 0,
        "positive_real_part": min(x.real for x in map(complex, a + b)) > 0,
        "complex": not is_real,
    }


def _conj(x):
    return x.conjugate() if isinstance(x, complex) else x


def to_splitting(
    composition: Union[GammaSequence, AlphaSequence], basic: str = "Strang"
) -> SchemeCoefficients:
    """Flatten a composition of basic maps to splitting coefficients.

    A :class:`GammaSequence` composes the Strang map: ``a1 = γ1/2``,
    ``a_{j+1} = (γj + γ_{j+1})/2``, ``b_j = γj``.  An :class:`AlphaSequence`
    composes the first-order map and its adjoint in alternation:
    ``a1 = α1``, ``b_j = α_{2j-1} + α_{2j}``, ``a_{j+1} = α_{2j} + α_{2j+1}``
    (indices past the end read as zero).

    Examples
    --------
    >>> to_splitting(GammaSequence((1.0,)), basic="Strang")
    SchemeCoefficients(a=(0.5, 0.5), b=(1.0,))
    >>> to_splitting(AlphaSequence((0.5, 0.5)), basic="LT")
    SchemeCoefficients(a=(0.5, 0.5), b=(1.0,))
    """
    key = basic.strip().lower()
    if isinstance(composition, GammaSequence):
        if key != "strang":
            raise ValueError("gamma sequences flatten over the Strang basic map")
        g = composition.gamma
        a = [g[0] / 2]
        a.extend((g[j] + g[j + 1]) / 2 for j in range(len(g) - 1))
        a.append(g[-1] / 2)
        return SchemeCoefficients(a=tuple(a), b=tuple(g))
    if isinstance(composition, AlphaSequence):
        if key != "lt":
            raise ValueError("alpha sequences flatten over the LT basic map")
        al = composition.alpha

        def at(i: int):  # 1-based with zero padding
            return al[i - 1] if 1 <= i <= len(al) else 0.0

        n_b = (len(al) + 1) // 2
        a = [at(1)]
        b = []
        for j in range(1, n_b + 1):
            b.append(at(2 * j - 1) + at(2 * j))
            a.append(at(2 * j) + at(2 * j + 1))
        return SchemeCoefficients(a=tuple(a), b=tuple(b))
    raise TypeError(f"cannot flatten {type(composition).__name__}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _commutator_generator(kick_part: str) -> Mapping:
    """Word polynomial of ``W = [K,[D,K]]`` with part letters 1/2 for A/B."""
    if kick_part == "A":
        return {(1, 1, 2): -1, (1, 2, 1): 2, (2, 1, 1): -1}
    return {(2, 2, 1): -1, (2, 1, 2): 2, (1, 2, 2): -1}


def flow_stages(scheme: SplittingScheme) -> list:
    """Stage list ``(generator, weight)`` in application order, including
    any commutator flows, as consumed by the word-series routines."""
    coeffs = scheme.splitting_coefficients()
    cc = scheme.commutator_coeffs or ()
    gen = _commutator_generator(scheme.kick_part or "B")
    stages: list = []
    for j, aj in enumerate(coeffs.a):
        if aj:
            stages.append((1, aj))
        if j < len(cc) and cc[j]:
            stages.append((gen, cc[j]))
        if j < len(coeffs.b) and coeffs.b[j]:
            stages.append((2, coeffs.b[j]))
    return stages


def adi_word_series(kind: str, max_len: int) -> dict:
    """Word series of one ADI/LOD step, letters ordered left factor first."""

    def resolvent(letter: int, theta: float) -> dict:
        return {(letter,) * k: theta ** k for k in range(max_len + 1)}

    def affine(letter: int, theta: float) -> dict:
        return {(): 1, (letter,): theta}

    def product(*factors: dict) -> dict:
        acc: dict = {(): 1}
        for f in factors:
            acc = algebra._series_product(acc, f, max_len)
        return acc

    if kind == "marchuk-yanenko":
        return product(resolvent(2, 1), resolvent(1, 1))
    if kind == "yanenko-cn":
        return product(
            resolvent(2, 0.5), affine(2, 0.5), resolvent(1, 0.5), affine(1, 0.5)
        )
    if kind == "peaceman-rachford":
        return product(
            resolvent(2, 0.5), affine(1, 0.5), resolvent(1, 0.5), affine(2, 0.5)
        )
    if kind == "douglas-rachford":
        hat = product({(1,): 1}, resolvent(1, 1), affine(2, 1))
        hat[()] = hat.get((), 0) + 1
        return product(resolvent(2, 1), hat)
    raise ValueError(f"unknown ADI kind {kind!r}")


def _series_order(series: dict, r_max: int, tol: float) -> algebra.OrderReport:
    worst: dict[int, float] = {}
    for n in range(1, r_max + 1):
        target = Fraction(1, math.factorial(n))
        worst[n] = max(
            abs(series.get(w, 0) - target)
            for w in itertools.product((1, 2), repeat=n)
        )
    order = 0
    for n in range(1, r_max + 1):
        if worst[n] > tol:
            break
        order = n
    return algebra.OrderReport(order=order, worst_residuals=worst)


def validate_scheme(
    scheme: SplittingScheme, tol: float = _DEFAULT_TOL
) -> SplittingScheme:
    """Confirm every claimed property of ``scheme`` and return a copy with
    ``validated=True``; raise :class:`ValidationFailed` otherwise.

    Checks, by kind:

    * ADI-LOD: word order of the resolvent-product series equals the claim.
    * commutator-modified: word order of the full exponential product
      (:func:`opsplit.algebra.flow_sequence_order`) equals the claim.
    * RKN family: order under the kick-drift reductions equals the claim
      (coefficients are transposed first when the kick is the B part).
    * plain splittings and compositions: word order and multi-index order
      both equal the claim.
    * when a generalized order is claimed, the computed profile must match.
    """
    claimed = scheme.claimed_order
    if claimed < 1:
        raise ValidationFailed(scheme.id, f"claimed order {claimed} must be >= 1")
    if scheme.family == "ADI-LOD":
        report = _series_order(
            adi_word_series(scheme.adi_kind, claimed + 1), claimed + 1, tol
        )
        if report.order != claimed:
            raise ValidationFailed(
                scheme.id,
                f"resolvent word order {report.order} != claimed {claimed}; "
                f"residuals by weight {_fmt_residuals(report)}",
            )
        return replace(scheme, validated=True)

    coeffs = scheme.splitting_coefficients()
    if not coeffs.consistent(max(tol, 1e-12)):
        raise ValidationFailed(
            scheme.id, "consistency: coefficient sums differ from 1"
        )
    if scheme.commutator_coeffs:
        report = algebra.flow_sequence_order(flow_stages(scheme), claimed + 1, tol)
        if report.order != claimed:
            raise ValidationFailed(
                scheme.id,
                f"flow-sequence word order {report.order} != claimed {claimed}; "
                f"residuals by weight {_fmt_residuals(report)}",
            )
    elif scheme.family == "RKN":
        rkn_coeffs = coeffs if scheme.kick_part == "A" else algebra.swap_parts(coeffs)
        order = algebra.rkn_order(rkn_coeffs, claimed + 1, tol)
        if order != claimed:
            raise ValidationFailed(
                scheme.id, f"RKN order {order} != claimed {claimed}"
            )
    else:
        words = algebra.word_order(coeffs, claimed + 1, tol)
        if words.order != claimed:
            raise ValidationFailed(
                scheme.id,
                f"word order {words.order} != claimed {claimed}; "
                f"residuals by weight {_fmt_residuals(words)}",
            )
        indices = algebra.multiindex_order(coeffs, claimed + 1, tol)
        if indices.order != claimed:
            raise ValidationFailed(
                scheme.id,
                f"multi-index order {indices.order} != claimed {claimed}; "
                f"residuals by weight {_fmt_residuals(indices)}",
            )
    if scheme.claimed_generalized_order is not None:
        got = algebra.generalized_order(
            coeffs, max(scheme.claimed_generalized_order) + 1, tol
        )
        if got != tuple(scheme.claimed_generalized_order):
            raise ValidationFailed(
                scheme.id,
                f"generalized order {got} != claimed "
                f"{tuple(scheme.claimed_generalized_order)}",
            )
    return replace(scheme, validated=True)


def _fmt_residuals(report: algebra.OrderReport) -> str:
    return "{" + ", ".join(
        f"{n}: {float(v):.3e}" for n, v in sorted(report.worst_residuals.items())
    ) + "}"


# ---------------------------------------------------------------------------
# Builtin schemes
# ---------------------------------------------------------------------------

def _triple_jump_gammas(order: int) -> tuple:
    g = [1.0]
    for k in range(2, order // 2 + 1):
        g1 = 1.0 / (2.0 - 2.0 ** (1.0 / (2 * k - 1)))
        g = [w * gj for w in (g1, 1.0 - 2.0 * g1, g1) for gj in g]
    return tuple(g)


def _quintuple_jump_gammas(order: int) -> tuple:
    g = [1.0]
    for k in range(2, order // 2 + 1):
        g1 = 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))
        g = [w * gj for w in (g1, g1, 1.0 - 4.0 * g1, g1, g1) for gj in g]
    return tuple(g)


def _builtin_definitions() -> list:
    half = 0.5
    sqrt3 = math.sqrt(3.0)

    def S(**kw):  # noqa: N802 - local shorthand
        return SplittingScheme(**kw)

    schemes = [
        S(
            id="lie-trotter-ab",
            family="AB-split",
            claimed_order=1,
            coefficients=SchemeCoefficients(a=(1.0, 0.0), b=(1.0,)),
            source="Trotter (1959); Lie product formula",
        ),
        S(
            id="lie-trotter-ba",
            family="AB-split",
            claimed_order=1,
            coefficients=SchemeCoefficients(a=(0.0, 1.0), b=(1.0,)),
            source="Trotter (1959); Lie product formula",
        ),
        S(
            id="symplectic-euler-vt",
            family="AB-split",
            claimed_order=1,
            coefficients=SchemeCoefficients(a=(0.0, 1.0), b=(1.0,)),
            source="symplectic Euler, kick (B) before drift (A)",
        ),
        S(
            id="symplectic-euler-tv",
            family="AB-split",
            claimed_order=1,
            coefficients=SchemeCoefficients(a=(1.0, 0.0), b=(1.0,)),
            source="symplectic Euler, drift (A) before kick (B)",
        ),
        S(
            id="strang-aba",
            family="ABA",
            claimed_order=2,
            claimed_generalized_order=(2, 2),
            coefficients=SchemeCoefficients(a=(half, half), b=(1.0,)),
            source="Strang (1968); Marchuk (1968)",
        ),
        S(
            id="strang-bab",
            family="BAB",
            claimed_order=2,
            coefficients=SchemeCoefficients(a=(0.0, 1.0, 0.0), b=(half, half)),
            source="Strang (1968), leapfrog arrangement",
        ),
        S(
            id="soint",
            family="near-integrable",
            claimed_order=2,
            claimed_generalized_order=(2, 2),
            coefficients=SchemeCoefficients(a=(half, half), b=(1.0,)),
            source="Strang splitting over the solvable part and the "
            "perturbation; A = full quadratic flow, B = perturbation kick",
        ),
        S(
            id="hmc-3stage",
            family="ABA",
            claimed_order=2,
            coefficients=_hmc_coefficients(),
            source="Blanes, Casas & Sanz-Serna (2014), minimum expected "
            "energy error; A = drift, B = kick",
        ),
        S(
            id="chin-4-mod",
            family="RKN-modified",
            claimed_order=4,
            coefficients=SchemeCoefficients(
                a=(1 / 6, 1 / 3, 1 / 3, 1 / 6), b=(half, 0.0, half)
            ),
            commutator_coeffs=(0.0, 1 / 72, 0.0, 0.0),
            kick_part="A",
            source="Koseleff (1993); Chin (1997), forward scheme with "
            "modified potential; A = kick, B = drift",
        ),
        S(
            id="s2m",
            family="RKN-modified",
            claimed_order=2,
            coefficients=SchemeCoefficients(a=(0.0, 1.0, 0.0), b=(half, half)),
            commutator_coeffs=(1 / 48, 1 / 48, 0.0),
            kick_part="B",
            source="Takahashi & Imada (1984), modified-potential Strang; "
            "order 2 but conjugate to an order-4 map; A = drift, B = kick",
        ),
        S(
            id="complex-3",
            family="complex",
            claimed_order=3,
            coefficients=GammaSequence(
                (0.5 + 1j * sqrt3 / 6, 0.5 - 1j * sqrt3 / 6)
            ),
            source="Bandrauk & Shen (1991), two Strang maps with conjugate "
            "complex weights",
        ),
        S(
            id="sym-conj-3",
            family="complex",
            claimed_order=3,
            coefficients=SchemeCoefficients(
                a=(0.25 + 1j * sqrt3 / 12, 0.5, 0.25 - 1j * sqrt3 / 12),
                b=(0.5 + 1j * sqrt3 / 6, 0.5 - 1j * sqrt3 / 6),
            ),
            source="splitting form of the conjugate-weight two-map "
            "composition (b weights equal the composition weights)",
        ),
        S(
            id="or4p",
            family="complex",
            claimed_order=4,
            coefficients=GammaSequence(_or4p_gammas()),
            source="complex triple jump, time-symmetric branch "
            "(Bandrauk & Shen 1991; Chambers 2003)",
        ),
        S(
            id="or4sc",
            family="complex",
            claimed_order=4,
            coefficients=GammaSequence(_or4sc_gammas()),
            source="complex triple jump, symmetric-conjugate branch",
        ),
        S(
            id="pa4p",
            family="complex",
            claimed_order=4,
            coefficients=to_splitting(GammaSequence(_or4p_gammas())),
            source="splitting form of the time-symmetric complex triple jump",
        ),
        S(
            id="sc4sc",
            family="complex",
            claimed_order=4,
            coefficients=to_splitting(GammaSequence(_or4sc_gammas())),
            source="splitting form of the symmetric-conjugate complex "
            "triple jump",
        ),
    ]
    for order in (4, 6, 8):
        schemes.append(
            S(
                id=f"triplejump-{order}",
                family="SS-composition",
                claimed_order=order,
                coefficients=GammaSequence(_triple_jump_gammas(order)),
                source="Creutz & Gocksch (1989); Suzuki (1990); "
                "Yoshida (1990), recursive triple jump",
            )
        )
        schemes.append(
            S(
                id=f"quintuplejump-{order}",
                family="SS-composition",
                claimed_order=order,
                coefficients=GammaSequence(_quintuple_jump_gammas(order)),
                source="Suzuki (1990), recursive fractal composition",
            )
        )
    adi_sources = {
        "marchuk-yanenko": ("adi-marchuk-yanenko", 1, "Marchuk (1968); Yanenko (1971)"),
        "yanenko-cn": (
            "adi-yanenko-cn",
            1,
            "locally one-dimensional scheme with Crank-Nicolson factors",
        ),
        "peaceman-rachford": ("adi-peaceman-rachford", 2, "Peaceman & Rachford (1955)"),
        "douglas-rachford": ("adi-douglas-rachford", 1, "Douglas & Rachford (1956)"),
    }
    for kind, (sid, order, src) in adi_sources.items():
        schemes.append(
            S(
                id=sid,
                family="ADI-LOD",
                claimed_order=order,
                adi_kind=kind,
                source=src,
            )
        )
    return schemes


def _hmc_coefficients() -> SchemeCoefficients:
    a1 = 0.11888010966548
    b1 = 0.29619504261126
    return SchemeCoefficients(
        a=(a1, 0.5 - a1, 0.5 - a1, a1), b=(b1, 1.0 - 2.0 * b1, b1)
    )


def _or4p_gammas() -> tuple:
    g1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0) * cmath.exp(2j * math.pi / 3.0))
    return (g1, 1.0 - 2.0 * g1, g1)


def _or4sc_gammas() -> tuple:
    g1 = 0.25 + 0.25j * math.sqrt(5.0 / 3.0)
    return (g1, 0.5, g1.conjugate())


@lru_cache(maxsize=1)
def _validated_builtins() -> tuple:
    return tuple(validate_scheme(s) for s in _builtin_definitions())


def builtin_catalog() -> list:
    """All builtin schemes, each validated against its claimed orders.

    Raises
    ------
    ValidationFailed
        If any builtin fails a check (this would indicate a coefficient
        transcription error).
    """
    return list(_validated_builtins())


def get_scheme(scheme_id: str) -> SplittingScheme:
    """Look up one validated builtin by id."""
    for scheme in _validated_builtins():
        if scheme.id == scheme_id:
            return scheme
    raise KeyError(f"no builtin scheme {scheme_id!r}")


# ---------------------------------------------------------------------------
# Coefficient files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientRecord:
    """One parsed scheme entry of a coefficient file (numbers already
    converted to native floats; ``line`` is the header line number)."""

    id: str
    family: str
    order: int
    a: tuple
    b: tuple
    line: int
    pattern: Optional[str] = None
    stages: Optional[int] = None
    generalized_order: Optional[tuple] = None
    c: Optional[tuple] = None
    kick: Optional[str] = None
    is_complex: bool = False
    processor_id: Optional[str] = None
    source: str = ""


@dataclass(frozen=True)
class CoefficientFile:
    """A parsed coefficient file: schema version plus scheme records."""

    schema_version: str
    records: tuple

    def __post_init__(self) -> None:
        ids = [r.id for r in self.records]
        if len(ids) != len(set(ids)):
            raise ValueError("scheme ids must be unique")


_SCHEMA_LINE = re.compile(r"^schema_version\s*=\s*(\S+)$")
_SECTION_LINE = re.compile(r"^\[([A-Za-z0-9._-]+)\]$")
_KEY_LINE = re.compile(r"^([A-Za-z_]+)\s*=\s*(.*)$")
_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^({_NUMBER})\s*([+-]\s*(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*i$")
_REAL_RE = re.compile(rf"^{_NUMBER}$")

_KNOWN_KEYS = {
    "family",
    "pattern",
    "stages",
    "order",
    "generalized_order",
    "a",
    "b",
    "c",
    "complex",
    "kick",
    "processor_id",
    "source",
}
_REQUIRED_KEYS = {"family", "order", "a", "b"}


def _parse_value(token: str, lineno: int):
    token = token.strip()
    match = _COMPLEX_RE.match(token)
    if match:
        return complex(float(match.group(1)), float(match.group(2).replace(" ", "")))
    if _REAL_RE.match(token):
        return float(token)
    raise ParseError(f"line {lineno}: bad numeric value {token!r}")


def _parse_array(raw: str, lineno: int) -> tuple:
    items = [t for t in raw.split(",") if t.strip()]
    if not items:
        raise ParseError(f"line {lineno}: empty array")
    return tuple(_parse_value(t, lineno) for t in items)


def parse_coefficient_file(text: str) -> CoefficientFile:
    """Parse coefficient-file text; raise :class:`ParseError` with the
    offending line number on any malformed content."""
    schema: Optional[str] = None
    records: list = []
    current: Optional[dict] = None
    current_line = 0
    seen_ids: set = set()

    def finish() -> None:
        if current is None:
            return
        missing = _REQUIRED_KEYS - current.keys() - {"id"}
        if missing:
            raise ParseError(
                f"line {current_line}: section [{current['id']}] is missing "
                f"required keys {sorted(missing)}"
            )
        records.append(_record_from_keys(current, current_line))

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if schema is None:
            match = _SCHEMA_LINE.match(line)
            if not match:
                raise ParseError(
                    f"line {lineno}: expected 'schema_version = ...' first"
                )
            schema = match.group(1)
            if schema != "1":
                raise ParseError(f"line {lineno}: unsupported schema version {schema!r}")
            continue
        section = _SECTION_LINE.match(line)
        if section:
            finish()
            scheme_id = section.group(1)
            if scheme_id in seen_ids:
                raise ParseError(f"line {lineno}: duplicate scheme id {scheme_id!r}")
            seen_ids.add(scheme_id)
            current = {"id": scheme_id}
            current_line = lineno
            continue
        keyval = _KEY_LINE.match(line)
        if not keyval:
            raise ParseError(f"line {lineno}: cannot parse {line!r}")
        if current is None:
            raise ParseError(f"line {lineno}: key outside any [scheme] section")
        key, raw = keyval.group(1), keyval.group(2).strip()
        if key not in _KNOWN_KEYS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in current:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        current[key] = (raw, lineno)
    if schema is None:
        raise ParseError("line 1: empty file (missing schema_version)")
    finish()
    return CoefficientFile(schema_version=schema, records=tuple(records))


def _record_from_keys(keys: dict, header_line: int) -> CoefficientRecord:
    def raw(key: str):
        return keys[key][0] if key in keys else None

    def lineof(key: str) -> int:
        return keys[key][1]

    family = raw("family")
    if family not in FAMILIES:
        raise ParseError(f"line {lineof('family')}: unknown family {family!r}")
    if family == "ADI-LOD":
        raise ParseError(
            f"line {lineof('family')}: ADI-LOD schemes are builtin only"
        )
    try:
        order = int(raw("order"))
    except ValueError:
        raise ParseError(f"line {lineof('order')}: bad order {raw('order')!r}") from None
    stages = None
    if "stages" in keys:
        try:
            stages = int(raw("stages"))
        except ValueError:
            raise ParseError(
                f"line {lineof('stages')}: bad stages {raw('stages')!r}"
            ) from None
    gen_order = None
    if "generalized_order" in keys:
        try:
            gen_order = tuple(
                int(t) for t in raw("generalized_order").split(",") if t.strip()
            )
        except ValueError:
            raise ParseError(
                f"line {lineof('generalized_order')}: bad generalized_order"
            ) from None
    is_complex = False
    if "complex" in keys:
        flag = raw("complex").lower()
        if flag not in ("true", "false"):
            raise ParseError(
                f"line {lineof('complex')}: complex must be true or false"
            )
        is_complex = flag == "true"
    kick = None
    if "kick" in keys:
        kick = raw("kick")
        if kick not in ("A", "B"):
            raise ParseError(f"line {lineof('kick')}: kick must be A or B")
    return CoefficientRecord(
        id=keys["id"],
        family=family,
        order=order,
        a=_parse_array(raw("a"), lineof("a")),
        b=_parse_array(raw("b"), lineof("b")),
        c=_parse_array(raw("c"), lineof("c")) if "c" in keys else None,
        line=header_line,
        pattern=raw("pattern"),
        stages=stages,
        generalized_order=gen_order,
        kick=kick,
        is_complex=is_complex,
        processor_id=raw("processor_id"),
        source=raw("source") or "",
    )


def read_coefficient_file(path) -> CoefficientFile:
    """Parse a coefficient file from disk."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_coefficient_file(handle.read())


def _format_number(x) -> str:
    if isinstance(x, complex):
        sign = "+" if x.imag >= 0 else "-"
        return f"{x.real!r}{sign}{abs(x.imag)!r}i"
    return repr(float(x))


def format_coefficient_file(schemes: Sequence[SplittingScheme]) -> str:
    """Render schemes to coefficient-file text (compositions are flattened;
    floats are written with round-trip precision)."""
    lines = ["schema_version = 1", ""]
    for scheme in schemes:
        coeffs = scheme.splitting_coefficients()
        lines.append(f"[{scheme.id}]")
        lines.append(f"family = {scheme.family}")
        lines.append(f"stages = {coeffs.stages}")
        lines.append(f"order = {scheme.claimed_order}")
        if scheme.claimed_generalized_order is not None:
            rendered = ", ".join(str(n) for n in scheme.claimed_generalized_order)
            lines.append(f"generalized_order = {rendered}")
        lines.append(f"complex = {'false' if coeffs.real else 'true'}")
        lines.append("a = " + ", ".join(_format_number(x) for x in coeffs.a))
        lines.append("b = " + ", ".join(_format_number(x) for x in coeffs.b))
        if scheme.commutator_coeffs is not None:
            lines.append(
                "c = " + ", ".join(_format_number(x) for x in scheme.commutator_coeffs)
            )
            lines.append(f"kick = {scheme.kick_part}")
        if scheme.processor_id:
            lines.append(f"processor_id = {scheme.processor_id}")
        if scheme.source:
            lines.append(f"source = {scheme.source}")
        lines.append("")
    return "\n".join(lines)


def load_catalog(file: CoefficientFile, tol: float = _DEFAULT_TOL) -> list:
    """Turn a parsed coefficient file into validated schemes.

    Raises
    ------
    ValidationFailed
        On the first record whose coefficients fail consistency, the claimed
        (generalized) order, or a cross-check such as the stages count or
        the complex flag.
    """
    schemes = []
    for record in file.records:
        try:
            coeffs = SchemeCoefficients(a=record.a, b=record.b)
        except ValueError as exc:
            raise ValidationFailed(record.id, str(exc)) from None
        if record.stages is not None and record.stages != coeffs.stages:
            raise ValidationFailed(
                record.id,
                f"stages field {record.stages} != coefficient stage count "
                f"{coeffs.stages}",
            )
        if record.is_complex != (not coeffs.real):
            raise ValidationFailed(
                record.id, "complex flag does not match the coefficients"
            )
        commutator = None
        kick = record.kick
        if record.c is not None:
            commutator = record.c
            if kick is None:
                kick = "B"
        if record.family == "RKN" and kick is None:
            raise ValidationFailed(
                record.id, "RKN entries must name the kick part (kick = A or B)"
            )
        scheme = SplittingScheme(
            id=record.id,
            family=record.family,
            claimed_order=record.order,
            coefficients=coeffs,
            commutator_coeffs=commutator,
            kick_part=kick,
            claimed_generalized_order=record.generalized_order,
            processor_id=record.processor_id,
            source=record.source,
        )
        try:
            schemes.append(validate_scheme(scheme, tol))
        except NotConsistent as exc:
            raise ValidationFailed(record.id, str(exc)) from None
    return schemes
