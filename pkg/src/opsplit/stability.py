"""Linear stability of real two-part splitting schemes.

The test model is the harmonic oscillator split into a shear pair: part 1
advances positions (``q' = w p``) and part 2 advances momenta
(``p' = -w q``).  Every stage of a real scheme then acts as a unit
triangular 2x2 matrix in the scaled step ``z = h w``, and one full step is
the ordered product of those shears.  The module exposes that product, the
stability polynomial ``p(z)`` given by half its trace, the supremum ``z*``
of scaled steps with bounded powers, and a sampled profile suitable for
plotting or CSV export.

Conventions shared with the engine and catalog:

* stages are applied in the order reported by ``catalog.flow_stages``, so
  modified-potential stages (duration ``coefficient * h**3``) appear in
  the product as cubic shears between their neighbouring linear ones;
* a scheme whose ``kick_part`` is ``"B"`` uses a momentum-type cubic
  shear, one with ``kick_part`` ``"A"`` a position-type cubic shear,
  matching the orientation of the nested-commutator generator;
* plain coefficient pairs (``SchemeCoefficients``) are accepted anywhere
  a scheme is, as are ``GammaSequence``/``AlphaSequence`` compositions.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Mapping, Tuple, Union

import numpy as np

from . import catalog
from .algebra import AlphaSequence, GammaSequence, SchemeCoefficients
from .catalog import SplittingScheme

__all__ = [
    "StabilityProfile",
    "propagation_matrix",
    "stability_interval",
    "stability_polynomial",
    "stability_profile",
]

SchemeLike = Union[SplittingScheme, SchemeCoefficients, GammaSequence, AlphaSequence]

#: Margin below 1 at which ``|p(z)|`` counts as strictly inside the
#: stability region; closer to 1 the matrix itself is inspected.
_INTERIOR_GAP = 1e-12


def _shear_stages(scheme: SchemeLike) -> Tuple[Tuple[str, float], ...]:
    """Reduce a scheme to ``(axis, weight)`` shear stages.

    Axis ``"q"`` is a position shear (upper triangular), ``"p"`` a momentum
    shear (lower triangular), and ``"q3"``/``"p3"`` their cubic
    modified-potential counterparts.
    """
    if isinstance(scheme, (GammaSequence, AlphaSequence)):
        basic = "strang" if isinstance(scheme, GammaSequence) else "lie"
        scheme = catalog.to_splitting(scheme, basic=basic)
    if isinstance(scheme, SchemeCoefficients):
        stages = []
        for j, aj in enumerate(scheme.a):
            if aj:
                stages.append((1, aj))
            if j < len(scheme.b) and scheme.b[j]:
                stages.append((2, scheme.b[j]))
        kick_part = "B"
    elif isinstance(scheme, SplittingScheme):
        if scheme.coefficients is None or scheme.adi_kind is not None:
            raise ValueError(
                f"scheme {scheme.id!r} has no two-part coefficient form"
            )
        stages = catalog.flow_stages(scheme)
        kick_part = scheme.kick_part or "B"
    else:
        raise TypeError(f"unsupported scheme type: {type(scheme).__name__}")

    cubic = "q3" if kick_part == "A" else "p3"
    out = []
    for kind, weight in stages:
        w = complex(weight)
        if w.imag != 0.0:
            raise ValueError("stability model requires real coefficients")
        if isinstance(kind, Mapping):
            out.append((cubic, w.real))
        else:
            out.append(("q" if kind == 1 else "p", w.real))
    return tuple(out)


def propagation_matrix(scheme: SchemeLike, z: float) -> np.ndarray:
    """One-step 2x2 matrix of ``scheme`` on the shear pair at scaled step ``z``.

    The determinant is exactly 1 for any real scheme; for consistent
    schemes half the trace is ``1 - z**2/2 + O(z**4)``.
    """
    matrix = np.eye(2)
    for axis, weight in _shear_stages(scheme):
        stage = np.eye(2)
        if axis == "q":
            stage[0, 1] = weight * z
        elif axis == "p":
            stage[1, 0] = -weight * z
        elif axis == "p3":
            stage[1, 0] = 2.0 * weight * z**3
        else:
            stage[0, 1] = -2.0 * weight * z**3
        matrix = stage @ matrix
    return matrix


def stability_polynomial(scheme: SchemeLike, z: float) -> float:
    """Half the trace of the propagation matrix at scaled step ``z``.

    Powers of the one-step matrix stay bounded where the absolute value is
    below 1 and grow exponentially where it exceeds 1.
    """
    matrix = propagation_matrix(scheme, z)
    return 0.5 * float(matrix[0, 0] + matrix[1, 1])


def _bounded(matrix: np.ndarray) -> bool:
    """Whether powers of a unit-determinant 2x2 matrix stay bounded.

    Strictly inside ``|p| < 1`` the eigenvalues are a complex conjugate
    pair on the unit circle and powers are bounded.  On the margin
    ``|p| = 1`` boundedness requires the matrix to be diagonalisable,
    i.e. a multiple of the identity; the allowance for the off-diagonal
    entries scales with the square root of the distance to the margin so
    that interior tangencies (smooth minima of ``1 - |p|``) pass while
    genuine defective crossings fail.
    """
    p = 0.5 * (matrix[0, 0] + matrix[1, 1])
    gap = 1.0 - abs(p)
    if gap > _INTERIOR_GAP:
        return True
    if gap < -_INTERIOR_GAP:
        return False
    deviation = max(
        abs(matrix[0, 1]), abs(matrix[1, 0]), abs(matrix[0, 0] - matrix[1, 1])
    )
    allowance = max(
        _INTERIOR_GAP * (1.0 + float(np.abs(matrix).max())),
        10.0 * math.sqrt(max(gap, 0.0) * (1.0 + abs(p))),
    )
    return deviation <= allowance


def stability_interval(
    scheme: SchemeLike, z_max: float = 20.0, tol: float = 1e-12
) -> float:
    """Largest ``z*`` below ``z_max`` with bounded powers on ``(0, z*)``.

    A grid scan locates the first unbounded scaled step, then bisection
    refines the boundary to within ``tol``.  Returns ``z_max`` itself when
    no unbounded point is found below it.
    """
    if z_max <= 0.0:
        raise ValueError(f"z_max must be positive, got {z_max}")
    stages = _shear_stages(scheme)

    def bounded_at(z: float) -> bool:
        matrix = np.eye(2)
        for axis, weight in stages:
            stage = np.eye(2)
            if axis == "q":
                stage[0, 1] = weight * z
            elif axis == "p":
                stage[1, 0] = -weight * z
            elif axis == "p3":
                stage[1, 0] = 2.0 * weight * z**3
            else:
                stage[0, 1] = -2.0 * weight * z**3
            matrix = stage @ matrix
        return _bounded(matrix)

    n = max(256, int(round(z_max / 0.005)))
    grid = np.linspace(0.0, z_max, n + 1)
    low = 0.0
    high = None
    for z in grid[1:]:
        if bounded_at(float(z)):
            low = float(z)
        else:
            high = float(z)
            break
    if high is None:
        return z_max
    while high - low > tol:
        mid = 0.5 * (low + high)
        if bounded_at(mid):
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)


@dataclasses.dataclass(frozen=True)
class StabilityProfile:
    """Sampled stability data of one scheme on the shear-pair model.

    ``samples`` holds rows ``(z, p(z), K1, K2, K3, K4)`` where the ``K``
    entries are the propagation-matrix components in row-major order, and
    ``z_star`` is the computed stability boundary.
    """

    scheme_id: str
    samples: Tuple[Tuple[float, float, float, float, float, float], ...]
    z_star: float

    @property
    def z_values(self) -> Tuple[float, ...]:
        return tuple(row[0] for row in self.samples)

    @property
    def p_values(self) -> Tuple[float, ...]:
        return tuple(row[1] for row in self.samples)


def stability_profile(
    scheme: SchemeLike,
    z_max: float = 20.0,
    n_samples: int = 241,
    tol: float = 1e-12,
) -> StabilityProfile:
    """Sample ``p(z)`` and the matrix components on ``[0, z_max]``.

    The returned profile also records the stability boundary ``z*``
    computed by :func:`stability_interval` over the same range.
    """
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    scheme_id = scheme.id if isinstance(scheme, SplittingScheme) else "custom"
    rows = []
    for z in np.linspace(0.0, z_max, n_samples):
        matrix = propagation_matrix(scheme, float(z))
        p = 0.5 * float(matrix[0, 0] + matrix[1, 1])
        rows.append(
            (
                float(z),
                p,
                float(matrix[0, 0]),
                float(matrix[0, 1]),
                float(matrix[1, 0]),
                float(matrix[1, 1]),
            )
        )
    z_star = stability_interval(scheme, z_max=z_max, tol=tol)
    return StabilityProfile(scheme_id=scheme_id, samples=tuple(rows), z_star=z_star)
