"""Mode-resolved analysis of schemes for fast-oscillator problems.

Treats planar problems ``x' = A x + f2(x)`` whose linear part rotates at a
single frequency ``w`` and whose remainder derives from a potential,
``f2(q, p) = (0, -U'(q))``.  In the rotating frame the perturbation becomes
periodic in time and expands into Fourier modes with state-dependent
coefficient functions.  From that expansion the module computes, mode by
mode, the averaging weights of the exact flow, of any one-step splitting
scheme, and of arbitrary compositions of rotation and kick stages.
Quotients of scheme weights over exact weights define a modified vector
field and a modified energy whose step-to-step drift quantifies a scheme's
long-time energy behaviour and its step resonances.  A periodic kick filter
(2m kicks interleaved with equal rotations summing to one full turn)
conjugates the rotation-kick-rotation kernel so that its first-order mode
weights become those of the exact flow, removing the leading energy error
away from resonant steps.

Conventions:

* states are real pairs ``(q, p)``; the linear flow is the rotation
  ``e^{tA}(q, p) = (q cos wt + p sin wt, -q sin wt + p cos wt)``;
* a kick of duration ``tau`` maps ``p -> p - tau U'(q)``;
* mode weights are indexed by signed integers ``k``; weights at ``-k`` are
  complex conjugates of those at ``k``; the mode-k phase unit is
  ``u = k w h``.
"""
from __future__ import annotations

import cmath
import dataclasses
import math
import warnings
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import GammaSequence, SchemeCoefficients
from .catalog import SplittingScheme, get_scheme, to_splitting
from .engine import (
    ProcessedScheme,
    ProcessorMap,
    SplitProblem,
    run,
    run_processed,
)
from .problems import pendulum_energy, pendulum_problem

__all__ = [
    "EnergyDriftSeries",
    "FourierPerturbation",
    "OscCoefficients",
    "RESONANCE_TOLERANCE",
    "ResonanceError",
    "StageExpansion",
    "TruncationWarning",
    "alpha_coefficients",
    "composition_alpha",
    "fourier_decompose",
    "modified_coefficients",
    "modified_hamiltonian",
    "modified_vector_field",
    "processed_strang",
    "processor_kicks",
    "processor_mode_coefficients",
    "processor_stages",
    "run_oscillatory_experiment",
    "scheme_alpha",
]

RESONANCE_TOLERANCE = 1e-8


class ResonanceError(ValueError):
    """A mode-weight divisor vanishes: ``k w h`` sits on a multiple of 2 pi.

    ``index`` names the offending mode.
    """

    def __init__(self, index: int, omega: float, h: float):
        self.index = index
        super().__init__(
            f"mode {index} is resonant: {index} * omega * h = "
            f"{index * omega * h:.6g} is within tolerance of a multiple of 2*pi"
        )


class TruncationWarning(UserWarning):
    """Dropped Fourier modes carry a non-negligible share of the energy."""


def _check_resonance(k: int, omega: float, h: float, tolerance: float) -> None:
    if k != 0 and abs(cmath.exp(1j * k * omega * h) - 1.0) < tolerance:
        raise ResonanceError(k, omega, h)


# ---------------------------------------------------------------------------
# Mode weights: exact flow, schemes, stage compositions
# ---------------------------------------------------------------------------


def _alpha_one(u: float) -> complex:
    """The phase average ``int_0^1 e^{iut} dt = (e^{iu} - 1)/(iu)``.

    Evaluated as ``(-2 sin^2(u/2) + i sin u)/(iu)`` so both real and
    imaginary parts stay relatively accurate for small ``u``; exactly 1 at
    ``u = 0`` and exactly 0 at nonzero multiples of 2 pi.
    """
    if u == 0.0:
        return 1.0 + 0.0j
    half = math.sin(0.5 * u)
    return complex(-2.0 * half * half, math.sin(u)) / complex(0.0, u)


def _alpha_two(k: int, l: int, omega: float, h: float) -> complex:
    """Ordered double phase average over the unit simplex (see
    :func:`alpha_coefficients`)."""
    if k == 0 and l == 0:
        return 0.5 + 0.0j
    if k == 0:
        a = l * omega * h
        return (cmath.exp(1j * a) - _alpha_one(a)) / (1j * a)
    th = omega * h
    return (_alpha_one(th * (k + l)) - _alpha_one(th * l)) / (1j * th * k)


def alpha_coefficients(
    index_set: Sequence[int], omega: float, h: float
) -> Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]]:
    """Per-mode averaging weights of the exact flow over one step.

    Returns ``(first, second)`` where ``first[k] = int_0^1 e^{i k w h t} dt``
    and ``second[(k, l)] = int_0^1 int_0^{t2} e^{i w h (k t1 + l t2)}
    dt1 dt2`` for ``k, l`` in ``index_set``.  Always ``first[0] == 1`` and
    ``second[(0, 0)] == 1/2``; moreover ``|first[k]| = |sinc(k w h / 2)|``,
    ``|second[(k, l)]| <= 1/2``, and ``first[k] == 0`` exactly when
    ``k w h`` is a nonzero multiple of 2 pi.
    """
    first = {k: _alpha_one(k * omega * h) for k in index_set}
    second = {
        (k, l): _alpha_two(k, l, omega, h) for k in index_set for l in index_set
    }
    return first, second


def _plain_coefficients(scheme) -> SchemeCoefficients:
    """Extract flat rotation/kick weights from a scheme-like object."""
    coeffs = scheme.coefficients if isinstance(scheme, SplittingScheme) else scheme
    if isinstance(coeffs, GammaSequence):
        coeffs = to_splitting(coeffs)
    if not isinstance(coeffs, SchemeCoefficients):
        raise TypeError(
            f"need plain splitting coefficients, got {type(coeffs).__name__}"
        )
    return coeffs


def scheme_alpha(
    scheme, index_set: Sequence[int], omega: float, h: float
) -> Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]]:
    """Per-mode weights of one step of a splitting scheme.

    ``scheme`` is a catalog entry, a Strang-based composition (flattened
    internally), or bare :class:`SchemeCoefficients` with rotation weights
    ``a`` and kick weights ``b``.  With ``c_j`` the cumulative rotation
    fractions, ``first[k] = sum_j b_j e^{i k c_j w h}`` and
    ``second[(k, l)]`` is the ordered double sum over kick pairs whose
    diagonal carries weight ``b_j**2 / 2``.  For the rotation-kick-rotation
    second-order kernel these reduce to ``e^{i k w h / 2}`` and
    ``e^{i (k + l) w h / 2} / 2``.
    """
    coeffs = _plain_coefficients(scheme)
    b = coeffs.b
    c = coeffs.c_cumulative
    th = omega * h
    first = {
        k: sum(bj * cmath.exp(1j * k * cj * th) for bj, cj in zip(b, c))
        for k in index_set
    }
    second: Dict[Tuple[int, int], complex] = {}
    for k in index_set:
        for l in index_set:
            total = 0.0 + 0.0j
            for j, (bj, cj) in enumerate(zip(b, c)):
                total += 0.5 * bj * bj * cmath.exp(1j * (k + l) * cj * th)
                for mm in range(j + 1, len(b)):
                    total += bj * b[mm] * cmath.exp(1j * (k * cj + l * c[mm]) * th)
            second[(k, l)] = total
    return first, second


@dataclasses.dataclass(frozen=True)
class StageExpansion:
    """Rotating-frame expansion of a composition of rotation/kick stages.

    The composed map equals the rotation through time ``rotation_time``
    applied to ``x + h sum_k first[k] g_k(x) + h^2 sum_{k,l}
    second[(k, l)] g_l'(x) g_k(x) + ...`` where ``g_k`` are the
    rotating-frame force modes and ``h`` is the normalizing step passed to
    :func:`composition_alpha`.
    """

    rotation_time: float
    first: Dict[int, complex]
    second: Dict[Tuple[int, int], complex]


def composition_alpha(
    stages: Sequence[Tuple[str, float]],
    index_set: Sequence[int],
    omega: float,
    h: float,
) -> StageExpansion:
    """Fold a rotation/kick stage list into its per-mode weights.

    ``stages`` is a sequence of ``("rotation", t)`` or ``("kick", tau)``
    tokens in application order, durations in time units; ``h`` sets the
    normalization of the returned weights.  Folding the stage list of a
    splitting scheme reproduces :func:`scheme_alpha`; folding
    filter + kernel + inverse filter yields the weights of the filtered
    step.  A kick of duration ``tau`` contributes first-order weight
    ``tau / h`` on every mode and second-order weight ``(tau / h)^2 / 2``
    on every mode pair, phased by the rotation time accumulated before it.
    """
    shift = 0.0
    first: Dict[int, complex] = {k: 0.0 + 0.0j for k in index_set}
    second: Dict[Tuple[int, int], complex] = {
        (k, l): 0.0 + 0.0j for k in index_set for l in index_set
    }
    for kind, duration in stages:
        if kind == "rotation":
            shift += duration
        elif kind == "kick":
            w = duration / h
            phase = {k: cmath.exp(1j * shift * omega * k) for k in index_set}
            for k in index_set:
                for l in index_set:
                    second[(k, l)] += (
                        0.5 * w * w * phase[k] * phase[l]
                        + w * phase[l] * first[k]
                    )
            for k in index_set:
                first[k] += w * phase[k]
        else:
            raise ValueError(f"unknown stage kind {kind!r}")
    return StageExpansion(rotation_time=shift, first=first, second=second)


# ---------------------------------------------------------------------------
# Modified weights
# ---------------------------------------------------------------------------


def modified_coefficients(
    exact: Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]],
    scheme: Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]],
    omega: float,
    h: float,
    tolerance: float = RESONANCE_TOLERANCE,
) -> Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]]:
    """Quotient weights turning scheme averages into exact ones.

    ``exact`` and ``scheme`` are ``(first, second)`` weight pairs over the
    same mode set, as returned by :func:`alpha_coefficients` and
    :func:`scheme_alpha`.  Computes ``beta_k = scheme_first[k] /
    exact_first[k]`` and ``beta_kl = (scheme_second[(k, l)] -
    exact_second[(k, l)] beta_k beta_l) / exact_first[k + l]``.  Raises
    :class:`ResonanceError` naming the mode when any divisor mode ``k`` (or
    mode sum ``k + l``) satisfies ``|e^{i k w h} - 1| < tolerance``.  For
    the exact flow itself the result is ``beta_k = 1`` and ``beta_kl = 0``;
    for symmetric schemes ``beta_kl`` is antisymmetric under index swap.
    """
    exact_first, exact_second = exact
    scheme_first, scheme_second = scheme
    modes = sorted(exact_first)
    for k in modes:
        _check_resonance(k, omega, h, tolerance)
    for s in sorted({k + l for k in modes for l in modes}):
        _check_resonance(s, omega, h, tolerance)
    beta_k = {k: scheme_first[k] / exact_first[k] for k in modes}
    beta_kl: Dict[Tuple[int, int], complex] = {}
    for k in modes:
        for l in modes:
            denom = exact_first.get(k + l)
            if denom is None:
                denom = _alpha_one((k + l) * omega * h)
            beta_kl[(k, l)] = (
                scheme_second[(k, l)]
                - exact_second[(k, l)] * beta_k[k] * beta_k[l]
            ) / denom
    return beta_k, beta_kl


@dataclasses.dataclass(frozen=True)
class OscCoefficients:
    """Mode-weight table of one scheme at one ``(omega, h)``.

    Holds the exact-flow weights (``alpha_k``, ``alpha_kl``), the scheme
    weights (``tilde_alpha_k``, ``tilde_alpha_kl``), and their quotients
    (``beta_k``, ``beta_kl``).  The differences ``delta_k`` and
    ``delta_kl`` (scheme minus exact) drive the leading local energy error
    of the scheme.
    """

    omega: float
    h: float
    alpha_k: Dict[int, complex]
    alpha_kl: Dict[Tuple[int, int], complex]
    tilde_alpha_k: Dict[int, complex]
    tilde_alpha_kl: Dict[Tuple[int, int], complex]
    beta_k: Dict[int, complex]
    beta_kl: Dict[Tuple[int, int], complex]

    @property
    def index_set(self) -> Tuple[int, ...]:
        return tuple(sorted(self.alpha_k))

    @property
    def delta_k(self) -> Dict[int, complex]:
        return {k: self.tilde_alpha_k[k] - self.alpha_k[k] for k in self.alpha_k}

    @property
    def delta_kl(self) -> Dict[Tuple[int, int], complex]:
        return {
            kl: self.tilde_alpha_kl[kl] - self.alpha_kl[kl]
            for kl in self.alpha_kl
        }

    @classmethod
    def for_scheme(
        cls,
        scheme,
        index_set: Sequence[int],
        omega: float,
        h: float,
        tolerance: float = RESONANCE_TOLERANCE,
    ) -> "OscCoefficients":
        """Build the full weight table for a splitting scheme."""
        exact = alpha_coefficients(index_set, omega, h)
        tilde = scheme_alpha(scheme, index_set, omega, h)
        beta_k, beta_kl = modified_coefficients(exact, tilde, omega, h, tolerance)
        return cls(
            omega=omega,
            h=h,
            alpha_k=exact[0],
            alpha_kl=exact[1],
            tilde_alpha_k=tilde[0],
            tilde_alpha_kl=tilde[1],
            beta_k=beta_k,
            beta_kl=beta_kl,
        )


def _beta_pair(beta) -> Tuple[Dict[int, complex], Dict[Tuple[int, int], complex]]:
    if isinstance(beta, OscCoefficients):
        return beta.beta_k, beta.beta_kl
    beta_k, beta_kl = beta
    return beta_k, beta_kl


# ---------------------------------------------------------------------------
# Fourier decomposition of the perturbation
# ---------------------------------------------------------------------------


def _sample(fn: Callable, qs: np.ndarray) -> np.ndarray:
    """Apply a scalar-or-vectorized callable to a 1-D array."""
    try:
        out = np.asarray(fn(qs), dtype=float)
        if out.shape == qs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(q)) for q in qs])


@dataclasses.dataclass
class FourierPerturbation:
    """Rotating-frame Fourier modes of a potential perturbation.

    ``G_k[k]`` evaluates the mode-k coefficient function of the perturbing
    energy, so that ``U(q(t)) = sum_k e^{i k w t} G_k(x)`` along the
    rotation through ``x``; ``g_k[k]`` evaluates the matching force mode,
    so that the rotated force ``e^{-tA} f2(e^{tA} x)`` equals
    ``sum_k e^{i k w t} g_k(x)`` with ``f2 = (0, -U')``.  Modes at ``-k``
    are complex conjugates of modes at ``k``.  ``tail_fraction`` records
    the relative amplitude of the modes dropped beyond ``|k| <= m`` at the
    probe amplitude used during decomposition.
    """

    omega: float
    m: int
    index_set: Tuple[int, ...]
    G_k: Dict[int, Callable[[np.ndarray], complex]]
    g_k: Dict[int, Callable[[np.ndarray], np.ndarray]]
    tail_fraction: float = 0.0
    _potential_modes: Optional[Callable] = dataclasses.field(
        default=None, repr=False
    )
    _force_modes: Optional[Callable] = dataclasses.field(default=None, repr=False)

    def potential_modes(self, x) -> Dict[int, complex]:
        """All retained ``G_k(x)`` in one pass."""
        xv = np.asarray(x, dtype=float)
        if self._potential_modes is not None:
            return self._potential_modes(xv)
        return {k: self.G_k[k](xv) for k in self.index_set}

    def force_modes(self, x) -> Dict[int, np.ndarray]:
        """All retained ``g_k(x)`` in one pass."""
        xv = np.asarray(x, dtype=float)
        if self._force_modes is not None:
            return self._force_modes(xv)
        return {k: self.g_k[k](xv) for k in self.index_set}

    def reconstruct_potential(self, t: float, x) -> float:
        """Resum the modes: equals ``U`` evaluated at the rotated point."""
        modes = self.potential_modes(x)
        total = sum(
            cmath.exp(1j * k * self.omega * t) * modes[k] for k in self.index_set
        )
        return float(total.real)

    def rotated_force(self, t: float, x) -> np.ndarray:
        """Resum the force modes: equals ``e^{-tA} f2(e^{tA} x)``."""
        modes = self.force_modes(x)
        total = sum(
            (
                cmath.exp(1j * k * self.omega * t) * modes[k]
                for k in self.index_set
            ),
            start=np.zeros(2, dtype=complex),
        )
        return np.asarray(total).real


def fourier_decompose(
    potential: Callable[[float], float],
    omega: float,
    m: int,
    quadrature_n: Optional[int] = None,
    *,
    force: Optional[Callable[[float], float]] = None,
    probe_radius: float = 1.0,
    mode_tolerance: float = 1e-12,
    tail_tolerance: float = 1e-2,
) -> FourierPerturbation:
    """Expand a potential into rotating-frame Fourier modes.

    Samples ``potential`` along one rotation period on ``quadrature_n``
    equispaced nodes (default ``4 m + 4``; exact for polynomial potentials
    of degree <= ``m`` and trapezoidal-accurate for smooth ones) and keeps
    modes ``|k| <= m`` whose sampled amplitude at radius ``probe_radius``
    exceeds ``mode_tolerance`` relative to the largest mode.  ``force``
    optionally supplies ``U'`` in closed form; otherwise it is taken by
    central differences with step ``1e-6 (1 + |q|)``.  Emits
    :class:`TruncationWarning` when the dropped tail beyond ``|k| <= m``
    carries more than ``tail_tolerance`` of the sampled amplitude at the
    probe radius.  For ``U(q) = q**4 / 24`` at ``w = 1`` the retained set
    is ``{-4, -2, 0, 2, 4}``; a pure quadratic keeps ``{-2, 0, 2}``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    n = int(quadrature_n) if quadrature_n is not None else 4 * m + 4
    if n < 2 * m + 2:
        raise ValueError(f"quadrature_n={n} cannot resolve modes up to {m}")
    angles = 2.0 * math.pi * np.arange(n) / n
    cos_a = np.cos(angles)
    sin_a = np.sin(angles)

    if force is None:
        def force_samples(qs: np.ndarray) -> np.ndarray:
            d = 1e-6 * (1.0 + np.abs(qs))
            return (_sample(potential, qs + d) - _sample(potential, qs - d)) / (
                2.0 * d
            )
    else:
        def force_samples(qs: np.ndarray) -> np.ndarray:
            return _sample(force, qs)

    # mode retention and truncation tail at the probe amplitude
    probe = np.array([probe_radius, 0.0])
    probe_co = np.fft.fft(_sample(potential, probe_radius * cos_a)) / n
    wave = np.fft.fftfreq(n, 1.0 / n).astype(int)
    inside = np.abs(wave) <= m
    magnitudes = {k: abs(probe_co[k % n]) for k in range(-m, m + 1)}
    largest = max(magnitudes.values())
    if largest == 0.0:
        raise ValueError("potential has no resolvable modes at the probe radius")
    index_set = tuple(
        k for k in range(-m, m + 1) if magnitudes[k] > mode_tolerance * largest
    )
    tail = float(
        np.sqrt(np.sum(np.abs(probe_co[~inside]) ** 2))
        / np.sqrt(np.sum(np.abs(probe_co) ** 2))
    )
    if tail > tail_tolerance:
        warnings.warn(
            f"modes beyond |k| <= {m} carry a relative amplitude {tail:.3e} "
            f"at radius {probe_radius}",
            TruncationWarning,
            stacklevel=2,
        )

    def potential_modes(xv: np.ndarray) -> Dict[int, complex]:
        qs = cos_a * xv[0] + sin_a * xv[1]
        co = np.fft.fft(_sample(potential, qs)) / n
        return {k: complex(co[k % n]) for k in index_set}

    def force_modes(xv: np.ndarray) -> Dict[int, np.ndarray]:
        qs = cos_a * xv[0] + sin_a * xv[1]
        phi = -force_samples(qs)
        c1 = np.fft.fft(-sin_a * phi) / n
        c2 = np.fft.fft(cos_a * phi) / n
        return {k: np.array([c1[k % n], c2[k % n]]) for k in index_set}

    G_k = {
        k: (lambda x, _k=k: potential_modes(np.asarray(x, dtype=float))[_k])
        for k in index_set
    }
    g_k = {
        k: (lambda x, _k=k: force_modes(np.asarray(x, dtype=float))[_k])
        for k in index_set
    }
    return FourierPerturbation(
        omega=omega,
        m=m,
        index_set=index_set,
        G_k=G_k,
        g_k=g_k,
        tail_fraction=tail,
        _potential_modes=potential_modes,
        _force_modes=force_modes,
    )


# ---------------------------------------------------------------------------
# Modified energy and modified vector field
# ---------------------------------------------------------------------------


def modified_hamiltonian(
    fp: FourierPerturbation, beta, x, h: float
) -> float:
    """Modified energy whose level sets a scheme tracks between resonances.

    Evaluates ``w |x|^2 / 2 + Re sum_k beta_k G_k(x) + (h/2) Re sum_{k,l}
    beta_kl {G_k, G_l}(x)`` with the bracket ``{G_k, G_l} = g_k . J g_l``
    computed from the force modes (``J`` the symplectic unit).  ``beta`` is
    a ``(beta_k, beta_kl)`` pair or an :class:`OscCoefficients`.  With the
    exact-flow weights (``beta_k = 1``, ``beta_kl = 0``) this is the full
    energy itself.
    """
    beta_k, beta_kl = _beta_pair(beta)
    xv = np.asarray(x, dtype=float)
    value = 0.5 * fp.omega * float(xv @ xv)
    modes = fp.potential_modes(xv)
    value += sum(
        (beta_k[k] * modes[k] for k in beta_k if k in modes), start=0.0 + 0.0j
    ).real
    if any(abs(c) > 1e-15 for c in beta_kl.values()):
        g = fp.force_modes(xv)
        bracket_sum = 0.0 + 0.0j
        for (k, l), c in beta_kl.items():
            if abs(c) > 1e-15 and k in g and l in g:
                gk, gl = g[k], g[l]
                bracket_sum += c * (gk[0] * gl[1] - gk[1] * gl[0])
        value += 0.5 * h * bracket_sum.real
    return float(value)


def modified_vector_field(
    fp: FourierPerturbation, beta, h: float
) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side of the modified equation matched to a scheme.

    Returns ``f(t, x)`` (the ``t`` argument is ignored; it is present for
    ODE-solver interfaces) evaluating ``A x + Re sum_k beta_k g_k(x) +
    h Re sum_{k,l} beta_kl g_l'(x) g_k(x)``.  The exact time-h flow of
    this field reproduces the scheme's steps through second order in the
    perturbation.  Jacobian actions are taken by central differences with
    step ``1e-6 (1 + |x|)``.
    """
    beta_k, beta_kl = _beta_pair(beta)
    w = fp.omega
    pairs = [(k, l, c) for (k, l), c in beta_kl.items() if abs(c) > 1e-15]
    sources = sorted({k for k, _, _ in pairs})

    def field(t: float, x) -> np.ndarray:
        xv = np.asarray(x, dtype=float)
        g = fp.force_modes(xv)
        lead = sum(
            (beta_k[k] * g[k] for k in beta_k if k in g),
            start=np.zeros(2, dtype=complex),
        )
        out = np.array([w * xv[1], -w * xv[0]]) + np.asarray(lead).real
        if not pairs:
            return out
        d = 1e-6 * (1.0 + float(np.hypot(xv[0], xv[1])))
        derivative: Dict[int, Dict[int, np.ndarray]] = {}
        for k in sources:
            if k not in g:
                continue
            along: Dict[int, np.ndarray] = {
                l: np.zeros(2, dtype=complex) for l in fp.index_set
            }
            for unit, part in ((1.0, g[k].real), (1.0j, g[k].imag)):
                scale = float(np.linalg.norm(part))
                if scale == 0.0:
                    continue
                u = part / scale
                plus = fp.force_modes(xv + d * u)
                minus = fp.force_modes(xv - d * u)
                for l in fp.index_set:
                    along[l] = along[l] + unit * scale * (plus[l] - minus[l]) / (
                        2.0 * d
                    )
            derivative[k] = along
        correction = np.zeros(2, dtype=complex)
        for k, l, c in pairs:
            if k in derivative and l in derivative[k]:
                correction += c * derivative[k][l]
        return out + (h * correction).real

    return field


# ---------------------------------------------------------------------------
# The periodic kick filter and the filtered kernel
# ---------------------------------------------------------------------------


def processor_mode_coefficients(
    m: int, omega: float, h: float, tolerance: float = RESONANCE_TOLERANCE
) -> Dict[int, complex]:
    """First-order mode weights of the periodic kick filter.

    Mode ``k`` carries ``(kernel_first[k] - exact_first[k]) /
    (e^{i k w h} - 1)``, which simplifies to ``(1 / sinc(k w h / 2) - 1) /
    (i k w h)`` — the unique weight for which conjugating the
    rotation-kick-rotation kernel by the filter restores the exact
    first-order weights on ``|k| <= m``.  Mode 0 carries 0 and mode ``-k``
    the conjugate of mode ``k``.  Raises :class:`ResonanceError` when a
    filtered mode is resonant.
    """
    out: Dict[int, complex] = {0: 0.0 + 0.0j}
    for k in range(1, m + 1):
        _check_resonance(k, omega, h, tolerance)
        u = k * omega * h
        weight = (cmath.exp(0.5j * u) - _alpha_one(u)) / (
            cmath.exp(1j * u) - 1.0
        )
        out[k] = weight
        out[-k] = weight.conjugate()
    return out


def processor_kicks(
    m: int, omega: float, h: float, tolerance: float = RESONANCE_TOLERANCE
) -> Tuple[float, ...]:
    """Kick durations ``b_1 .. b_2m`` of the periodic filter.

    The ``b_j`` solve the discrete Fourier system ``sum_j b_j
    e^{2 pi i k j / (2m+1)} = h kappa_k`` against the mode weights
    ``kappa_k`` of :func:`processor_mode_coefficients`; explicitly
    ``b_j = -(2 / ((2m+1) w)) sum_{k=1}^m (1/k) (1 / sinc(k w h / 2) - 1)
    sin(2 pi k j / (2m+1))``.  They are antisymmetric,
    ``b_j = -b_{2m+1-j}``, and vanish as ``h -> 0``.
    """
    kappa = processor_mode_coefficients(m, omega, h, tolerance)
    N = 2 * m + 1
    kicks = []
    for j in range(1, N):
        acc = 0.0 + 0.0j
        for k in range(-m, m + 1):
            acc += h * kappa[k] * cmath.exp(-2j * math.pi * j * k / N)
        kicks.append(acc.real / N)
    return tuple(kicks)


def processor_stages(
    m: int, omega: float, h: float, tolerance: float = RESONANCE_TOLERANCE
) -> Tuple[Tuple[str, float], ...]:
    """Stage tokens of the filter map, in application order.

    Interleaves the ``2m`` kicks of :func:`processor_kicks` with ``2m + 1``
    rotations through the fixed angle ``2 pi / (2m+1)``: rotation, kick
    ``b_1``, rotation, ..., kick ``b_2m``, rotation.  The rotations compose
    to one full turn, so the filter is a near-identity map that tends to
    the identity as ``h -> 0``.  The tokens feed directly into
    :func:`composition_alpha` and into the flow-level filter of
    :func:`processed_strang`.
    """
    kicks = processor_kicks(m, omega, h, tolerance)
    rotation_time = 2.0 * math.pi / ((2 * m + 1) * omega)
    stages = [("rotation", rotation_time)]
    for b in kicks:
        stages.append(("kick", b))
        stages.append(("rotation", rotation_time))
    return tuple(stages)


def processed_strang(
    m: int,
    omega: float,
    h: float,
    problem: Optional[SplitProblem] = None,
    tolerance: float = RESONANCE_TOLERANCE,
) -> ProcessedScheme:
    """Filtered second-order kernel ``filter^-1 o (R K R) o filter``.

    Builds the periodic kick filter for modes ``|k| <= m`` and wraps the
    rotation-kick-rotation kernel with it, returning an
    :class:`opsplit.engine.ProcessedScheme` ready for
    :func:`opsplit.engine.run_processed`.  The filter acts through the
    flows of ``problem`` (default: the pendulum in its oscillator/kick
    splitting); its step argument is ignored because the filter durations
    are fixed by ``(m, omega, h)``.  Raises :class:`ResonanceError` when
    ``k w h`` is within ``tolerance`` of a multiple of 2 pi for any
    filtered mode ``1 <= k <= m``.
    """
    stages = processor_stages(m, omega, h, tolerance)
    if problem is None:
        problem = pendulum_problem("perturbed")
    rotation, kick = problem.flows[0], problem.flows[1]

    def forward(_h: float, x):
        y = x
        for kind, duration in stages:
            flow = rotation if kind == "rotation" else kick
            y = flow.apply(duration, y)
        return y

    def inverse(_h: float, x):
        y = x
        for kind, duration in reversed(stages):
            flow = rotation if kind == "rotation" else kick
            y = flow.apply(-duration, y)
        return y

    filter_map = ProcessorMap(
        forward=forward, inverse=inverse, cost_weight=float(len(stages))
    )
    return ProcessedScheme(kernel=get_scheme("strang-aba"), processor=filter_map)


# ---------------------------------------------------------------------------
# Long-run energy experiment
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class EnergyDriftSeries:
    """Relative energy errors ``|H(x_n) - H(x_0)| / |H(x_0)|`` along a run."""

    times: Tuple[float, ...]
    errors: Tuple[float, ...]
    final_state: np.ndarray

    @property
    def max_error(self) -> float:
        return max(self.errors)


def run_oscillatory_experiment(
    problem: SplitProblem,
    scheme,
    h: float,
    t_f: float,
    x0: Sequence[float] = (0.1, 0.0),
    energy: Callable[[np.ndarray], float] = pendulum_energy,
) -> EnergyDriftSeries:
    """Track the relative energy error along a long run.

    Steps from ``x0`` to time ``t_f`` (rounded to a whole number of steps
    of size ``h``) and measures the relative error of ``energy`` against
    its initial value at every step.  ``scheme`` is a catalog scheme, bare
    coefficients, or a filtered kernel from :func:`processed_strang` — in
    the filtered case every recorded point is unfiltered before the energy
    is measured.
    """
    n = max(1, int(round(t_f / h)))
    start = np.asarray(x0, dtype=float)
    if isinstance(scheme, ProcessedScheme):
        result = run_processed(scheme, problem, h, start, n_blocks=n, m=1)
    else:
        result = run(scheme, problem, h, start, n)
    reference = energy(result.states[0])
    errors = tuple(
        abs(energy(state) - reference) / abs(reference)
        for state in result.states
    )
    return EnergyDriftSeries(
        times=result.times, errors=errors, final_state=result.states[-1]
    )
