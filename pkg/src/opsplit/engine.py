"""Apply splitting schemes to split problems.

This module turns the static scheme descriptions from :mod:`opsplit.catalog`
into maps acting on concrete states: single steps, multi-step runs with cost
accounting, processed (conjugated) runs, real projection of complex schemes,
multi-product linear combinations, and implicit ADI/LOD sweeps on linear
problems.

Conventions
-----------
* Scheme part ``i`` acts through ``problem.flows[i - 1]``; compositions are
  applied rightmost factor first, so a two-part splitting step starts with
  the part-1 flow weighted by ``a[0]``.
* A commutator-modified scheme draws on ``problem.commutator_flow`` and runs
  it for the duration ``c_j * h**3`` directly after the ``j``-th part-1 flow.
* On problems with more than two parts, only first-order sweeps, the
  symmetric kernel ``(h/2, ..., h, ..., h/2)``, and compositions of that
  kernel are defined; everything else raises :class:`PartMismatch`.
* Cost is charged as ``cost_weight`` per flow call.  Consecutive calls to
  the same exact flow -- the last stage of one step continuing into the
  first stage of the next -- are merged and charged once.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Optional

import numpy as np

from opsplit import catalog
from opsplit.algebra import GammaSequence, SchemeCoefficients
from opsplit.catalog import SplittingScheme

__all__ = [
    "ComplexOnRealState",
    "CostLedger",
    "DuplicateK",
    "FlowMap",
    "LinearPart",
    "MultiProduct",
    "NumericalBlowup",
    "PartMismatch",
    "ProcessedScheme",
    "ProcessorMap",
    "RealProjection",
    "RunResult",
    "SingularResolvent",
    "SplitProblem",
    "StateDescriptor",
    "adi_step",
    "adjoint",
    "multi_product",
    "project_real",
    "run",
    "run_processed",
    "step",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class PartMismatch(ValueError):
    """Scheme and problem disagree structurally (part count, missing flows)."""


class ComplexOnRealState(TypeError):
    """A complex-coefficient scheme was applied to a real-state problem."""


class DuplicateK(ValueError):
    """Multi-product substep counts must be distinct."""


class SingularResolvent(RuntimeError):
    """An implicit linear solve ``(I - tau*F) y = x`` failed."""


class NumericalBlowup(RuntimeError):
    """State norm exceeded the overflow guard during a run."""

    def __init__(self, step_index: int, norm: float = float("inf")):
        super().__init__(
            f"state norm {norm:.3e} exceeded the overflow guard at step {step_index}"
        )
        self.step_index = step_index
        self.norm = norm


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

_EXACTNESS = ("exact", "numerical")
_FIELDS = ("real", "complex")


@dataclass(frozen=True)
class FlowMap:
    """One part's ``t``-flow: a map ``(t, x) -> x`` advancing by time ``t``.

    ``exactness`` is ``"exact"`` when the map is the true flow of its part
    (so flows with summed durations may be merged) and ``"numerical"`` for
    approximate one-step maps such as Crank--Nicolson factors.
    ``cost_weight`` is charged to the cost ledger per call.
    """

    label: str
    apply: Callable
    exactness: str = "exact"
    cost_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.exactness not in _EXACTNESS:
            raise ValueError(f"exactness must be one of {_EXACTNESS}")
        if self.cost_weight < 0:
            raise ValueError("cost_weight must be nonnegative")


@dataclass(frozen=True)
class StateDescriptor:
    """Shape and scalar field of a problem's state."""

    dimension: Any
    field: str = "real"

    def __post_init__(self) -> None:
        if self.field not in _FIELDS:
            raise ValueError(f"field must be one of {_FIELDS}")


@dataclass(frozen=True)
class LinearPart:
    """Matrix-vector product and shifted solve for one linear part ``F``.

    ``matvec(x)`` returns ``F x``; ``solve(tau, x)`` returns
    ``(I - tau*F)^{-1} x`` and should raise ``numpy.linalg.LinAlgError``
    when the shifted matrix is singular.
    """

    matvec: Callable
    solve: Callable
    solve_cost: float = 1.0
    matvec_cost: float = 0.0


@dataclass(frozen=True)
class SplitProblem:
    """A vector field split into parts with individually computable flows.

    ``commutator_flow`` is the modified-potential flow used by
    commutator-augmented schemes.  ``exact_solution(t, x0)``, when known,
    provides the reference flow of the full field.  ``linear_parts`` equips
    linear problems with the products and resolvents needed by implicit
    (ADI/LOD) stepping.
    """

    flows: tuple
    state_descriptor: StateDescriptor
    commutator_flow: Optional[FlowMap] = None
    exact_solution: Optional[Callable] = None
    linear_parts: Optional[tuple] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "flows", tuple(self.flows))
        if len(self.flows) < 2:
            raise ValueError("a split problem needs at least two flows")
        if self.linear_parts is not None:
            object.__setattr__(self, "linear_parts", tuple(self.linear_parts))

    @property
    def n_parts(self) -> int:
        return len(self.flows)


@dataclass(frozen=True)
class ProcessorMap:
    """Closed-form near-identity change of coordinates with explicit inverse.

    Both maps take ``(h, x)``; ``forward(0, x) == x`` is expected.
    """

    forward: Callable
    inverse: Callable
    cost_weight: float = 0.0


@dataclass(frozen=True)
class ProcessedScheme:
    """Kernel stepped in processed coordinates: ``pi^-1 o kernel^m o pi``.

    ``processor`` is a splitting recipe (:class:`SplittingScheme` or bare
    :class:`SchemeCoefficients`, inverted exactly by reversing its stages
    with negated durations) or a :class:`ProcessorMap`.
    """

    kernel: Any
    processor: Any


@dataclass(frozen=True)
class RealProjection:
    """Complex scheme wrapper that returns the real part after each step."""

    scheme: Any


@dataclass(frozen=True)
class MultiProduct:
    """Linear combination ``sum_i c_i (basic_{h/k_i})^{k_i}`` of order 2m."""

    k_list: tuple
    basic: Any
    coefficients: tuple


@dataclass
class CostLedger:
    """Accumulated per-label flow calls and their weighted total."""

    calls: dict = dataclasses.field(default_factory=dict)
    weighted: float = 0.0

    def charge(self, label: str, weight: float) -> None:
        self.calls[label] = self.calls.get(label, 0) + 1
        self.weighted += weight


@dataclass(frozen=True)
class RunResult:
    """Recorded trajectory of a run together with its cost ledger."""

    states: tuple
    times: tuple
    cost: CostLedger

    @property
    def final_state(self):
        return self.states[-1]


@dataclass
class _MergeState:
    """Tracks the previously applied flow for FSAL cost merging."""

    last: Optional[FlowMap] = None


# ---------------------------------------------------------------------------
# Token resolution: scheme -> [(flow, coefficient, h-power)]
# ---------------------------------------------------------------------------


def _coefficient_tokens(coeffs: SchemeCoefficients) -> list:
    tokens = []
    for j, aj in enumerate(coeffs.a):
        if aj:
            tokens.append((1, aj))
        if j < len(coeffs.b) and coeffs.b[j]:
            tokens.append((2, coeffs.b[j]))
    return tokens


def _kernel_tokens(flows: tuple, g) -> list:
    """Symmetric kernel over ``m`` parts scaled by ``g``: outermost first."""
    m = len(flows)
    up = [(flows[i], g / 2, 1) for i in range(m - 1)]
    return up + [(flows[m - 1], g, 1)] + up[::-1]


def _tokens_for(scheme, problem: SplitProblem) -> list:
    flows = problem.flows
    m = len(flows)
    if isinstance(scheme, SchemeCoefficients):
        if m != 2:
            raise PartMismatch(f"two-part coefficients on a {m}-part problem")
        return [(flows[kind - 1], c, 1) for kind, c in _coefficient_tokens(scheme)]
    if not isinstance(scheme, SplittingScheme):
        raise TypeError(f"cannot step a {type(scheme).__name__}")
    if m == 2:
        tokens = []
        for kind, c in catalog.flow_stages(scheme):
            if kind == 1:
                tokens.append((flows[0], c, 1))
            elif kind == 2:
                tokens.append((flows[1], c, 1))
            else:
                if problem.commutator_flow is None:
                    raise PartMismatch(
                        f"{scheme.id} needs a commutator flow, the problem has none"
                    )
                tokens.append((problem.commutator_flow, c, 3))
        return tokens
    if isinstance(scheme.coefficients, GammaSequence):
        tokens = []
        for g in scheme.coefficients.gamma:
            tokens += _kernel_tokens(flows, g)
        return tokens
    a, b = scheme.coefficients.a, scheme.coefficients.b
    if (a, b) == ((1, 0), (1,)):
        return [(f, 1.0, 1) for f in flows]
    if (a, b) == ((0, 1), (1,)):
        return [(f, 1.0, 1) for f in flows[::-1]]
    if (a, b) == ((0.5, 0.5), (1,)):
        return _kernel_tokens(flows, 1.0)
    if (a, b) == ((0, 1, 0), (0.5, 0.5)):
        return _kernel_tokens(flows[::-1], 1.0)
    raise PartMismatch(f"{scheme.id} does not generalize to {m} parts")


def _scheme_is_complex(scheme) -> bool:
    if isinstance(scheme, RealProjection):
        return False
    if isinstance(scheme, MultiProduct):
        return _scheme_is_complex(scheme.basic)
    if isinstance(scheme, ProcessedScheme):
        if _scheme_is_complex(scheme.kernel):
            return True
        if isinstance(scheme.processor, ProcessorMap):
            return False
        return _scheme_is_complex(scheme.processor)
    coeffs = scheme.coefficients if isinstance(scheme, SplittingScheme) else scheme
    if isinstance(coeffs, SchemeCoefficients):
        return not coeffs.real
    if isinstance(coeffs, GammaSequence):
        return any(complex(g).imag != 0 for g in coeffs.gamma)
    return False


def _check_state_field(scheme, problem: SplitProblem) -> None:
    if _scheme_is_complex(scheme) and problem.state_descriptor.field == "real":
        raise ComplexOnRealState(
            "complex-coefficient scheme on a real-state problem; "
            "wrap it with project_real()"
        )


def _norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))


# ---------------------------------------------------------------------------
# Core application
# ---------------------------------------------------------------------------


def _apply_tokens(tokens, h, x, ledger: CostLedger, merge: _MergeState):
    for flow, coeff, power in tokens:
        x = flow.apply(coeff * h**power, x)
        if not (merge.last is flow and flow.exactness == "exact"):
            ledger.charge(flow.label, flow.cost_weight)
        merge.last = flow
    return x


def _dispatch(scheme, problem, h, x, ledger: CostLedger, merge: _MergeState):
    if isinstance(scheme, SplittingScheme) and scheme.adi_kind is not None:
        merge.last = None
        return _adi_apply(scheme.adi_kind, problem, h, x, ledger)
    if isinstance(scheme, RealProjection):
        if problem.state_descriptor.field != "real":
            raise ValueError("real projection requires a real-state problem")
        merge.last = None
        y = _dispatch(scheme.scheme, problem, h, np.asarray(x).astype(complex),
                      ledger, merge)
        merge.last = None
        return np.real(y)
    if isinstance(scheme, MultiProduct):
        return _multi_product_apply(scheme, problem, h, x, ledger, merge)
    if isinstance(scheme, ProcessedScheme):
        y = _processor_forward(scheme.processor, problem, h, x, ledger, merge)
        y = _dispatch(scheme.kernel, problem, h, y, ledger, merge)
        return _processor_inverse(scheme.processor, problem, h, y, ledger, merge)
    return _apply_tokens(_tokens_for(scheme, problem), h, x, ledger, merge)


def _multi_product_apply(mp: MultiProduct, problem, h, x, ledger, merge):
    merge.last = None
    acc = None
    for c, k in zip(mp.coefficients, mp.k_list):
        y = x
        branch = _MergeState()
        for _ in range(k):
            y = _dispatch(mp.basic, problem, h / k, y, ledger, branch)
        acc = c * np.asarray(y) if acc is None else acc + c * np.asarray(y)
    return acc


def _processor_forward(proc, problem, h, x, ledger, merge):
    if isinstance(proc, ProcessorMap):
        merge.last = None
        ledger.charge("processor", proc.cost_weight)
        return proc.forward(h, x)
    return _apply_tokens(_tokens_for(proc, problem), h, x, ledger, merge)


def _processor_inverse(proc, problem, h, x, ledger, merge):
    if isinstance(proc, ProcessorMap):
        merge.last = None
        ledger.charge("processor", proc.cost_weight)
        return proc.inverse(h, x)
    tokens = [(f, -c, p) for f, c, p in reversed(_tokens_for(proc, problem))]
    return _apply_tokens(tokens, h, x, ledger, merge)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def step(scheme, problem: SplitProblem, h, x):
    """Advance ``x`` by one step of size ``h``.

    ``scheme`` may be a catalog :class:`SplittingScheme` (including ADI
    entries), bare :class:`SchemeCoefficients`, or a wrapper produced by
    :func:`project_real`, :func:`multi_product`, or :class:`ProcessedScheme`.
    """
    _check_state_field(scheme, problem)
    return _dispatch(scheme, problem, h, x, CostLedger(), _MergeState())


def adjoint(scheme):
    """The adjoint scheme: inverse of the original step at negated ``h``.

    Reverses the stage sequence, so ``step(adjoint(s), problem, h)`` undoes
    ``step(s, problem, -h)`` on exact flows.  Involutive on coefficients.
    """
    if isinstance(scheme, SchemeCoefficients):
        return SchemeCoefficients(a=scheme.a[::-1], b=scheme.b[::-1])
    if isinstance(scheme, GammaSequence):
        return GammaSequence(scheme.gamma[::-1], scheme.basic_order)
    if isinstance(scheme, SplittingScheme):
        if scheme.adi_kind is not None:
            raise ValueError("ADI schemes have no coefficient adjoint")
        coeffs = adjoint(scheme.coefficients)
        cc = scheme.commutator_coeffs
        if cc:
            s = len(cc) - 1
            if scheme.kick_part == "A":
                cc = cc[::-1]
            else:
                # The trailing-slot flow cannot be realigned when the
                # commutator generator only commutes with part 2.
                if cc[s]:
                    raise ValueError(
                        "cannot take the adjoint of a trailing commutator flow"
                    )
                cc = tuple(cc[s - 1 - j] for j in range(s)) + (0.0,)
        new_id = (
            scheme.id[: -len("-adjoint")]
            if scheme.id.endswith("-adjoint")
            else scheme.id + "-adjoint"
        )
        return replace(scheme, id=new_id, coefficients=coeffs, commutator_coeffs=cc)
    raise TypeError(f"no adjoint for {type(scheme).__name__}")


def run(
    scheme,
    problem: SplitProblem,
    h,
    x0,
    n_steps: int,
    record_every: int = 1,
    blowup_factor: float = 1e8,
) -> RunResult:
    """Apply ``n_steps`` steps, recording every ``record_every``-th state.

    The initial state and the final state are always recorded.  Raises
    :class:`NumericalBlowup` when the state norm passes
    ``blowup_factor * ||x0||`` or stops being finite.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    _check_state_field(scheme, problem)
    x = np.array(x0, copy=True)
    guard = blowup_factor * _norm(x)
    ledger = CostLedger()
    merge = _MergeState()
    states = [x]
    times = [0.0]
    for k in range(1, n_steps + 1):
        x = np.asarray(_dispatch(scheme, problem, h, x, ledger, merge))
        if not np.all(np.isfinite(x)):
            raise NumericalBlowup(k)
        if _norm(x) > guard:
            raise NumericalBlowup(k, _norm(x))
        if k % record_every == 0 or k == n_steps:
            states.append(np.array(x, copy=True))
            times.append(k * h)
    return RunResult(tuple(states), tuple(times), ledger)


def run_processed(
    ps: ProcessedScheme,
    problem: SplitProblem,
    h,
    x0,
    n_blocks: int,
    m: int,
    cheap: bool = False,
    blowup_factor: float = 1e8,
) -> RunResult:
    """Run ``pi^-1 o kernel^m o pi`` blockwise, recording block outputs.

    With ``cheap=True``, the processor is applied once up front and the raw
    kernel iterates are recorded instead (the inverse is never taken); for
    long runs this costs the same as unprocessed stepping.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    _check_state_field(ps, problem)
    x = np.array(x0, copy=True)
    guard = blowup_factor * _norm(x)
    ledger = CostLedger()
    merge = _MergeState()
    states = [x]
    times = [0.0]
    if cheap:
        x = np.asarray(_processor_forward(ps.processor, problem, h, x, ledger, merge))
    for n in range(1, n_blocks + 1):
        if cheap:
            for _ in range(m):
                x = _dispatch(ps.kernel, problem, h, x, ledger, merge)
            out = np.asarray(x)
        else:
            y = _processor_forward(ps.processor, problem, h, x, ledger, merge)
            for _ in range(m):
                y = _dispatch(ps.kernel, problem, h, y, ledger, merge)
            out = np.asarray(
                _processor_inverse(ps.processor, problem, h, y, ledger, merge)
            )
            x = out
            merge.last = None
        if not np.all(np.isfinite(out)):
            raise NumericalBlowup(n)
        if _norm(out) > guard:
            raise NumericalBlowup(n, _norm(out))
        states.append(np.array(out, copy=True))
        times.append(n * m * h)
    return RunResult(tuple(states), tuple(times), ledger)


def project_real(scheme):
    """Wrap a complex scheme so each step returns the real part of its output.

    Real schemes are returned unchanged.  For symmetric-conjugate schemes of
    odd order ``r`` the wrapped scheme has order ``r + 1``.
    """
    if not _scheme_is_complex(scheme):
        return scheme
    return RealProjection(scheme)


def multi_product(k_list, basic) -> MultiProduct:
    """Combine ``basic`` substep runs into ``sum_i c_i (basic_{h/k_i})^{k_i}``.

    For ``m`` distinct positive integers the extrapolation weights
    ``c_i = prod_{j != i} k_i^2 / (k_i^2 - k_j^2)`` give order ``2m`` over a
    time-symmetric second-order ``basic``.
    """
    ks = tuple(int(k) for k in k_list)
    if any(k < 1 for k in ks):
        raise ValueError("substep counts must be positive integers")
    if len(set(ks)) != len(ks):
        raise DuplicateK(f"substep counts must be distinct, got {ks}")
    coefficients = []
    for i, ki in enumerate(ks):
        c = Fraction(1)
        for j, kj in enumerate(ks):
            if j != i:
                c *= Fraction(ki * ki, ki * ki - kj * kj)
        coefficients.append(c)
    return MultiProduct(
        k_list=ks, basic=basic, coefficients=tuple(float(c) for c in coefficients)
    )


def adi_step(kind: str, problem: SplitProblem, h, x):
    """One implicit alternating-direction step on a two-part linear problem.

    ``kind`` is one of ``marchuk-yanenko`` (sequential implicit Euler),
    ``yanenko-cn`` (sequential Crank--Nicolson factors),
    ``peaceman-rachford`` (interleaved half-step factors, second order), or
    ``douglas-rachford`` (predictor/corrector form); underscores are
    accepted in place of hyphens.
    """
    return _adi_apply(_normalize_adi_kind(kind), problem, h, x, CostLedger())


def _normalize_adi_kind(kind: str) -> str:
    normalized = str(kind).replace("_", "-")
    if normalized not in catalog.ADI_KINDS:
        raise ValueError(f"unknown ADI kind {kind!r}")
    return normalized


def _adi_apply(kind: str, problem: SplitProblem, h, x, ledger: CostLedger):
    parts = problem.linear_parts
    if parts is None or len(parts) != 2:
        raise PartMismatch("ADI stepping needs linear_parts for exactly two parts")
    p1, p2 = parts

    def solve(part: LinearPart, idx: int, tau, y):
        ledger.charge(f"R{idx}", part.solve_cost)
        try:
            return part.solve(tau, y)
        except np.linalg.LinAlgError as exc:
            raise SingularResolvent(
                f"part {idx} resolvent is singular at tau={tau}"
            ) from exc

    def matvec(part: LinearPart, idx: int, y):
        ledger.charge(f"F{idx}", part.matvec_cost)
        return part.matvec(y)

    if kind == "marchuk-yanenko":
        return solve(p2, 2, h, solve(p1, 1, h, x))
    if kind == "yanenko-cn":
        y = x + 0.5 * h * matvec(p1, 1, x)
        y = solve(p1, 1, 0.5 * h, y)
        y = y + 0.5 * h * matvec(p2, 2, y)
        return solve(p2, 2, 0.5 * h, y)
    if kind == "peaceman-rachford":
        y = x + 0.5 * h * matvec(p2, 2, x)
        y = solve(p1, 1, 0.5 * h, y)
        y = y + 0.5 * h * matvec(p1, 1, y)
        return solve(p2, 2, 0.5 * h, y)
    # douglas-rachford
    predictor = solve(p1, 1, h, x + h * matvec(p2, 2, x))
    return solve(p2, 2, h, x + h * matvec(p1, 1, predictor))
