"""Command-line benchmark harness and CSV emission.

Provides named desk-scale experiment presets that sweep step/cost budgets
over catalog schemes and write one CSV row per (scheme, budget) run, plus
verbs for catalog listing, scheme verification, stability profiles, and
oscillatory mode tables.

Conventions:

* every preset is deterministic given its seed; wall-clock time is the
  only CSV column allowed to differ between repeated runs;
* the ``cost`` column is the engine's weighted flow-evaluation count
  (implicit resolvent solves charge like exponential flows; diagonal
  kicks may be free, see the problem constructors);
* ``err_e1`` is a relative 2-norm error against the preset's oracle and
  ``err_e2`` a preset-specific second diagnostic (trace error for matrix
  problems, energy or unitarity drift otherwise); blown-up runs record
  infinite errors rather than aborting a sweep;
* CSV columns are fixed: scheme_id, problem_id, h, n_steps, cost,
  err_e1, err_e2, wall_ms, with floats at 17 significant digits.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import math
import sys
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import catalog, engine, oscillatory, problems, stability
from .algebra import negative_step_witness
from .catalog import ParseError, SplittingScheme, ValidationFailed, get_scheme

__all__ = [
    "BenchmarkRecord",
    "CSV_COLUMNS",
    "ExperimentPreset",
    "UnknownPreset",
    "ZeroTrace",
    "errors_e1_e2",
    "main",
    "preset_names",
    "run_preset",
    "write_records",
]

CSV_COLUMNS = (
    "scheme_id",
    "problem_id",
    "h",
    "n_steps",
    "cost",
    "err_e1",
    "err_e2",
    "wall_ms",
)


class UnknownPreset(KeyError):
    """Raised when a preset name does not exist."""


class ZeroTrace(ValueError):
    """Raised when the reference trace is too small to normalize by."""


@dataclasses.dataclass(frozen=True)
class BenchmarkRecord:
    """One benchmark run: scheme, problem, resolution, cost, and errors.

    Errors may be infinite (recorded blow-ups) but never negative;
    ``cost`` counts weighted flow evaluations and is strictly positive.
    """

    scheme_id: str
    problem_id: str
    h: float
    n_steps: int
    cost: float
    err_e1: float
    err_e2: float
    wall_ms: float

    def __post_init__(self) -> None:
        if not self.cost > 0.0:
            raise ValueError(f"cost must be positive, got {self.cost}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")
        for name in ("err_e1", "err_e2"):
            value = getattr(self, name)
            if math.isnan(value) or value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


@dataclasses.dataclass(frozen=True)
class ExperimentPreset:
    """A named, reproducible benchmark sweep.

    ``grid`` lists the sweep points: weighted-cost budgets for efficiency
    presets, step sizes for the resonance sweep (the drift portion of the
    two-level preset additionally sweeps end times at fixed step).
    """

    name: str
    problem: str
    scheme_ids: Tuple[str, ...]
    t_f: float
    grid: Tuple[float, ...]
    output: str
    description: str = ""


def errors_e1_e2(approx: np.ndarray, exact: np.ndarray) -> Tuple[float, float]:
    """Relative 2-norm and relative trace error of a matrix approximation.

    Raises :class:`ZeroTrace` when the reference trace is smaller than
    1e-300 in absolute value, and ``ValueError`` on shape mismatch or
    non-square input.
    """
    approx = np.asarray(approx)
    exact = np.asarray(exact)
    if approx.shape != exact.shape:
        raise ValueError(f"shape mismatch: {approx.shape} vs {exact.shape}")
    if exact.ndim != 2 or exact.shape[0] != exact.shape[1]:
        raise ValueError(f"expected square matrices, got shape {exact.shape}")
    e1 = problems.spectral_norm(exact - approx) / problems.spectral_norm(exact)
    trace = np.trace(exact)
    if abs(trace) < 1e-300:
        raise ZeroTrace(f"reference trace {trace} too small for a relative error")
    e2 = abs(trace - np.trace(approx)) / abs(trace)
    return float(e1), float(e2)


def write_records(records: Sequence[BenchmarkRecord], path: str) -> str:
    """Write records as CSV with fixed columns and 17 significant digits."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(
                [
                    record.scheme_id,
                    record.problem_id,
                    f"{record.h:.17g}",
                    record.n_steps,
                    f"{record.cost:.17g}",
                    f"{record.err_e1:.17g}",
                    f"{record.err_e2:.17g}",
                    f"{record.wall_ms:.17g}",
                ]
            )
    return path


# ---------------------------------------------------------------------------
# Sweep machinery
# ---------------------------------------------------------------------------


def _per_step_cost(scheme, problem, h_probe: float, x0) -> float:
    """Asymptotic weighted cost of one step (start-up charges washed out)."""
    one = engine.run(scheme, problem, h_probe, x0, 1).cost.weighted
    nine = engine.run(scheme, problem, h_probe, x0, 9).cost.weighted
    return max((nine - one) / 8.0, 1e-9)


def _steps_for_budget(budget: float, per_step: float) -> int:
    return max(1, int(round(budget / per_step)))


def _run_tasks(tasks: List[Callable[[], BenchmarkRecord]]) -> List[BenchmarkRecord]:
    """Execute independent run tasks concurrently, keeping task order."""
    if len(tasks) <= 1:
        records = [task() for task in tasks]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            records = list(pool.map(lambda task: task(), tasks))
    return sorted(
        records, key=lambda r: (r.problem_id, r.scheme_id, r.h, r.n_steps)
    )


def _timed(fn: Callable[[], Tuple[float, float, float, int, float]],
           scheme_id: str, problem_id: str) -> BenchmarkRecord:
    start = time.perf_counter()
    h, e1, e2, n_steps, cost = fn()
    wall = (time.perf_counter() - start) * 1e3
    return BenchmarkRecord(
        scheme_id=scheme_id,
        problem_id=problem_id,
        h=h,
        n_steps=n_steps,
        cost=cost,
        err_e1=e1,
        err_e2=e2,
        wall_ms=wall,
    )


def _matrix_sweep_tasks(
    problem_id: str,
    split: engine.SplitProblem,
    exact: np.ndarray,
    scheme: SplittingScheme,
    budgets: Sequence[float],
    t_f: float,
    x0: np.ndarray,
) -> List[Callable[[], BenchmarkRecord]]:
    per_step = _per_step_cost(scheme, split, t_f / 1024.0, x0)

    def make(budget: float) -> Callable[[], BenchmarkRecord]:
        def task() -> BenchmarkRecord:
            def body():
                n = _steps_for_budget(budget, per_step)
                h = t_f / n
                result = engine.run(scheme, split, h, x0, n)
                e1, e2 = errors_e1_e2(result.final_state, exact)
                return h, e1, e2, n, result.cost.weighted

            return _timed(body, scheme.id, problem_id)

        return task

    return [make(b) for b in budgets]


def _resolvent_gamma(scheme: SplittingScheme) -> Tuple[complex, ...]:
    coeffs = scheme.coefficients
    if isinstance(coeffs, catalog.GammaSequence):
        return tuple(coeffs.gamma)
    if coeffs is not None and (tuple(coeffs.a), tuple(coeffs.b)) in (
        ((0.5, 0.5), (1.0,)),
        ((0.0, 1.0, 0.0), (0.5, 0.5)),
    ):
        return (1.0,)
    raise ValueError(f"{scheme.id} is not a composition of symmetric kernels")


def _resolvent_sweep_tasks(
    problem_id: str,
    split: engine.SplitProblem,
    exact: np.ndarray,
    scheme: SplittingScheme,
    budgets: Sequence[float],
    t_f: float,
    x0: np.ndarray,
) -> List[Callable[[], BenchmarkRecord]]:
    """Sweep a composition over the implicit (resolvent-product) kernel.

    One kernel evaluation at scaled step ``g*h`` applies the forward
    factors ``(I + g*h/2 F_i)`` part by part, then the resolvents
    ``(I - g*h/2 F_i)^{-1}`` in reverse order; the adjoint-pair structure
    makes the kernel time-symmetric and second order.
    """
    gamma = _resolvent_gamma(scheme)
    parts = split.linear_parts
    per_step = len(gamma) * sum(p.solve_cost + p.matvec_cost for p in parts)

    def make(budget: float) -> Callable[[], BenchmarkRecord]:
        def task() -> BenchmarkRecord:
            def body():
                n = _steps_for_budget(budget, per_step)
                h = t_f / n
                x = np.array(x0, copy=True)
                cost = 0.0
                for _ in range(n):
                    for g in gamma:
                        tau = g * h / 2.0
                        for part in parts:
                            x = x + tau * part.matvec(x)
                            cost += part.matvec_cost
                        for part in reversed(parts):
                            x = part.solve(tau, x)
                            cost += part.solve_cost
                e1, e2 = errors_e1_e2(x, exact)
                return h, e1, e2, n, cost

            return _timed(body, scheme.id, problem_id)

        return task

    return [make(b) for b in budgets]


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_SS_SCHEMES = (
    "strang-aba",
    "triplejump-4",
    "quintuplejump-4",
    "triplejump-6",
    "quintuplejump-6",
    "triplejump-8",
    "quintuplejump-8",
)
_RESOLVENT_BUDGETS = (1200.0, 1800.0, 2700.0, 4000.0, 6000.0)

PRESETS: Dict[str, ExperimentPreset] = {}
_RUNNERS: Dict[str, Callable] = {}


def _register(preset: ExperimentPreset):
    def wrap(runner):
        PRESETS[preset.name] = preset
        _RUNNERS[preset.name] = runner
        return runner

    return wrap


def preset_names() -> Tuple[str, ...]:
    return tuple(sorted(PRESETS))


@_register(
    ExperimentPreset(
        name="appendix-ss",
        problem="three seeded unit-norm 50x50 matrix parts, X(0) = I",
        scheme_ids=_SS_SCHEMES,
        t_f=10.0,
        grid=(2000.0, 3000.0, 4500.0, 6800.0, 10000.0),
        output="appendix-ss.csv",
        description=(
            "Symmetric compositions over two basic kernels: exponential "
            "(problem ss3-d50-exp, budgets from the preset grid) and "
            "resolvent-product (ss3-d50-res, smaller fixed budgets to stay "
            "above the roundoff floor)."
        ),
    )
)
def _run_appendix_ss(preset, seed, t_f, grid, methods, problem_filter, tol):
    matrix = problems.random_matrix_problem(50, n_parts=3, seed=seed)
    split = problems.as_split_problem(matrix)
    exact = problems.matrix_exponential(matrix.total(), t_f)
    x0 = np.eye(matrix.dimension)
    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        if problem_filter in (None, "ss3-d50-exp"):
            tasks += _matrix_sweep_tasks(
                "ss3-d50-exp", split, exact, scheme, grid, t_f, x0
            )
        if problem_filter in (None, "ss3-d50-res"):
            budgets = grid if grid != PRESETS["appendix-ss"].grid else _RESOLVENT_BUDGETS
            tasks += _resolvent_sweep_tasks(
                "ss3-d50-res", split, exact, scheme, budgets, t_f, x0
            )
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="appendix-ab",
        problem="two seeded unit-norm 50x50 matrix parts, X(0) = I",
        scheme_ids=(
            "lie-trotter-ab",
            "lie-trotter-ba",
            "symplectic-euler-vt",
            "symplectic-euler-tv",
            "strang-aba",
            "strang-bab",
            "hmc-3stage",
            "triplejump-4",
            "quintuplejump-4",
        ),
        t_f=10.0,
        grid=(50.0, 100.0, 200.0, 400.0, 800.0),
        output="appendix-ab.csv",
    )
)
def _run_appendix_ab(preset, seed, t_f, grid, methods, problem_filter, tol):
    matrix = problems.random_matrix_problem(50, n_parts=2, seed=seed)
    split = problems.as_split_problem(matrix)
    exact = problems.matrix_exponential(matrix.total(), t_f)
    x0 = np.eye(matrix.dimension)
    tasks = []
    for sid in methods:
        tasks += _matrix_sweep_tasks(
            "ab2-d50", split, exact, get_scheme(sid), grid, t_f, x0
        )
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="appendix-rkn",
        problem="seeded block matrices (nilpotent part 1), dimension 50, X(0) = I",
        scheme_ids=("strang-aba", "triplejump-4", "s2m", "chin-4-mod"),
        t_f=10.0,
        grid=(80.0, 160.0, 320.0, 640.0, 1280.0),
        output="appendix-rkn.csv",
        description="Modified-potential schemes run with their commutator flow installed.",
    )
)
def _run_appendix_rkn(preset, seed, t_f, grid, methods, problem_filter, tol):
    matrix = problems.random_matrix_problem(
        25, n_parts=2, seed=seed, structure="rkn_block"
    )
    exact = problems.matrix_exponential(matrix.total(), t_f)
    x0 = np.eye(matrix.dimension)
    splits: Dict[Optional[str], engine.SplitProblem] = {}
    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        if scheme.kick_part not in splits:
            splits[scheme.kick_part] = problems.as_split_problem(
                matrix, kick_part=scheme.kick_part
            )
        tasks += _matrix_sweep_tasks(
            "rkn-block-d50", splits[scheme.kick_part], exact, scheme, grid, t_f, x0
        )
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="appendix-ni",
        problem="two seeded 50x50 parts with the second scaled by epsilon",
        scheme_ids=("soint", "triplejump-4"),
        t_f=10.0,
        grid=(8.0, 14.0, 24.0, 40.0, 70.0, 120.0, 200.0),
        output="appendix-ni.csv",
        description="Runs both epsilon = 1e-1 (problem ni-eps0.1) and 1e-3 (ni-eps0.001).",
    )
)
def _run_appendix_ni(preset, seed, t_f, grid, methods, problem_filter, tol):
    tasks = []
    for eps, problem_id in ((1e-1, "ni-eps0.1"), (1e-3, "ni-eps0.001")):
        if problem_filter not in (None, problem_id):
            continue
        matrix = problems.random_matrix_problem(
            50, n_parts=2, seed=seed, structure="near_integrable", epsilon=eps
        )
        split = problems.as_split_problem(matrix)
        exact = problems.matrix_exponential(matrix.total(), t_f)
        x0 = np.eye(matrix.dimension)
        for sid in methods:
            tasks += _matrix_sweep_tasks(
                problem_id, split, exact, get_scheme(sid), grid, t_f, x0
            )
    return _run_tasks(tasks)


def _energy_sweep_tasks(
    problem_id: str,
    split: engine.SplitProblem,
    scheme: SplittingScheme,
    budgets: Sequence[float],
    t_f: float,
    x0: np.ndarray,
) -> List[Callable[[], BenchmarkRecord]]:
    """Pendulum sweeps: err_e1 = max energy drift, err_e2 = final drift."""
    reference = problems.pendulum_energy(x0)
    per_step = _per_step_cost(scheme, split, t_f / 1024.0, x0)

    def make(budget: float) -> Callable[[], BenchmarkRecord]:
        def task() -> BenchmarkRecord:
            def body():
                n = _steps_for_budget(budget, per_step)
                h = t_f / n
                result = engine.run(scheme, split, h, x0, n)
                drifts = [
                    abs(problems.pendulum_energy(state) - reference)
                    / abs(reference)
                    for state in result.states
                ]
                return h, max(drifts), drifts[-1], n, result.cost.weighted

            return _timed(body, scheme.id, problem_id)

        return task

    return [make(b) for b in budgets]


@_register(
    ExperimentPreset(
        name="pendulum-energy",
        problem="pendulum from (0.1, 0); T+V split and rotation+perturbation split",
        scheme_ids=("strang-aba",),
        t_f=500.0,
        grid=(1200.0, 2400.0, 4800.0),
        output="pendulum-energy.csv",
        description="err_e1 = max relative energy drift, err_e2 = drift at t_f.",
    )
)
def _run_pendulum_energy(preset, seed, t_f, grid, methods, problem_filter, tol):
    x0 = np.array([0.1, 0.0])
    tasks = []
    for problem_id, variant in (
        ("pendulum-tv", "TV"),
        ("pendulum-perturbed", "perturbed"),
    ):
        if problem_filter not in (None, problem_id):
            continue
        split = problems.pendulum_problem(variant)
        for sid in methods:
            tasks += _energy_sweep_tasks(
                problem_id, split, get_scheme(sid), grid, t_f, x0
            )
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="pendulum-phase",
        problem="pendulum T+V split from (0.1, 0), fine-step reference solution",
        scheme_ids=("strang-aba", "strang-bab", "triplejump-4", "quintuplejump-4"),
        t_f=60.0,
        grid=(120.0, 240.0, 480.0, 960.0, 1920.0),
        output="pendulum-phase.csv",
        description="err_e1 = relative phase-space error at t_f, err_e2 = max energy drift.",
    )
)
def _run_pendulum_phase(preset, seed, t_f, grid, methods, problem_filter, tol):
    x0 = np.array([0.1, 0.0])
    split = problems.pendulum_problem("TV")
    reference = problems.pendulum_reference(x0, t_f, 1e-3)
    energy0 = problems.pendulum_energy(x0)
    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        per_step = _per_step_cost(scheme, split, t_f / 1024.0, x0)

        def make(budget, scheme=scheme, per_step=per_step):
            def task():
                def body():
                    n = _steps_for_budget(budget, per_step)
                    h = t_f / n
                    result = engine.run(scheme, split, h, x0, n)
                    e1 = np.linalg.norm(result.final_state - reference)
                    e1 /= np.linalg.norm(reference)
                    drift = max(
                        abs(problems.pendulum_energy(s) - energy0) / abs(energy0)
                        for s in result.states
                    )
                    return h, float(e1), drift, n, result.cost.weighted

                return _timed(body, scheme.id, "pendulum-tv")

            return task

        tasks += [make(b) for b in grid]
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="schrodinger-efficiency",
        problem="double-well Schrodinger on 128 modes, bump initial state",
        scheme_ids=("strang-aba", "s2m", "triplejump-4"),
        t_f=10.0,
        grid=(16.0, 32.0, 64.0, 128.0, 256.0),
        output="schrodinger-efficiency.csv",
        description=(
            "err_e1 = relative state error at t_f against a fine high-order "
            "reference run, err_e2 = relative energy error at t_f."
        ),
    )
)
def _run_schrodinger_efficiency(preset, seed, t_f, grid, methods, problem_filter, tol):
    mesh = problems.double_well_grid(size=128, mode="real_time")
    split = problems.schrodinger_problem(mesh)
    u0 = mesh.wavefunction
    energy0 = problems.schrodinger_energy(mesh, u0)
    reference = engine.run(
        get_scheme("triplejump-6"), split, t_f / 1024.0, u0, 1024
    ).final_state
    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        per_step = _per_step_cost(scheme, split, t_f / 1024.0, u0)

        def make(budget, scheme=scheme, per_step=per_step):
            def task():
                def body():
                    n = _steps_for_budget(budget, per_step)
                    h = t_f / n
                    result = engine.run(scheme, split, h, u0, n)
                    e1 = np.linalg.norm(result.final_state - reference)
                    e1 /= np.linalg.norm(reference)
                    e2 = abs(
                        problems.schrodinger_energy(mesh, result.final_state)
                        - energy0
                    ) / abs(energy0)
                    return h, float(e1), e2, n, result.cost.weighted

                return _timed(body, scheme.id, "dwell-m128")

            return task

        tasks += [make(b) for b in grid]
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="schrodinger-imaginary",
        problem="double-well Schrodinger on 512 modes, imaginary time",
        scheme_ids=("strang-aba", "hmc-3stage", "triplejump-4"),
        t_f=1.0,
        grid=(20.0, 40.0, 80.0, 160.0, 320.0, 640.0),
        output="schrodinger-imaginary.csv",
        description=(
            "Normalized-state error and energy error against a fine reference; "
            "negative-coefficient schemes blow up at coarse steps and record "
            "infinite errors."
        ),
    )
)
def _run_schrodinger_imaginary(preset, seed, t_f, grid, methods, problem_filter, tol):
    mesh = problems.double_well_grid(size=512, mode="imaginary_time")
    split = problems.schrodinger_problem(mesh)
    u0 = mesh.wavefunction
    reference = problems.normalized(
        engine.run(get_scheme("strang-aba"), split, t_f / 2048.0, u0, 2048).final_state
    )
    energy_ref = problems.schrodinger_energy(mesh, reference)
    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        per_step = _per_step_cost(scheme, split, t_f / 2048.0, u0)

        def make(budget, scheme=scheme, per_step=per_step):
            def task():
                def body():
                    n = _steps_for_budget(budget, per_step)
                    h = t_f / n
                    try:
                        result = engine.run(scheme, split, h, u0, n)
                    except engine.NumericalBlowup as blowup:
                        steps_done = max(1, blowup.step_index)
                        return h, math.inf, math.inf, n, per_step * steps_done
                    state = problems.normalized(result.final_state)
                    e1 = np.linalg.norm(state - reference) / np.linalg.norm(reference)
                    e2 = abs(
                        problems.schrodinger_energy(mesh, state) - energy_ref
                    ) / abs(energy_ref)
                    return h, float(e1), e2, n, result.cost.weighted

                return _timed(body, scheme.id, "dwell-imag-m512")

            return task

        tasks += [make(b) for b in grid]
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="heat2d-adi",
        problem="2-D heat equation (16x16 interior mesh) and seeded 20x20 matrices",
        scheme_ids=(
            "adi-peaceman-rachford",
            "adi-marchuk-yanenko",
            "adi-yanenko-cn",
            "adi-douglas-rachford",
            "strang-aba",
        ),
        t_f=0.25,
        grid=(16.0, 32.0, 64.0, 128.0, 256.0),
        output="heat2d-adi.csv",
        description=(
            "heat2d-m16 rows use the commuting dimensional split (Strang is "
            "exact there); generic-d20 rows rerun the schemes on noncommuting "
            "seeded matrices over t_f = 2 to expose the classical orders."
        ),
    )
)
def _run_heat2d_adi(preset, seed, t_f, grid, methods, problem_filter, tol):
    tasks = []
    if problem_filter in (None, "heat2d-m16"):
        matrix = problems.heat2d_problem(16)
        split = problems.as_split_problem(matrix)
        x0 = np.ones(matrix.dimension)
        exact = split.exact_solution(t_f, x0)
        for sid in methods:
            scheme = get_scheme(sid)
            per_step = _per_step_cost(scheme, split, t_f / 1024.0, x0)

            def make(budget, scheme=scheme, per_step=per_step,
                     split=split, exact=exact, x0=x0, t_end=t_f):
                def task():
                    def body():
                        n = _steps_for_budget(budget, per_step)
                        h = t_end / n
                        result = engine.run(scheme, split, h, x0, n)
                        e1 = np.linalg.norm(result.final_state - exact)
                        e1 /= np.linalg.norm(exact)
                        e2 = abs(np.sum(exact) - np.sum(result.final_state))
                        e2 /= abs(np.sum(exact))
                        return h, float(e1), float(e2), n, result.cost.weighted

                    return _timed(body, scheme.id, "heat2d-m16")

                return task

            tasks += [make(b) for b in grid]
    if problem_filter in (None, "generic-d20"):
        matrix = problems.random_matrix_problem(20, n_parts=2, seed=seed)
        split = problems.as_split_problem(matrix)
        x0 = np.eye(matrix.dimension)
        exact = problems.matrix_exponential(matrix.total(), 2.0)
        for sid in methods:
            tasks += _matrix_sweep_tasks(
                "generic-d20",
                split,
                exact,
                get_scheme(sid),
                tuple(2.0 * b for b in grid),
                2.0,
                x0,
            )
    return _run_tasks(tasks)


@_register(
    ExperimentPreset(
        name="oscillatory-resonance",
        problem="perturbed pendulum (rotation + kick) from (0.1, 0), omega = 1",
        scheme_ids=("strang-aba",),
        t_f=500.0,
        grid=(),
        output="oscillatory-resonance.csv",
        description=(
            "Step-size sweep (the grid lists h values, not budgets) for the "
            "plain kernel and its mode-filtered processed variant (m = 4); "
            "err_e1 = max relative energy drift, err_e2 = final drift. "
            "Exactly resonant steps are skipped for the processed rows."
        ),
    )
)
def _run_oscillatory_resonance(preset, seed, t_f, grid, methods, problem_filter, tol):
    split = problems.pendulum_problem("perturbed")
    x0 = np.array([0.1, 0.0])
    energy0 = problems.pendulum_energy(x0)
    if not grid:
        grid = tuple(
            sorted(
                set(np.round(np.arange(0.35, 4.66, 0.3), 10))
                | {
                    2.0 * math.pi / 3.0 - 0.01,
                    2.0 * math.pi / 3.0 + 0.01,
                    math.pi - 0.01,
                    math.pi + 0.01,
                }
            )
        )
    mode_count = 4
    tolerance = tol if tol is not None else oscillatory.RESONANCE_TOLERANCE

    def drift_errors(states):
        drifts = [
            abs(problems.pendulum_energy(s) - energy0) / abs(energy0)
            for s in states
        ]
        return max(drifts), drifts[-1]

    def plain_task(scheme, h):
        def task():
            def body():
                n = max(1, int(round(t_f / h)))
                result = engine.run(scheme, split, h, x0, n)
                e1, e2 = drift_errors(result.states)
                return h, e1, e2, n, result.cost.weighted

            return _timed(body, scheme.id, "pendulum-perturbed")

        return task

    def filtered_task(scheme, h):
        def task():
            def body():
                n = max(1, int(round(t_f / h)))
                processed = oscillatory.processed_strang(
                    mode_count, 1.0, h, split, tolerance=tolerance
                )
                result = engine.run_processed(processed, split, h, x0, n, 1)
                e1, e2 = drift_errors(result.states)
                return h, e1, e2, n, result.cost.weighted

            return _timed(body, f"{scheme.id}+filter-m{mode_count}", "pendulum-perturbed")

        return task

    tasks = []
    for sid in methods:
        scheme = get_scheme(sid)
        for h in grid:
            tasks.append(plain_task(scheme, float(h)))
            try:
                oscillatory.processor_kicks(mode_count, 1.0, float(h), tolerance)
            except oscillatory.ResonanceError:
                continue
            tasks.append(filtered_task(scheme, float(h)))
    return _run_tasks(tasks)


_TWO_LEVEL_DRIFT_TIMES = (125.0, 250.0, 500.0, 1000.0)


@_register(
    ExperimentPreset(
        name="complex-two-level",
        problem="two-level system X' = -i (sigma_1 + sigma_2) X, X(0) = I",
        scheme_ids=("complex-3", "sym-conj-3", "or4p", "or4sc", "pa4p", "sc4sc"),
        t_f=10.0,
        grid=(0.5, 0.25, 0.125, 0.0625, 0.03125),
        output="complex-two-level.csv",
        description=(
            "two-level rows sweep the step sizes in the grid at fixed t_f; "
            "two-level-drift rows run the order-4 schemes at h = 1/4 over "
            "growing end times, with err_e2 = unitarity defect at t_f. The "
            "seed is unused: the problem is fixed."
        ),
    )
)
def _run_complex_two_level(preset, seed, t_f, grid, methods, problem_filter, tol):
    sigma1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sigma2 = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    matrix = problems.MatrixProblem(
        parts=(-1.0j * sigma1, -1.0j * sigma2),
        dimension=2,
        structure="generic",
        epsilon=0.0,
        mesh_size=None,
        source=None,
    )
    split = problems.as_split_problem(matrix)
    x0 = np.eye(2, dtype=complex)
    tasks = []

    def accuracy_task(scheme, h):
        exact = problems.matrix_exponential(matrix.total(), t_f)

        def task():
            def body():
                n = max(1, int(round(t_f / h)))
                result = engine.run(scheme, split, h, x0, n)
                e1, e2 = errors_e1_e2(result.final_state, exact)
                return h, e1, e2, n, result.cost.weighted

            return _timed(body, scheme.id, "two-level")

        return task

    def drift_task(scheme, t_end):
        exact = problems.matrix_exponential(matrix.total(), t_end)

        def task():
            def body():
                h = 0.25
                n = int(round(t_end / h))
                result = engine.run(scheme, split, h, x0, n, record_every=n)
                final = result.final_state
                e1 = problems.spectral_norm(exact - final)
                e1 /= problems.spectral_norm(exact)
                defect = problems.spectral_norm(
                    final.conj().T @ final - np.eye(2)
                )
                return h, float(e1), float(defect), n, result.cost.weighted

            return _timed(body, scheme.id, "two-level-drift")

        return task

    for sid in methods:
        scheme = get_scheme(sid)
        if problem_filter in (None, "two-level"):
            tasks += [accuracy_task(scheme, float(h)) for h in grid]
        if problem_filter in (None, "two-level-drift"):
            if scheme.claimed_order >= 4:
                tasks += [drift_task(scheme, t) for t in _TWO_LEVEL_DRIFT_TIMES]
    return _run_tasks(tasks)


def run_preset(
    name: str, seed: int = 1, overrides: Optional[dict] = None
) -> List[BenchmarkRecord]:
    """Run a named preset and write its CSV; returns the records.

    ``overrides`` may remap ``t_f``, ``costs`` (the sweep grid),
    ``methods`` (scheme ids), ``problem`` (restrict to one problem_id),
    ``tol``, and ``out`` (the CSV path).
    """
    if name not in PRESETS:
        raise UnknownPreset(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    preset = PRESETS[name]
    o = dict(overrides or {})
    t_f = float(o.get("t_f", preset.t_f))
    grid = tuple(float(c) for c in o["costs"]) if o.get("costs") else preset.grid
    methods = tuple(o["methods"]) if o.get("methods") else preset.scheme_ids
    records = _RUNNERS[name](
        preset, seed, t_f, grid, methods, o.get("problem"), o.get("tol")
    )
    write_records(records, str(o.get("out", preset.output)))
    return records


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def _coefficient_diagnostics(scheme: SplittingScheme) -> str:
    coeffs = scheme.splitting_coefficients()
    values = tuple(coeffs.a) + tuple(coeffs.b)
    delta_sum = sum(abs(v) for v in values)
    delta_max = max(abs(v) for v in values)
    return f"  sum|coeffs| = {delta_sum:.6g}   max|coeff| = {delta_max:.6g}"


def _render_scheme_report(scheme: SplittingScheme, out) -> None:
    print(f"{scheme.id}  (family {scheme.family})", file=out)
    print(f"  claimed order {scheme.claimed_order}", file=out)
    if scheme.claimed_generalized_order:
        print(
            f"  generalized order {scheme.claimed_generalized_order}", file=out
        )
    if scheme.adi_kind is not None:
        print(f"  implicit directional stepping: {scheme.adi_kind}", file=out)
        return
    flags = catalog.classify(scheme)
    active = ", ".join(k for k, v in sorted(flags.items()) if v) or "none"
    print(f"  classification: {active}", file=out)
    print(_coefficient_diagnostics(scheme), file=out)
    coeffs = scheme.splitting_coefficients()
    if coeffs.real:
        witness = negative_step_witness(coeffs)
        if witness is None:
            print("  negative-step witness: none", file=out)
        else:
            part, index = witness
            print(
                f"  negative-step witness: part {part}, stage {index}", file=out
            )


def verify_command(target: str, tol: float = 1e-10, out=None) -> int:
    """Resolve a scheme id or coefficient file, validate, and report."""
    out = out if out is not None else sys.stdout
    try:
        if target.endswith((".toml", ".txt", ".coeffs")) or "/" in target:
            file = catalog.read_coefficient_file(target)
            schemes = catalog.load_catalog(file, tol=tol)
        else:
            schemes = [catalog.validate_scheme(get_scheme(target), tol=tol)]
    except (ValidationFailed, ParseError, KeyError, OSError) as failure:
        print(f"verification failed: {failure}", file=out)
        return 2
    for scheme in schemes:
        _render_scheme_report(scheme, out)
    return 0


def _list_command(out) -> int:
    header = f"{'id':28s} {'family':16s} {'order':>5s}  {'stages':>6s}  notes"
    print(header, file=out)
    for scheme in catalog.builtin_catalog():
        if scheme.adi_kind is not None:
            stages = "-"
            note = scheme.adi_kind
        else:
            coeffs = scheme.splitting_coefficients()
            stages = str(len(coeffs.b))
            note = "complex" if not coeffs.real else ""
            if scheme.commutator_coeffs:
                note = (note + " modified-potential").strip()
        gen = (
            f" gen={scheme.claimed_generalized_order}"
            if scheme.claimed_generalized_order
            else ""
        )
        print(
            f"{scheme.id:28s} {scheme.family:16s} {scheme.claimed_order:5d}  "
            f"{stages:>6s}  {note}{gen}",
            file=out,
        )
    return 0


def _stability_command(args, out) -> int:
    rows = []
    for sid in args.schemes:
        try:
            profile = stability.stability_profile(
                get_scheme(sid),
                z_max=args.zmax,
                n_samples=args.samples,
                tol=args.tol,
            )
        except (KeyError, ValueError) as failure:
            print(f"stability failed: {failure}", file=out)
            return 2
        print(f"{sid}: z* = {profile.z_star:.12f}", file=out)
        for z, p, k1, k2, k3, k4 in profile.samples:
            rows.append((sid, z, p, k1, k2, k3, k4))
    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("scheme_id", "z", "p", "k1", "k2", "k3", "k4"))
        for sid, *values in rows:
            writer.writerow([sid] + [f"{v:.17g}" for v in values])
    print(f"wrote {len(rows)} rows to {args.out}", file=out)
    return 0


def _oscillatory_command(args, out) -> int:
    index_set = tuple(range(-args.m, args.m + 1))
    try:
        table = oscillatory.OscCoefficients.for_scheme(
            get_scheme(args.scheme), index_set, args.omega, args.h,
            tolerance=args.tol,
        )
        kicks = oscillatory.processor_kicks(args.m, args.omega, args.h, args.tol)
    except oscillatory.ResonanceError as failure:
        print(f"resonant step size: {failure}", file=out)
        return 2
    except KeyError as failure:
        print(f"oscillatory failed: {failure}", file=out)
        return 2
    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("kind", "i", "j", "re", "im"))

        def emit(kind, mapping):
            for key in sorted(mapping):
                i, j = key if isinstance(key, tuple) else (key, "")
                value = complex(mapping[key])
                writer.writerow(
                    [kind, i, j, f"{value.real:.17g}", f"{value.imag:.17g}"]
                )

        emit("alpha", table.alpha_k)
        emit("alpha2", table.alpha_kl)
        emit("alpha-exact", table.tilde_alpha_k)
        emit("alpha2-exact", table.tilde_alpha_kl)
        emit("beta", table.beta_k)
        emit("beta2", table.beta_kl)
        for j, value in enumerate(kicks, start=1):
            writer.writerow(["kick", j, "", f"{value:.17g}", "0"])
    print(
        f"wrote mode table for {args.scheme} (m={args.m}, omega={args.omega:g}, "
        f"h={args.h:g}) to {args.out}",
        file=out,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsplit",
        description="Benchmark harness for splitting and composition integrators.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    sub.add_parser("list", help="list builtin schemes")

    verify = sub.add_parser("verify", help="validate a scheme id or coefficient file")
    verify.add_argument("target")
    verify.add_argument("--tol", type=float, default=1e-10)

    run = sub.add_parser("run", help="run an experiment preset and emit CSV")
    run.add_argument("preset")
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--out", default=None)
    run.add_argument("--tf", type=float, default=None)
    run.add_argument("--costs", default=None, help="comma-separated sweep grid")
    run.add_argument("--methods", default=None, help="comma-separated scheme ids")
    run.add_argument("--problem", default=None, help="restrict to one problem_id")
    run.add_argument("--tol", type=float, default=None)

    stab = sub.add_parser("stability", help="sample stability profiles to CSV")
    stab.add_argument("schemes", nargs="+")
    stab.add_argument("--zmax", type=float, default=8.0)
    stab.add_argument("--samples", type=int, default=241)
    stab.add_argument("--tol", type=float, default=1e-12)
    stab.add_argument("--out", default="stability.csv")

    osc = sub.add_parser("oscillatory", help="emit rotating-frame mode tables")
    osc.add_argument("--scheme", default="strang-aba")
    osc.add_argument("--m", type=int, default=4)
    osc.add_argument("--omega", type=float, default=1.0)
    osc.add_argument("--h", type=float, required=True)
    osc.add_argument("--tol", type=float, default=oscillatory.RESONANCE_TOLERANCE)
    osc.add_argument("--out", default="oscillatory.csv")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    out = sys.stdout
    if args.verb == "list":
        return _list_command(out)
    if args.verb == "verify":
        return verify_command(args.target, tol=args.tol, out=out)
    if args.verb == "stability":
        return _stability_command(args, out)
    if args.verb == "oscillatory":
        return _oscillatory_command(args, out)
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.tf is not None:
        overrides["t_f"] = args.tf
    if args.costs is not None:
        overrides["costs"] = [float(c) for c in args.costs.split(",")]
    if args.methods is not None:
        overrides["methods"] = args.methods.split(",")
    if args.problem is not None:
        overrides["problem"] = args.problem
    if args.tol is not None:
        overrides["tol"] = args.tol
    try:
        records = run_preset(args.preset, seed=args.seed, overrides=overrides)
    except UnknownPreset as failure:
        print(failure.args[0], file=out)
        return 2
    except (ValidationFailed, KeyError) as failure:
        print(f"run failed: {failure}", file=out)
        return 2
    single = len(overrides.get("costs", (0, 0))) == 1
    path = overrides.get("out", PRESETS[args.preset].output)
    print(f"wrote {len(records)} records to {path}", file=out)
    if single and any(math.isinf(r.err_e1) for r in records):
        print("run blew up at the requested budget", file=out)
        return 3
    return 0
