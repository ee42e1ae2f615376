"""Concrete split problems with exact part flows.

Provides matrix splittings with seeded random parts, the pendulum in two
splittings, the 1-D Schrodinger equation on a periodic grid (real and
imaginary time, optional cubic nonlinearity), the 2-D heat equation with
commuting one-dimensional parts, and an exact two-factor product for the
quadratic-oscillator flow.

Conventions shared with the engine:

* part ``i`` of a scheme acts through ``flows[i-1]`` of the problem;
* a problem's ``commutator_flow``, when present, is the exact flow of the
  nested commutator of the part generators, oriented to match the scheme
  that requests it (see ``as_split_problem`` and ``pendulum_problem``);
* flow durations are plain floats: schemes supply ``coefficient * h`` (or
  ``coefficient * h**3`` for commutator stages).
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from . import spectral
from .engine import FlowMap, LinearPart, SplitProblem, StateDescriptor
from .prng import SplitMix64
from .spectral import GridNotPowerOfTwo

__all__ = [
    "DomainError",
    "MatrixProblem",
    "PendulumState",
    "SchrodingerGrid",
    "as_split_problem",
    "double_well_grid",
    "double_well_potential",
    "exact_quadratic_split_check",
    "heat2d_problem",
    "heat2d_source_step",
    "matrix_exponential",
    "normalized",
    "pendulum_energy",
    "pendulum_problem",
    "pendulum_reference",
    "quadratic_split_coefficients",
    "random_matrix_problem",
    "schrodinger_energy",
    "schrodinger_problem",
    "spectral_norm",
    "with_swapped_parts",
]

MATRIX_STRUCTURES = ("generic", "rkn_block", "near_integrable", "heat2d")

_NORM_START_SEED = 0x5EED5EED


class DomainError(ValueError):
    """Argument outside the domain where a closed-form identity is valid."""


# --------------------------------------------------------------------------
# matrix problems
# --------------------------------------------------------------------------

def spectral_norm(matrix: np.ndarray, iterations: int = 50,
                  tolerance: float = 1e-12) -> float:
    """Estimate the largest singular value by power iteration on ``A*A``.

    The start vector is drawn from a fixed internal SplitMix64 stream, so the
    estimate is deterministic for a given matrix.  Accuracy is limited by the
    gap between the two leading singular values; with tightly clustered
    leading values the estimate can be off by up to about 1e-2 after the
    default 50 iterations (it always underestimates).
    """
    A = np.asarray(matrix)
    n = A.shape[1]
    start = SplitMix64(_NORM_START_SEED)
    v = np.array([start.uniform() - 0.5 for _ in range(n)])
    v /= np.linalg.norm(v)
    if np.iscomplexobj(A):
        v = v.astype(complex)
    previous = 0.0
    for _ in range(iterations):
        w = A.conj().T @ (A @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        estimate = math.sqrt(s)
        if abs(estimate - previous) <= tolerance * max(estimate, 1.0):
            break
        previous = estimate
    return float(np.linalg.norm(A @ v))


@dataclasses.dataclass(frozen=True)
class MatrixProblem:
    """A linear problem x' = (F_1 + ... + F_m) x given by its matrix parts.

    ``structure`` records how the parts were built: ``generic`` parts are
    independent draws scaled to unit 2-norm, ``rkn_block`` parts are the
    nilpotent/full block pair (A^2 = 0, so [A,[A,[A,B]]] = 0), a
    ``near_integrable`` problem has its second part scaled by ``epsilon``,
    and ``heat2d`` parts are the commuting one-dimensional second-difference
    operators on an interior mesh of ``mesh_size`` points per dimension.
    ``source`` is an optional inhomogeneity t -> s(t) used by
    ``heat2d_source_step``.
    """

    parts: tuple
    dimension: int
    structure: str = "generic"
    epsilon: Optional[float] = None
    mesh_size: Optional[int] = None
    source: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self) -> None:
        if self.structure not in MATRIX_STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        object.__setattr__(self, "parts", tuple(np.asarray(p) for p in self.parts))
        for p in self.parts:
            if p.shape != (self.dimension, self.dimension):
                raise ValueError("parts must be square matrices of the stated dimension")

    def total(self) -> np.ndarray:
        """Sum of all parts: the generator of the full problem."""
        out = np.zeros_like(self.parts[0])
        for p in self.parts:
            out = out + p
        return out


def random_matrix_problem(d: int, n_parts: int = 2, seed: int = 1,
                          structure: str = "generic",
                          epsilon: float = 0.1) -> MatrixProblem:
    """Build a matrix splitting with seeded standard-normal parts.

    Matrices are filled row-major from a SplitMix64 stream through the
    Box-Muller transform and scaled to unit 2-norm one at a time, in the
    order they are drawn.  ``structure`` selects the layout:

    * ``generic`` -- ``n_parts`` independent unit-norm d x d parts;
    * ``near_integrable`` -- two parts with the second multiplied by
      ``epsilon`` after normalization;
    * ``rkn_block`` -- d is the block size: part 1 is the nilpotent
      ``[[0, 0], [A1, 0]]`` and part 2 a full random 2d x 2d matrix built
      from four unit-norm blocks, so the problem dimension is ``2 * d``.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if structure not in ("generic", "rkn_block", "near_integrable"):
        raise ValueError(f"unsupported structure {structure!r}")
    gen = SplitMix64(seed)

    def draw() -> np.ndarray:
        m = gen.normal_matrix(d, d)
        return m / spectral_norm(m)

    if structure == "generic":
        parts = tuple(draw() for _ in range(n_parts))
        return MatrixProblem(parts, d, "generic")
    if n_parts != 2:
        raise ValueError(f"{structure} requires exactly 2 parts")
    if structure == "near_integrable":
        first = draw()
        second = epsilon * draw()
        return MatrixProblem((first, second), d, "near_integrable", epsilon=epsilon)
    a1 = draw()
    blocks = [draw() for _ in range(4)]
    zero = np.zeros((d, d))
    kick = np.block([[zero, zero], [a1, zero]])
    full = np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
    return MatrixProblem((kick, full), 2 * d, "rkn_block")


def matrix_exponential(matrix: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential exp(t * F) by scaling and squaring with Pade approximants."""
    return scipy.linalg.expm(t * np.asarray(matrix))


def _cached_expm_apply(matrix: np.ndarray) -> Callable[[float, np.ndarray], np.ndarray]:
    cache: dict = {}

    def apply(t: float, x: np.ndarray) -> np.ndarray:
        E = cache.get(t)
        if E is None:
            E = scipy.linalg.expm(t * matrix)
            cache[t] = E
        return E @ x

    return apply


def _nested_commutator(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """[first, [second, first]] with the matrix commutator [X, Y] = XY - YX."""
    inner = second @ first - first @ second
    return first @ inner - inner @ first


def _dense_linear_part(matrix: np.ndarray, solve_cost: float) -> LinearPart:
    identity = np.eye(matrix.shape[0], dtype=matrix.dtype)

    def solve(tau: float, x: np.ndarray) -> np.ndarray:
        return np.linalg.solve(identity - tau * matrix, x)

    return LinearPart(matvec=lambda x: matrix @ x, solve=solve, solve_cost=solve_cost)


def _second_difference(m: int) -> np.ndarray:
    dx = 1.0 / (m + 1)
    band = np.diag(np.full(m, -2.0)) + np.diag(np.full(m - 1, 1.0), 1) \
        + np.diag(np.full(m - 1, 1.0), -1)
    return band / dx ** 2


def _tridiagonal_solve(b_matrix: np.ndarray, tau: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - tau * B) x = rhs for tridiagonal B, rhs of shape (m, k) or (m,)."""
    m = b_matrix.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = -tau * np.diag(b_matrix, 1)
    ab[1, :] = 1.0 - tau * np.diag(b_matrix)
    ab[2, :-1] = -tau * np.diag(b_matrix, -1)
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


def _heat2d_flows(m: int, flow_cost: float, solve_cost: float):
    """Flows and resolvents for the commuting parts I (x) B and B (x) I.

    States are row-major supervectors: entry j + m*i holds the value at
    interior point (i, j), so part 1 acts as U -> U @ exp(tB) and part 2 as
    U -> exp(tB) @ U on the reshaped m x m array.
    """
    B = _second_difference(m)
    cache: dict = {}

    def expB(t: float) -> np.ndarray:
        E = cache.get(t)
        if E is None:
            E = scipy.linalg.expm(t * B)
            cache[t] = E
        return E

    def apply_rows(t: float, x: np.ndarray) -> np.ndarray:
        return (x.reshape(m, m) @ expB(t)).ravel()

    def apply_cols(t: float, x: np.ndarray) -> np.ndarray:
        return (expB(t) @ x.reshape(m, m)).ravel()

    def matvec_rows(x: np.ndarray) -> np.ndarray:
        return (x.reshape(m, m) @ B).ravel()

    def matvec_cols(x: np.ndarray) -> np.ndarray:
        return (B @ x.reshape(m, m)).ravel()

    def solve_rows(tau: float, x: np.ndarray) -> np.ndarray:
        return _tridiagonal_solve(B, tau, x.reshape(m, m).T).T.ravel()

    def solve_cols(tau: float, x: np.ndarray) -> np.ndarray:
        return _tridiagonal_solve(B, tau, x.reshape(m, m)).ravel()

    flows = (
        FlowMap(label="heat-x", apply=apply_rows, cost_weight=flow_cost),
        FlowMap(label="heat-y", apply=apply_cols, cost_weight=flow_cost),
    )
    linear = (
        LinearPart(matvec=matvec_rows, solve=solve_rows, solve_cost=solve_cost),
        LinearPart(matvec=matvec_cols, solve=solve_cols, solve_cost=solve_cost),
    )

    def exact(t: float, x: np.ndarray) -> np.ndarray:
        E = expB(t)
        return (E @ x.reshape(m, m) @ E).ravel()

    return flows, linear, exact


def as_split_problem(problem: MatrixProblem, kick_part: Optional[str] = None,
                     flow_cost: float = 1.0,
                     solve_cost: float = 1.0) -> SplitProblem:
    """Wrap a MatrixProblem in exact exponential flows for the engine.

    Each part flow applies exp(t * F_i) (results are cached per duration, so
    fixed-step runs pay one exponential per distinct duration).  Resolvent
    solves are provided for all parts -- tridiagonal ones for ``heat2d``,
    dense ones otherwise.  ``kick_part`` selects the orientation of the
    commutator flow for schemes with modified-potential stages: "A" installs
    the flow of [F1,[F2,F1]], "B" the flow of [F2,[F1,F2]], and None omits
    it.  The exact solution exp(t * (F1 + ... + Fm)) x is always attached.
    """
    field = "complex" if any(np.iscomplexobj(p) for p in problem.parts) else "real"
    descriptor = StateDescriptor(dimension=problem.dimension, field=field)

    if problem.structure == "heat2d":
        flows, linear, exact = _heat2d_flows(problem.mesh_size, flow_cost, solve_cost)
        commutator = None
        if kick_part is not None:
            raise ValueError("heat2d parts commute: no commutator flow to install")
    else:
        flows = tuple(
            FlowMap(label=f"part{i + 1}", apply=_cached_expm_apply(p),
                    cost_weight=flow_cost)
            for i, p in enumerate(problem.parts)
        )
        linear = tuple(_dense_linear_part(p, solve_cost) for p in problem.parts)
        total = problem.total()
        exact_apply = _cached_expm_apply(total)

        def exact(t: float, x: np.ndarray) -> np.ndarray:
            return exact_apply(t, x)

        commutator = None
        if kick_part is not None:
            if kick_part not in ("A", "B"):
                raise ValueError(f"kick_part must be 'A' or 'B', got {kick_part!r}")
            if len(problem.parts) != 2:
                raise ValueError("commutator flow requires a two-part problem")
            f1, f2 = problem.parts
            w = _nested_commutator(f1, f2) if kick_part == "A" else _nested_commutator(f2, f1)
            commutator = FlowMap(label="commutator", apply=_cached_expm_apply(w),
                                 cost_weight=flow_cost)

    return SplitProblem(flows=flows, state_descriptor=descriptor,
                        commutator_flow=commutator, exact_solution=exact,
                        linear_parts=linear)


def with_swapped_parts(problem: SplitProblem) -> SplitProblem:
    """Exchange the roles of the two parts of a split problem.

    Reverses the flow tuple (and the resolvent tuple, when present) so that
    schemes whose coefficient slots expect the parts in the opposite order
    can run unchanged.  The commutator flow is kept as-is: the nested
    commutator of two generators is the same physical flow from either end.
    """
    linear = problem.linear_parts[::-1] if problem.linear_parts is not None else None
    return dataclasses.replace(problem, flows=problem.flows[::-1], linear_parts=linear)


# --------------------------------------------------------------------------
# pendulum
# --------------------------------------------------------------------------

@dataclasses.dataclass
class PendulumState:
    """Pendulum phase point: angle q (radians) and momentum p."""

    q: float
    p: float

    @classmethod
    def from_array(cls, x: np.ndarray) -> "PendulumState":
        return cls(q=float(x[0]), p=float(x[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p])

    @property
    def energy(self) -> float:
        return pendulum_energy(self.as_array())


def pendulum_energy(state: np.ndarray) -> float:
    """Energy H(q, p) = p**2 / 2 + 1 - cos q."""
    q, p = float(state[0]), float(state[1])
    return 0.5 * p * p + 1.0 - math.cos(q)


def _drift_flow(t: float, x: np.ndarray) -> np.ndarray:
    return np.array([x[0] + t * x[1], x[1]])


def _kick_flow(t: float, x: np.ndarray) -> np.ndarray:
    return np.array([x[0], x[1] - t * math.sin(x[0])])


def _modified_kick_flow(t: float, x: np.ndarray) -> np.ndarray:
    # exact flow of the nested commutator of drift and kick: a kick whose
    # force is the gradient of (dV/dq)^2 = sin(q)^2
    return np.array([x[0], x[1] + t * 2.0 * math.sin(x[0]) * math.cos(x[0])])


def _rotation_flow(t: float, x: np.ndarray) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([c * x[0] + s * x[1], -s * x[0] + c * x[1]])


def _perturbation_kick_flow(t: float, x: np.ndarray) -> np.ndarray:
    return np.array([x[0], x[1] + t * (x[0] - math.sin(x[0]))])


def pendulum_problem(split: str = "TV") -> SplitProblem:
    """Pendulum q' = p, p' = -sin q as a two-part split problem.

    ``split="TV"`` separates kinetic and potential energy: part 1 is the
    free drift (q, p) -> (q + t p, p) and part 2 the kick
    (q, p) -> (q, p - t sin q).  The commutator flow (a kick with force
    +2 sin q cos q) is attached for modified-potential schemes whose kick
    occupies part 2; swap the parts for schemes that keep the kick in
    part 1.

    ``split="perturbed"`` separates a harmonic oscillator from the
    remainder: part 1 rotates (q, p) by the angle t and part 2 applies the
    kick p -> p + t (q - sin q).  No exact full solution is attached; use
    ``pendulum_reference`` for accurate reference states.
    """
    descriptor = StateDescriptor(dimension=2, field="real")
    if split == "TV":
        flows = (
            FlowMap(label="drift", apply=_drift_flow, cost_weight=1.0),
            FlowMap(label="kick", apply=_kick_flow, cost_weight=1.0),
        )
        commutator = FlowMap(label="modified-kick", apply=_modified_kick_flow,
                             cost_weight=1.0)
        return SplitProblem(flows=flows, state_descriptor=descriptor,
                            commutator_flow=commutator)
    if split == "perturbed":
        flows = (
            FlowMap(label="rotation", apply=_rotation_flow, cost_weight=1.0),
            FlowMap(label="perturbation-kick", apply=_perturbation_kick_flow,
                    cost_weight=1.0),
        )
        return SplitProblem(flows=flows, state_descriptor=descriptor)
    raise ValueError(f"unknown pendulum split {split!r}")


def pendulum_reference(x0: Sequence[float], t_final: float,
                       h_ref: float) -> np.ndarray:
    """Accurate pendulum state at ``t_final`` via tiny-step symmetric stepping.

    Runs the rotation/kick splitting with the symmetric second-order step
    rotate(h/2) -> kick(h) -> rotate(h/2) at step ``h_ref``; choose
    ``h_ref`` about a thousand times smaller than the step under study.
    """
    n = max(1, int(round(t_final / h_ref)))
    h = t_final / n
    c, s = math.cos(h / 2), math.sin(h / 2)
    q, p = float(x0[0]), float(x0[1])
    for _ in range(n):
        q, p = c * q + s * p, -s * q + c * p
        p = p + h * (q - math.sin(q))
        q, p = c * q + s * p, -s * q + c * p
    return np.array([q, p])


# --------------------------------------------------------------------------
# 1-D Schrodinger on a periodic grid
# --------------------------------------------------------------------------

SCHRODINGER_MODES = ("real_time", "imaginary_time")


@dataclasses.dataclass
class SchrodingerGrid:
    """Periodic grid data for i u_t = (T + V + sigma |u|^2) u.

    ``size`` grid points (a power of two) on [x_min, x_max) with the right
    endpoint identified; ``potential`` holds V at the grid points and
    ``wavefunction`` the complex state.  ``mode`` selects real-time
    (unitary) or imaginary-time (decaying) flows; ``nonlinearity`` is the
    cubic coupling sigma (0 for the linear equation).
    """

    size: int
    x_min: float
    x_max: float
    potential: np.ndarray
    wavefunction: np.ndarray
    mode: str = "real_time"
    nonlinearity: float = 0.0

    def __post_init__(self) -> None:
        if self.size < 2 or self.size & (self.size - 1) != 0:
            raise GridNotPowerOfTwo(f"grid size {self.size} is not a power of two")
        if self.mode not in SCHRODINGER_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.potential = np.asarray(self.potential, dtype=float)
        self.wavefunction = np.asarray(self.wavefunction, dtype=complex)
        if self.potential.shape != (self.size,) or self.wavefunction.shape != (self.size,):
            raise ValueError("potential and wavefunction must have length `size`")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.size

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.size)


def double_well_potential(x: np.ndarray) -> np.ndarray:
    """Double-well potential V(x) = (x**2 - 20)**2 / 80."""
    return (np.asarray(x) ** 2 - 20.0) ** 2 / 80.0


def double_well_grid(size: int = 256, x_min: float = -13.0, x_max: float = 13.0,
                     mode: str = "real_time",
                     nonlinearity: float = 0.0) -> SchrodingerGrid:
    """Double-well grid with the bump initial state cos(x)^2 e^{-(x-1)^2/2}.

    The initial wavefunction is normalized so that sum |u_j|^2 dx = 1.
    """
    dx = (x_max - x_min) / size
    x = x_min + dx * np.arange(size)
    psi = np.cos(x) ** 2 * np.exp(-0.5 * (x - 1.0) ** 2)
    psi = psi / math.sqrt(float(np.sum(np.abs(psi) ** 2)) * dx)
    return SchrodingerGrid(size=size, x_min=x_min, x_max=x_max,
                           potential=double_well_potential(x),
                           wavefunction=psi.astype(complex), mode=mode,
                           nonlinearity=nonlinearity)


def _kinetic_symbol(grid: SchrodingerGrid) -> np.ndarray:
    k = spectral.wavenumbers(grid.size, grid.length)
    return 0.5 * k ** 2


def _potential_gradient(grid: SchrodingerGrid) -> np.ndarray:
    symbol = spectral.derivative_symbol(grid.size, grid.length, 1)
    return np.real(spectral.idft(symbol * spectral.dft(grid.potential.astype(complex))))


def schrodinger_problem(grid: SchrodingerGrid) -> SplitProblem:
    """Split-step flows for the grid's Schrodinger equation.

    Part 1 is the kinetic flow, applied in Fourier space (one forward and
    one inverse transform per application, cost weight 1); part 2 the
    potential kick, a diagonal phase (real time) or decay (imaginary time)
    factor, including the cubic term when ``nonlinearity`` is nonzero -- the
    kick leaves |u_j| unchanged in real time, so the nonlinear exponent may
    be evaluated at the incoming state.  The commutator flow multiplies by
    the diagonal built from the squared spectral gradient of V, oriented for
    schemes whose kick occupies part 2.  With V = 0 and no nonlinearity the
    kinetic flow is the whole solution and is attached as ``exact_solution``.
    """
    kin = _kinetic_symbol(grid)
    V = grid.potential
    sigma = grid.nonlinearity
    grad_sq = _potential_gradient(grid) ** 2
    real_time = grid.mode == "real_time"

    def kinetic(t: float, u: np.ndarray) -> np.ndarray:
        factor = np.exp((-1j * t if real_time else -t) * kin)
        return spectral.idft(factor * spectral.dft(u))

    if sigma == 0.0:
        def kick(t: float, u: np.ndarray) -> np.ndarray:
            return np.exp((-1j * t if real_time else -t) * V) * u
    else:
        def kick(t: float, u: np.ndarray) -> np.ndarray:
            total = V + sigma * np.abs(u) ** 2
            return np.exp((-1j * t if real_time else -t) * total) * u

    def commutator(t: float, u: np.ndarray) -> np.ndarray:
        return np.exp((1j * t if real_time else -t) * grad_sq) * u

    flows = (
        FlowMap(label="kinetic", apply=kinetic, cost_weight=1.0),
        FlowMap(label="potential-kick", apply=kick, cost_weight=0.0),
    )
    exact = kinetic if (sigma == 0.0 and not np.any(V)) else None
    return SplitProblem(flows=flows,
                        state_descriptor=StateDescriptor(dimension=grid.size,
                                                         field="complex"),
                        commutator_flow=FlowMap(label="gradient-kick",
                                                apply=commutator, cost_weight=0.0),
                        exact_solution=exact)


def schrodinger_energy(grid: SchrodingerGrid, u: np.ndarray) -> float:
    """Discrete energy Re <u, (T + V) u> of a grid state."""
    kin = _kinetic_symbol(grid)
    hu = spectral.idft(kin * spectral.dft(u)) + grid.potential * u
    return float(np.real(np.vdot(u, hu)))


def normalized(u: np.ndarray) -> np.ndarray:
    """Unit-norm copy of a state, for observables of decaying evolutions."""
    return u / np.linalg.norm(u)


# --------------------------------------------------------------------------
# 2-D heat equation
# --------------------------------------------------------------------------

def heat2d_problem(mesh_size: int,
                   source: Optional[Callable[[float], np.ndarray]] = None) -> MatrixProblem:
    """Dimensional splitting of the 2-D heat equation on the unit square.

    ``mesh_size`` interior points per dimension with homogeneous Dirichlet
    boundaries give the second-difference matrix B (rows (1, -2, 1) scaled
    by 1/dx^2, dx = 1/(mesh_size+1)) and the commuting parts
    F1 = I (x) B and F2 = B (x) I acting on row-major supervectors.
    ``source`` is an optional map t -> s(t) (length mesh_size**2) consumed
    by ``heat2d_source_step``.
    """
    if mesh_size < 2:
        raise ValueError("mesh_size must be at least 2")
    B = _second_difference(mesh_size)
    eye = np.eye(mesh_size)
    parts = (np.kron(eye, B), np.kron(B, eye))
    return MatrixProblem(parts, mesh_size ** 2, "heat2d", mesh_size=mesh_size,
                         source=source)


def heat2d_source_step(problem: MatrixProblem, h: float, state: np.ndarray,
                       t: float = 0.0) -> np.ndarray:
    """One symmetric step of the heat problem with its inhomogeneity.

    Composes half-steps of explicit/implicit Euler maps for the source and
    the two diffusion parts into the palindromic second-order update

        u+ = (h/2) s(t+h)
             + (I - h/2 F2)^{-1} (I + h/2 F1) (I - h/2 F1)^{-1} (I + h/2 F2)
               (u + (h/2) s(t))

    evaluated with tridiagonal solves on the reshaped mesh.
    """
    if problem.structure != "heat2d":
        raise ValueError("heat2d_source_step requires a heat2d problem")
    if problem.source is None:
        raise ValueError("problem has no source term")
    m = problem.mesh_size
    B = _second_difference(m)
    u = np.asarray(state, dtype=float) + 0.5 * h * np.asarray(problem.source(t))
    U = u.reshape(m, m)
    U = U + 0.5 * h * (B @ U)
    U = _tridiagonal_solve(B, 0.5 * h, U.T).T
    U = U + 0.5 * h * (U @ B)
    U = _tridiagonal_solve(B, 0.5 * h, U)
    return U.ravel() + 0.5 * h * np.asarray(problem.source(t + h))


# --------------------------------------------------------------------------
# exact quadratic splitting
# --------------------------------------------------------------------------

def quadratic_split_coefficients(h: float) -> tuple:
    """Durations (f, g) that make kick(f) drift(g) kick(f) exact for |h| < pi.

    f(h) = (1 - cos h)/sin h = tan(h/2) and g(h) = sin h.
    """
    if abs(h) >= math.pi:
        raise DomainError(f"|h| must be below pi, got {h}")
    return math.tan(0.5 * h), math.sin(h)


def exact_quadratic_split_check(h: float) -> float:
    """Residual of the exact two-part factorization of the oscillator flow.

    On the 2x2 phase-space representation, compares the rotation through
    the angle h with the product kick(f) drift(g) kick(f) where (f, g) come
    from ``quadratic_split_coefficients``; the result is the matrix 2-norm
    of the difference and should be at round-off level throughout |h| < pi.
    """
    f, g = quadratic_split_coefficients(h)
    kick = np.array([[1.0, 0.0], [-f, 1.0]])
    drift = np.array([[1.0, g], [0.0, 1.0]])
    rotation = np.array([[math.cos(h), math.sin(h)],
                         [-math.sin(h), math.cos(h)]])
    return float(np.linalg.norm(kick @ drift @ kick - rotation, 2))
