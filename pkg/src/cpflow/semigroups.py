"""Intertwining semigroups on K tensor L2(0, infinity).

U_z(t) is realized by explicit transport stepping: per step the cell
contents shift right by one cell, the boundary cell is fed with z times
the shift image of the previous state, and the whole state is damped by
exp(-|z|^2 h / 2).  The time step is locked to the grid spacing, so the
translation part is exact and all discretization error lives in the
boundary feed and the damping.

The shift S0 onto K is an isometry that no finite truncation of K can
represent faithfully, so the boundary feed is kept symbolic: fed cells
never share a grid position with transported cells (the feed enters at
cell zero and moves right in lockstep), and every inner product that
involves fed cells reduces, via (S0 f, S0 g) = (f, g), to the pairing of
the two states one step earlier.  Pairings are therefore computed by a
joint recursion over the step history instead of from materialized
boundary vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .halfline import Grid


class InvalidExperimentError(ValueError):
    """An experiment violates its stated preconditions (e.g. outflow)."""


class IncompatibleStatesError(ValueError):
    """Two flow states cannot be combined (grid, label or step mismatch)."""


def covariance(w: complex, z: complex) -> complex:
    """The covariance exponent c(w, z) with U_w(t)* U_z(t) = exp(c(w,z) t).

    c(w, z) = (2 conj(w) z - |w|^2 - |z|^2) / 2; c(z, z) = 0.
    """
    w = complex(w)
    z = complex(z)
    return 0.5 * (2.0 * np.conj(w) * z - abs(w) ** 2 - abs(z) ** 2)


@dataclass(frozen=True)
class UzParams:
    """Stepping parameters for U_z on a given grid."""

    z: complex
    spacing: float

    @property
    def step_damping(self) -> float:
        return float(np.exp(-0.5 * abs(self.z) ** 2 * self.spacing))


@dataclass(frozen=True)
class FlowState:
    """A function in K tensor L2(0, L) sampled on grid cells.

    cells[j] is the K-coordinate vector carried by cell j (the transported
    channel).  source_cells keeps the initial data so pairings can replay
    the feed recursion; steps counts applied transport steps; fed cells
    are implicit (cells [0, steps) belong to the boundary feed and carry
    no explicit coordinates).
    """

    grid: Grid
    cells: np.ndarray
    z: complex = 0.0
    steps: int = 0
    outflow_mass: float = 0.0
    source_cells: np.ndarray | None = None

    def __post_init__(self):
        cells = np.atleast_2d(np.asarray(self.cells, dtype=complex))
        if cells.shape[0] != self.grid.points:
            cells = cells.T
        if cells.shape[0] != self.grid.points:
            raise InvalidExperimentError("cell array does not match the grid")
        object.__setattr__(self, "cells", cells)
        src = self.source_cells
        object.__setattr__(self, "source_cells",
                           cells.copy() if src is None else src)

    @property
    def dim_k(self) -> int:
        return self.cells.shape[1]

    def norm(self) -> float:
        return float(np.sqrt(max(flow_inner(self, self).real, 0.0)))


def bump_state(grid: Grid, center: float, width: float,
               dim_k: int = 1) -> FlowState:
    """A normalized Gaussian bump in the first K-coordinate channel."""
    x = grid.midpoints
    profile = np.exp(-0.5 * ((x - center) / width) ** 2)
    profile /= np.sqrt(grid.spacing) * np.linalg.norm(profile)
    cells = np.zeros((grid.points, dim_k), dtype=complex)
    cells[:, 0] = profile
    return FlowState(grid, cells)


@dataclass(frozen=True)
class EvolveResult:
    state: FlowState
    snap_distance: float


def evolve(state: FlowState, z: complex, t: float) -> EvolveResult:
    """Apply U_z(t) by whole-cell transport steps.

    t is snapped to the nearest multiple of the grid spacing; the snap
    distance is reported.  Per step: shift right, feed the boundary cell
    (symbolically) with z times the shifted previous state, damp by
    exp(-|z|^2 h / 2).  Mass pushed past the right edge is discarded and
    accumulated in outflow_mass.
    """
    if t < 0:
        raise InvalidExperimentError("evolution time must be nonnegative")
    z = complex(z)
    if state.steps > 0 and z != state.z:
        raise IncompatibleStatesError(
            "a state carrying feed history can only continue under the "
            "same unit label")
    h = state.grid.spacing
    n_steps = int(round(t / h))
    snap = abs(t - n_steps * h)
    damping = UzParams(z, h).step_damping
    cells = state.cells.copy()
    outflow = state.outflow_mass
    for _ in range(n_steps):
        outflow += h * float(np.sum(np.abs(cells[-1]) ** 2))
        cells[1:] = cells[:-1]
        cells[0] = 0.0
        cells *= damping
    return EvolveResult(
        FlowState(state.grid, cells, z, state.steps + n_steps,
                  outflow, state.source_cells),
        snap,
    )


def flow_inner(f: FlowState, g: FlowState) -> complex:
    """(f, g) including the symbolic boundary-feed contributions.

    Both states must live on the same grid and have taken the same number
    of steps.  The pairing is replayed from the sources: with
    I_k = (U_w(kh) f0, U_z(kh) g0), one transport step gives

        I_k = d_w d_z [ (I_{k-1} - outflow_k) + h conj(w) z I_{k-1} ]

    because fed cells pair through (S0 a, S0 b) = (a, b).
    """
    if f.grid != g.grid:
        raise IncompatibleStatesError("grid mismatch")
    if f.steps != g.steps:
        raise IncompatibleStatesError("step-count mismatch")
    h = f.grid.spacing
    if f.steps == 0:
        return h * complex(np.vdot(f.cells, g.cells))
    a = f.source_cells.copy()
    b = g.source_cells.copy()
    d = UzParams(f.z, h).step_damping * UzParams(g.z, h).step_damping
    feed = h * np.conj(complex(f.z)) * complex(g.z)
    value = h * complex(np.vdot(a, b))
    for _ in range(f.steps):
        ov = h * complex(np.vdot(a[-1], b[-1]))
        a[1:] = a[:-1]
        a[0] = 0.0
        b[1:] = b[:-1]
        b[0] = 0.0
        value = d * ((value - ov) + feed * value)
    return value


def covariance_residual(w: complex, z: complex, t: float,
                        f: FlowState, g: FlowState,
                        outflow_tolerance: float = 1e-8) -> float:
    """|(U_w(t) f, U_z(t) g) - exp(c(w,z) t) (f, g)|, expected O(h)."""
    base = flow_inner(f, g)
    ef = evolve(f, w, t).state
    eg = evolve(g, z, t).state
    if max(ef.outflow_mass, eg.outflow_mass) > outflow_tolerance:
        raise InvalidExperimentError(
            "outflow mass %.3e exceeds the experiment tolerance; enlarge "
            "the grid" % max(ef.outflow_mass, eg.outflow_mass))
    steps = ef.steps - f.steps
    t_snapped = steps * f.grid.spacing
    expected = np.exp(covariance(w, z) * t_snapped) * base
    return float(abs(flow_inner(ef, eg) - expected))


def semigroup_residual(z: complex, t: float, s: float, f: FlowState) -> float:
    """Norm distance between evolving by t+s and evolving by s then t.

    Zero by construction: both paths run the identical per-step loop.
    Kept as a regression guard on the stepper.
    """
    one_shot = evolve(f, z, t + s).state
    two_step = evolve(evolve(f, z, s).state, z, t).state
    if one_shot.steps != two_step.steps:
        return float("inf")
    h = f.grid.spacing
    diff = one_shot.cells - two_step.cells
    return float(np.sqrt(h) * np.linalg.norm(diff))


def isometry_residual(z: complex, t: float, f: FlowState) -> float:
    """| ||U_z(t) f|| - ||f|| |, the O(h) boundary-feed discretization error.

    c(z, z) = 0 makes U_z(t) an isometry; in the stepper the damping and
    the boundary feed cancel only to first order in the step size, so this
    residual measures exactly the boundary-feed discretization and must
    shrink linearly under grid refinement.
    """
    ef = evolve(f, z, t).state
    return float(abs(ef.norm() - f.norm()))


def analytic_gram(zs, t: float) -> np.ndarray:
    """The matrix [exp(c(z_i, z_j) t)], a Gram matrix of evolved units."""
    zs = [complex(v) for v in zs]
    k = len(zs)
    out = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            out[i, j] = np.exp(covariance(zs[i], zs[j]) * t)
    return out


def numeric_gram(zs, t: float, f: FlowState) -> np.ndarray:
    """Gram matrix of the evolved states U_{z_i}(t) f from the stepper."""
    states = [evolve(f, z, t).state for z in zs]
    k = len(states)
    out = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            out[i, j] = flow_inner(states[i], states[j])
    return out


def gram_min_eig(gram: np.ndarray) -> float:
    herm = 0.5 * (gram + gram.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


def refinement_orders(residuals) -> list[float]:
    """log2 ratios of successive residuals from a halving-h refinement."""
    residuals = [float(r) for r in residuals]
    orders = []
    for a, b in zip(residuals, residuals[1:]):
        if b == 0.0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log2(a / b)))
    return orders
