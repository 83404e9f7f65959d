"""Executable light-cone locality checks.

A dynamics is relativistically local when the data inside a ball R at
t=0 fixes everything inside the contracting cone over R, equivalently
when a disturbance confined to a set S at t=0 influences nothing
outside the expanding cone over S.  ``twin_run_divergence`` runs both
checks at once: it evolves two states that agree on R (second-order
solvers must agree on values and time derivatives, first-order solvers
on values alone), differences them, and reports

    - the sup/L2 difference inside the contracting cone over R, shrunk
      by a guard band of whole sites, and
    - the sup/L2 difference outside the expanding cone over the initial
      disagreement support, dilated by the same guard band,

per step, plus the unguarded numbers for diagnostics.

``frustum_energy_check`` reproduces the energy bookkeeping that proves
the cone statement for wave dynamics: the difference field's energy
over the shrinking slice can never exceed its energy over the base,
because the flux through the cone's sloped edge is a sum of squares.
``dirac_frustum_check`` is the same statement with |psi_d|^2 as the
density.  On a lattice both inequalities hold up to a discretization
slack that is calibrated from coarse refinement levels rather than
hand-tuned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dirac as dirac_mod
from . import waves as waves_mod
from .errors import ConfigurationError, PreconditionError
from .lattice import (GridSpec, Region, distance_to_mask, masked_sum,
                      region_mask)


def c2_bump(x: np.ndarray, center: float, halfwidth: float) -> np.ndarray:
    """Compactly supported C^2 profile (1-u^2)^3 on |u| < 1."""
    u = (x - center) / halfwidth
    out = np.zeros_like(x)
    inside = np.abs(u) < 1
    out[inside] = (1 - u[inside] ** 2) ** 3
    return out


class WaveTwinSolver:
    """Adapter presenting wave dynamics to the twin-run machinery."""

    order = "second"
    cone_metric = "manhattan"

    def __init__(self, src=None):
        self.src = src or waves_mod.SourceSpec.zero()

    def step(self, state):
        return waves_mod.step_leapfrog(state, self.src)

    @staticmethod
    def dt(state):
        return state.dt

    @staticmethod
    def cauchy_arrays(state):
        return (state.u.values, state.v.values)

    @staticmethod
    def value_diff(a, b):
        """Per-site magnitude of the value (u) difference."""
        return np.abs(b.u.values - a.u.values).max(axis=0)


class DiracTwinSolver:
    """Adapter presenting the local Dirac split-step to the twin machinery."""

    order = "first"
    cone_metric = "chebyshev"

    def step(self, state):
        return dirac_mod.step_fd(state, state.grid.spacing)

    @staticmethod
    def dt(state):
        return state.grid.spacing

    @staticmethod
    def cauchy_arrays(state):
        return (state.psi.values,)

    @staticmethod
    def value_diff(a, b):
        return np.sqrt((np.abs(b.psi.values - a.psi.values) ** 2).sum(axis=0))


@dataclass
class DivergenceReport:
    """Per-time twin-run difference statistics (sup is the headline norm)."""

    times: list
    max_inside_contracting: list
    max_outside_expanding: list
    l2_inside_contracting: list
    l2_outside_expanding: list
    raw_max_inside_contracting: list
    raw_max_outside_expanding: list
    guard_band: int
    norm: str = "sup"

    def worst_inside(self) -> float:
        return max(self.max_inside_contracting, default=0.0)

    def worst_outside(self) -> float:
        return max(self.max_outside_expanding, default=0.0)

    def rows(self):
        for i, t in enumerate(self.times):
            yield t, "max_inside_contracting", self.max_inside_contracting[i]
            yield t, "max_outside_expanding", self.max_outside_expanding[i]
            yield t, "l2_inside_contracting", self.l2_inside_contracting[i]
            yield t, "l2_outside_expanding", self.l2_outside_expanding[i]
            yield t, "raw_max_inside_contracting", self.raw_max_inside_contracting[i]
            yield t, "raw_max_outside_expanding", self.raw_max_outside_expanding[i]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("t,stat,value\n")
            for t, stat, value in self.rows():
                handle.write(f"{t!r},{stat},{value!r}\n")

    def to_dict(self) -> dict:
        return {"guard_band": self.guard_band, "norm": self.norm,
                "times": list(self.times),
                "max_inside_contracting": list(self.max_inside_contracting),
                "max_outside_expanding": list(self.max_outside_expanding),
                "l2_inside_contracting": list(self.l2_inside_contracting),
                "l2_outside_expanding": list(self.l2_outside_expanding),
                "raw_max_inside_contracting": list(self.raw_max_inside_contracting),
                "raw_max_outside_expanding": list(self.raw_max_outside_expanding)}

    def write_json(self, path) -> None:
        import json
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")


def _initial_disagreement(solver, state_a, state_b) -> np.ndarray:
    support = np.zeros(state_a.grid.shape, dtype=bool)
    for arr_a, arr_b in zip(solver.cauchy_arrays(state_a),
                            solver.cauchy_arrays(state_b)):
        support |= np.any(arr_a != arr_b, axis=0)
    return support


def twin_run_divergence(solver, state_a, state_b, base: Region, horizon: int,
                        guard_band: int = 2, speed: float = 1.0) -> DivergenceReport:
    """Evolve two initially-R-agreeing states and locate their difference.

    Raises PreconditionError when the states disagree inside the base
    ball at t=0 (for second-order solvers this covers the time
    derivatives too).  Stops early if the contracting cone vanishes.
    """
    grid = state_a.grid
    if grid != state_b.grid:
        raise ConfigurationError("twin states live on different grids")
    base_mask = region_mask(grid, base)
    support = _initial_disagreement(solver, state_a, state_b)
    offending = np.argwhere(support & base_mask)
    if len(offending):
        sites = [tuple(int(i) for i in s) for s in offending[:8]]
        raise PreconditionError(
            f"twin states disagree inside the base region at t=0 on sites "
            f"{sites}{'...' if len(offending) > 8 else ''}")

    dist_center = grid.distance_to_point(base.center)
    dist_support = distance_to_mask(grid, support)
    guard = guard_band * grid.spacing
    dt = solver.dt(state_a)
    vol = grid.cell_volume

    report = DivergenceReport(times=[], max_inside_contracting=[],
                              max_outside_expanding=[],
                              l2_inside_contracting=[],
                              l2_outside_expanding=[],
                              raw_max_inside_contracting=[],
                              raw_max_outside_expanding=[],
                              guard_band=guard_band)

    def sup_l2(diff, mask):
        if not mask.any():
            return 0.0, 0.0
        vals = diff[mask]
        return float(vals.max()), float(np.sqrt((vals ** 2).sum() * vol))

    a, b = state_a, state_b
    for k in range(1, horizon + 1):
        a = solver.step(a)
        b = solver.step(b)
        t = k * dt
        radius_t = base.radius - speed * t
        if radius_t <= 0:
            break
        diff = solver.value_diff(a, b)
        sup_in, l2_in = sup_l2(diff, dist_center <= radius_t - guard)
        sup_out, l2_out = sup_l2(diff, dist_support > speed * t + guard)
        raw_in, _ = sup_l2(diff, dist_center <= radius_t)
        raw_out, _ = sup_l2(diff, dist_support > speed * t)
        report.times.append(t)
        report.max_inside_contracting.append(sup_in)
        report.max_outside_expanding.append(sup_out)
        report.l2_inside_contracting.append(l2_in)
        report.l2_outside_expanding.append(l2_out)
        report.raw_max_inside_contracting.append(raw_in)
        report.raw_max_outside_expanding.append(raw_out)
    return report


@dataclass
class DiffSnapshot:
    """One time level of a twin-run difference field."""

    grid: GridSpec
    t: float
    u: np.ndarray
    v: np.ndarray | None = None


def wave_difference_history(solver: WaveTwinSolver, state_a, state_b,
                            steps: int) -> list:
    """Evolve a wave twin pair and collect difference snapshots."""
    history = [DiffSnapshot(state_a.grid, state_a.t,
                            state_b.u.values - state_a.u.values,
                            state_b.v.values - state_a.v.values)]
    a, b = state_a, state_b
    for _ in range(steps):
        a = solver.step(a)
        b = solver.step(b)
        history.append(DiffSnapshot(a.grid, a.t,
                                    b.u.values - a.u.values,
                                    b.v.values - a.v.values))
    return history


def dirac_difference_history(state_a, state_b, steps: int) -> list:
    solver = DiracTwinSolver()
    history = [DiffSnapshot(state_a.grid, state_a.t,
                            state_b.psi.values - state_a.psi.values)]
    a, b = state_a, state_b
    for _ in range(steps):
        a = solver.step(a)
        b = solver.step(b)
        history.append(DiffSnapshot(a.grid, a.t,
                                    b.psi.values - a.psi.values))
    return history


@dataclass
class EnergyReport:
    """Base-versus-slice energies of a difference field over a cone."""

    e_base: float
    times: list
    e_top: list
    slack: list = field(default_factory=list)

    def __post_init__(self):
        if not self.slack:
            self.slack = [e - self.e_base for e in self.e_top]

    def worst_slack(self) -> float:
        return max(self.slack, default=0.0)

    def rows(self):
        yield 0.0, "e_base", self.e_base
        for i, t in enumerate(self.times):
            yield t, "e_top", self.e_top[i]
            yield t, "slack", self.slack[i]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("t,stat,value\n")
            for t, stat, value in self.rows():
                handle.write(f"{t!r},{stat},{value!r}\n")

    def to_dict(self) -> dict:
        return {"e_base": self.e_base, "times": list(self.times),
                "e_top": list(self.e_top), "slack": list(self.slack)}

    def write_json(self, path) -> None:
        import json
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")


def _slice_energy(snapshot: DiffSnapshot, density: np.ndarray, base: Region,
                  t: float, speed: float) -> float | None:
    radius = base.radius - speed * t
    if radius <= 0:
        return None
    mask = snapshot.grid.distance_to_point(base.center) <= radius
    return masked_sum(snapshot.grid, density, mask)


def frustum_energy_check(diff_history: list, base: Region, mass: float,
                         speed: float = 1.0) -> EnergyReport:
    """Energy of a homogeneous difference solution over shrinking slices.

    e_base integrates (1/2)[v_d^2 + |grad u_d|^2 + m^2 u_d^2] over R at
    the first snapshot; e_top(t) integrates the same density over the
    contracted slice.  In the continuum e_top <= e_base always.
    """
    first = diff_history[0]
    densities = [waves_mod.wave_energy_density(s.u, s.v, s.grid, mass)
                 for s in diff_history]
    e_base = masked_sum(first.grid, densities[0],
                        region_mask(first.grid, base))
    times, e_top = [], []
    for snap, dens in zip(diff_history[1:], densities[1:]):
        e = _slice_energy(snap, dens, base, snap.t - first.t, speed)
        if e is None:
            break
        times.append(snap.t - first.t)
        e_top.append(e)
    return EnergyReport(e_base=e_base, times=times, e_top=e_top)


def dirac_frustum_check(diff_history: list, base: Region,
                        speed: float = 1.0) -> EnergyReport:
    """Same bookkeeping with the probability density |psi_d|^2."""
    first = diff_history[0]
    densities = [(np.abs(s.u) ** 2).sum(axis=0) for s in diff_history]
    e_base = masked_sum(first.grid, densities[0],
                        region_mask(first.grid, base))
    times, e_top = [], []
    for snap, dens in zip(diff_history[1:], densities[1:]):
        e = _slice_energy(snap, dens, base, snap.t - first.t, speed)
        if e is None:
            break
        times.append(snap.t - first.t)
        e_top.append(e)
    return EnergyReport(e_base=e_base, times=times, e_top=e_top)


def calibrate_tolerance(spacings, values, safety: float = 2.0,
                        floor: float = 1e-13):
    """Fit value = C*h^p through the two coarsest levels.

    Returns (C, p, tol) with tol = safety * C * h_finest^p, floored to
    keep degenerate all-zero calibrations meaningful.  The finest level
    is deliberately excluded from the fit so the bound is predictive.
    """
    if len(spacings) < 3 or len(values) != len(spacings):
        raise ConfigurationError("calibration needs >= 3 refinement levels")
    order = np.argsort(spacings)[::-1]  # coarsest first
    h = np.asarray(spacings, dtype=float)[order]
    v = np.maximum(np.asarray(values, dtype=float)[order], floor)
    p = np.log(v[0] / v[1]) / np.log(h[0] / h[1])
    c = v[0] / h[0] ** p
    tol = max(safety * c * h[-1] ** p, floor)
    return float(c), float(p), float(tol)


def fitted_order(spacings, values, floor: float = 1e-16) -> float:
    """Least-squares slope of log(value) against log(h)."""
    h = np.asarray(spacings, dtype=float)
    v = np.maximum(np.asarray(values, dtype=float), floor)
    return float(np.polyfit(np.log(h), np.log(v), 1)[0])


@dataclass
class NonseparabilityReport:
    """Two-qubit demonstration that local states underdetermine the whole."""

    singlet_reduced_a_defect: float
    singlet_reduced_b_defect: float
    triplet_reduced_a_defect: float
    reduced_equality_defect: float
    singlet_triplet_overlap: float
    flip_overlap: float
    flip_reduced_a_change: float
    flip_reduced_b_change: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def _reduced_a(psi: np.ndarray) -> np.ndarray:
    m = psi.reshape(2, 2)
    return m @ m.conj().T


def _reduced_b(psi: np.ndarray) -> np.ndarray:
    m = psi.reshape(2, 2)
    return m.T @ m.conj()


def nonseparability_demo() -> NonseparabilityReport:
    """Singlet, triplet, and locally flipped singlet, reduced and compared.

    Basis order |up,up>, |up,down>, |down,up>, |down,down>.  The flip is
    the local unitary X on subsystem A, which exchanges perfect
    anti-correlation for perfect correlation without touching either
    reduced state.
    """
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    singlet = np.array([0, 1, -1, 0], dtype=complex) * inv_sqrt2
    triplet = np.array([0, 1, 1, 0], dtype=complex) * inv_sqrt2
    flip_a = np.kron(np.array([[0, 1], [1, 0]], dtype=complex), np.eye(2))
    flipped = flip_a @ singlet

    half_identity = 0.5 * np.eye(2)
    rho_a_singlet = _reduced_a(singlet)
    rho_b_singlet = _reduced_b(singlet)
    rho_a_triplet = _reduced_a(triplet)

    return NonseparabilityReport(
        singlet_reduced_a_defect=float(np.max(np.abs(rho_a_singlet - half_identity))),
        singlet_reduced_b_defect=float(np.max(np.abs(rho_b_singlet - half_identity))),
        triplet_reduced_a_defect=float(np.max(np.abs(rho_a_triplet - half_identity))),
        reduced_equality_defect=float(np.max(np.abs(rho_a_singlet - rho_a_triplet))),
        singlet_triplet_overlap=float(np.abs(np.vdot(singlet, triplet))),
        flip_overlap=float(np.abs(np.vdot(singlet, flipped))),
        flip_reduced_a_change=float(np.max(np.abs(_reduced_a(flipped) - rho_a_singlet))),
        flip_reduced_b_change=float(np.max(np.abs(_reduced_b(flipped) - rho_b_singlet))))
