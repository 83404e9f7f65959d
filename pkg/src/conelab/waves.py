"""Second-order hyperbolic evolution for potentials and scalar fields.

Solves (d^2/dt^2 - laplacian + m^2) u = s componentwise with a
synchronized leapfrog (velocity-Verlet) update.  Two configurations are
used throughout the suite:

    - 4 components (phi, Ax, Ay, Az): Lorenz-gauge electromagnetic
      potentials with Gaussian-unit source couplings s = (4*pi*rho,
      4*pi*J), mass 0;
    - 1 component: a Klein-Gordon field of mass m >= 0, source-free.

The spatial stencil is the compact second difference, so one step moves
information at most one site per axis: the numerical domain of
dependence of u after n steps is exactly the n-site dilation of its
initial data, which is what makes the cone checks downstream bit-exact.
The synchronized velocity is the central difference of consecutive u
levels and therefore reaches one site further (n+1 after n steps).

c = 1 units; the CFL number is dt/h in 1-D and dt*sqrt(3)/h in 3-D.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import (ConfigurationError, InstabilityError, ShapeMismatchError)
from .lattice import Field, GridSpec

FOUR_PI = 4.0 * np.pi


def laplacian(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Compact second-difference laplacian, applied over trailing axes."""
    h2 = grid.spacing ** 2
    out = np.zeros_like(values)
    for axis in range(grid.dim):
        ax = values.ndim - grid.dim + axis
        out += np.roll(values, 1, axis=ax) + np.roll(values, -1, axis=ax)
    out -= 2 * grid.dim * values
    return out / h2


def gradient(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Centered first differences of a scalar array; shape (dim,) + shape."""
    h = grid.spacing
    return np.stack([
        (np.roll(values, -1, axis=a) - np.roll(values, 1, axis=a)) / (2 * h)
        for a in range(grid.dim)])


def divergence(grid: GridSpec, vec: np.ndarray) -> np.ndarray:
    """Centered divergence of a (dim,)+shape vector array."""
    h = grid.spacing
    out = np.zeros(vec.shape[1:])
    for a in range(grid.dim):
        out += (np.roll(vec[a], -1, axis=a) - np.roll(vec[a], 1, axis=a)) / (2 * h)
    return out


@dataclass(frozen=True)
class WaveState:
    """Cauchy data (u, du/dt) for every component at a single time."""

    grid: GridSpec
    u: Field
    v: Field
    t: float
    mass: float = 0.0
    cfl: float = 1.0

    def __post_init__(self):
        if self.u.grid != self.grid or self.v.grid != self.grid:
            raise ShapeMismatchError("u/v fields live on a different grid")
        if self.u.values.shape != self.v.values.shape:
            raise ShapeMismatchError("u and v must have identical shapes")
        if self.t < 0:
            raise ConfigurationError("time must be >= 0")
        if self.mass < 0:
            raise ConfigurationError("mass must be >= 0")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError(f"cfl must be in (0, 1], got {self.cfl}")

    @property
    def components(self) -> int:
        return self.u.components

    @property
    def dt(self) -> float:
        if self.grid.dim == 1:
            return self.cfl * self.grid.spacing
        return self.cfl * self.grid.spacing / np.sqrt(3.0)

    @classmethod
    def from_arrays(cls, grid: GridSpec, u, v, t=0.0, mass=0.0, cfl=1.0) -> "WaveState":
        return cls(grid=grid, u=Field.from_values(grid, u),
                   v=Field.from_values(grid, v), t=float(t),
                   mass=float(mass), cfl=float(cfl))


@dataclass(frozen=True)
class SourceSpec:
    """Charge/current densities as callables (grid, t) -> sample arrays.

    rho returns shape grid.shape, current returns (3,) + grid.shape.
    Analytic callables keep the continuity pair exact; from_arrays wraps
    precomputed snapshots for file-driven sources.
    """

    rho: Callable
    current: Callable

    @classmethod
    def zero(cls) -> "SourceSpec":
        return cls(rho=lambda grid, t: np.zeros(grid.shape),
                   current=lambda grid, t: np.zeros((3,) + grid.shape))

    @classmethod
    def from_arrays(cls, times, rho_frames, current_frames) -> "SourceSpec":
        times = np.asarray(times, dtype=float)
        rho_frames = np.asarray(rho_frames)
        current_frames = np.asarray(current_frames)
        if len(times) != len(rho_frames) or len(times) != len(current_frames):
            raise ConfigurationError("source frame counts do not match times")

        def pick(t):
            i = int(np.argmin(np.abs(times - t)))
            if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
                raise ConfigurationError(
                    f"no stored source frame at t={t} (nearest {times[i]})")
            return i

        return cls(rho=lambda grid, t: rho_frames[pick(t)],
                   current=lambda grid, t: current_frames[pick(t)])


def _source_term(state: WaveState, src: SourceSpec, t: float) -> np.ndarray:
    """Gaussian-unit couplings: 4*pi*rho drives phi, 4*pi*J drives A."""
    if state.components == 4:
        rho = np.asarray(src.rho(state.grid, t))
        cur = np.asarray(src.current(state.grid, t))
        if rho.shape != state.grid.shape or cur.shape != (3,) + state.grid.shape:
            raise ShapeMismatchError("source sample shapes do not match the grid")
        return FOUR_PI * np.concatenate([rho[np.newaxis], cur], axis=0)
    if state.components == 1:
        rho = np.asarray(src.rho(state.grid, t))
        return FOUR_PI * rho[np.newaxis]
    raise ShapeMismatchError(
        f"sourced evolution supports 1 or 4 components, got {state.components}")


def _sponge_profile(grid: GridSpec) -> np.ndarray:
    """Damping rate per site for absorbing-pad boundaries (zero in the bulk)."""
    width = max(8, grid.extent // 16)
    ramp = np.zeros(grid.extent)
    edge = np.arange(width)[::-1] + 1
    strength = 2.0 / (width * grid.spacing)
    ramp[:width] = strength * (edge / width) ** 2
    ramp[-width:] = strength * (edge[::-1] / width) ** 2
    out = np.zeros(grid.shape)
    for axis in range(grid.dim):
        out = np.maximum(out, ramp.reshape(
            [-1 if a == axis else 1 for a in range(grid.dim)]))
    return out


def step_leapfrog(state: WaveState, src: SourceSpec | None = None) -> WaveState:
    """Advance one dt with the synchronized leapfrog update.

    u' = u + dt*v + dt^2/2 * a(u, t)
    v' = v + dt/2 * (a(u, t) + a(u', t + dt)),   a = lap(u) - m^2 u + s.
    """
    src = src or SourceSpec.zero()
    grid, dt = state.grid, state.dt
    u, v = state.u.values, state.v.values
    m2 = state.mass ** 2

    with np.errstate(over="ignore", invalid="ignore"):
        a0 = laplacian(grid, u) - m2 * u + _source_term(state, src, state.t)
        u_new = u + dt * v + (0.5 * dt * dt) * a0
        a1 = (laplacian(grid, u_new) - m2 * u_new
              + _source_term(state, src, state.t + dt))
        v_new = v + (0.5 * dt) * (a0 + a1)

    if grid.boundary == "absorbing-pad":
        damp = np.exp(-dt * _sponge_profile(grid))
        u_new = u_new * damp
        v_new = v_new * damp

    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise InstabilityError(
            "NaN/Inf during leapfrog update",
            step=int(round(state.t / dt)) + 1)
    return replace(state, u=Field(grid, u_new), v=Field(grid, v_new),
                   t=state.t + dt)


def em_fields(state: WaveState) -> tuple:
    """Electric and magnetic fields from 4-component potentials.

    E = -grad(phi) - dA/dt and B = curl(A), centered differences;
    derivatives along absent axes (dim < 3) vanish.
    """
    if state.components != 4:
        raise ShapeMismatchError(
            f"em_fields needs the 4-component potential state, got "
            f"{state.components} component(s)")
    grid = state.grid
    phi = state.u.values[0]
    a_vec = state.u.values[1:4]
    da_dt = state.v.values[1:4]

    grad_phi = np.zeros((3,) + grid.shape)
    grad_phi[:grid.dim] = gradient(grid, phi)
    e_field = -grad_phi - da_dt

    def d_axis(values, axis):
        if axis >= grid.dim:
            return np.zeros(grid.shape)
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) \
            / (2 * grid.spacing)

    b_field = np.stack([
        d_axis(a_vec[2], 1) - d_axis(a_vec[1], 2),
        d_axis(a_vec[0], 2) - d_axis(a_vec[2], 0),
        d_axis(a_vec[1], 0) - d_axis(a_vec[0], 1)])
    return Field(grid, e_field), Field(grid, b_field)


def gauge_transform(state: WaveState, lam: WaveState) -> WaveState:
    """Apply the residual gauge freedom generated by a wave-equation solution.

    phi -> phi - dLam/dt, A -> A + grad(Lam); the velocities transform
    with d^2Lam/dt^2 realized as div(grad(Lam)) so that the discrete
    Lorenz residual is preserved identically.
    """
    if state.components != 4 or lam.components != 1:
        raise ShapeMismatchError("gauge_transform needs a 4-component state "
                                 "and a 1-component generator")
    if state.grid != lam.grid:
        raise ShapeMismatchError("state and gauge generator grids differ")
    grid = state.grid
    lam_u, lam_v = lam.u.values[0], lam.v.values[0]

    u = state.u.values.copy()
    v = state.v.values.copy()
    u[0] -= lam_v
    u[1:1 + grid.dim] += gradient(grid, lam_u)
    v[0] -= divergence(grid, gradient(grid, lam_u))
    v[1:1 + grid.dim] += gradient(grid, lam_v)
    return replace(state, u=Field(grid, u), v=Field(grid, v))


def lorenz_residual(state: WaveState) -> Field:
    """div(A) + dphi/dt sampled per site (zero in the Lorenz gauge)."""
    if state.components != 4:
        raise ShapeMismatchError("lorenz_residual needs a 4-component state")
    grid = state.grid
    res = divergence(grid, state.u.values[1:1 + grid.dim]) + state.v.values[0]
    return Field.from_values(grid, res)


def continuity_residual(src: SourceSpec, grid: GridSpec, t: float,
                        dt: float) -> Field:
    """d(rho)/dt + div(J) with centered differences; zero for conserved charge."""
    if dt <= 0:
        raise ConfigurationError("dt must be > 0")
    drho = (np.asarray(src.rho(grid, t + dt)) - np.asarray(src.rho(grid, t - dt))) \
        / (2 * dt)
    cur = np.asarray(src.current(grid, t))[:grid.dim]
    return Field.from_values(grid, drho + divergence(grid, cur))


def wave_energy_density(state_u: np.ndarray, state_v: np.ndarray,
                        grid: GridSpec, mass: float) -> np.ndarray:
    """(1/2)[v^2 + |grad u|^2 + m^2 u^2], summed over components."""
    out = np.zeros(grid.shape)
    for c in range(state_u.shape[0]):
        grad = gradient(grid, state_u[c])
        out += 0.5 * (state_v[c] ** 2 + (grad ** 2).sum(axis=0)
                      + mass ** 2 * state_u[c] ** 2)
    return out


def total_energy(state: WaveState) -> float:
    dens = wave_energy_density(state.u.values, state.v.values,
                               state.grid, state.mass)
    return float(dens.sum() * state.grid.cell_volume)
