"""Grids, regions, cone slices, fields, and discrete integrals.

Everything downstream (wave, Dirac, Gaussian, and spectral evolutions)
shares this geometric substrate.  Units are c = hbar = 1 throughout:
times, lengths and inverse masses are directly comparable, and a cone of
speed 1 moves one length unit per time unit.

Conventions:
    - sites of a dim-d periodic grid with ``extent`` N and ``spacing`` h
      sit at coordinates i*h, i = 0..N-1, along each axis;
    - ball membership uses the closed inequality |x - center| <= radius,
      with periodic minimum-image distances, so boundary ties are
      deterministic;
    - all distances and radii are physical (multiples of h only when the
      caller makes them so).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeVanishedError, ConfigurationError, ShapeMismatchError

BOUNDARIES = ("periodic", "absorbing-pad")


@dataclass(frozen=True)
class GridSpec:
    """A cubic periodic lattice: ``extent`` sites per axis, ``dim`` axes."""

    dim: int
    extent: int
    spacing: float
    boundary: str = "periodic"
    wave_speed: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ConfigurationError(f"dim must be 1 or 3, got {self.dim}")
        if self.extent < 4:
            raise ConfigurationError(f"extent must be >= 4, got {self.extent}")
        if not self.spacing > 0:
            raise ConfigurationError(f"spacing must be > 0, got {self.spacing}")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.wave_speed != 1.0:
            raise ConfigurationError(
                "wave_speed is fixed to 1 (c = 1 units); rescale the grid instead")

    @property
    def shape(self) -> tuple:
        return (self.extent,) * self.dim

    @property
    def n_sites(self) -> int:
        return self.extent ** self.dim

    @property
    def length(self) -> float:
        """Physical box length per axis."""
        return self.extent * self.spacing

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis_coords(self) -> np.ndarray:
        return self.spacing * np.arange(self.extent)

    def periodic_delta(self, coords: np.ndarray, center: float) -> np.ndarray:
        """Signed minimum-image displacement coords - center on one axis."""
        delta = (coords - center) % self.length
        return np.where(delta > self.length / 2, delta - self.length, delta)

    def distance_to_point(self, center) -> np.ndarray:
        """Per-site periodic distance to a physical point (shape ``self.shape``)."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.size != self.dim:
            raise ShapeMismatchError(
                f"center has {center.size} components, grid is {self.dim}-dimensional")
        coords = self.axis_coords()
        sq = np.zeros(self.shape)
        for axis in range(self.dim):
            d = self.periodic_delta(coords, center[axis]) ** 2
            sq += d.reshape([-1 if a == axis else 1 for a in range(self.dim)])
        return np.sqrt(sq)


@dataclass(frozen=True)
class Region:
    """A spatial region: a ball (physical center/radius) or an explicit site set."""

    kind: str
    center: tuple = ()
    radius: float = 0.0
    sites: tuple = ()

    @classmethod
    def ball(cls, center, radius: float) -> "Region":
        center = tuple(float(c) for c in np.atleast_1d(center))
        if not radius > 0:
            raise ConfigurationError(f"ball radius must be > 0, got {radius}")
        return cls(kind="ball", center=center, radius=float(radius))

    @classmethod
    def site_set(cls, sites) -> "Region":
        sites = tuple(tuple(int(i) for i in np.atleast_1d(s)) for s in sites)
        if len(set(sites)) != len(sites):
            raise ConfigurationError("site_set contains duplicate sites")
        return cls(kind="site_set", sites=sites)

    def __post_init__(self):
        if self.kind not in ("ball", "site_set"):
            raise ConfigurationError(f"unknown region kind {self.kind!r}")


@dataclass(frozen=True)
class ConeSlice:
    """The spatial slice of a light cone over a ball after ``elapsed`` time.

    Contracting slices shrink the base radius by speed*elapsed and only
    exist while that stays positive; expanding slices grow it.
    """

    base: Region
    elapsed: float
    direction: str
    speed: float = 1.0

    def __post_init__(self):
        if self.base.kind != "ball":
            raise ConfigurationError("cone slices are defined over ball regions")
        if self.elapsed < 0:
            raise ConfigurationError("elapsed time must be >= 0")
        if self.direction not in ("contracting", "expanding"):
            raise ConfigurationError(f"unknown cone direction {self.direction!r}")
        if self.direction == "contracting" and self.radius <= 0:
            raise ConeVanishedError(
                f"contracting cone of radius {self.base.radius} vanished before "
                f"elapsed={self.elapsed} at speed {self.speed}")

    @property
    def radius(self) -> float:
        if self.direction == "contracting":
            return self.base.radius - self.speed * self.elapsed
        return self.base.radius + self.speed * self.elapsed

    def region(self) -> Region:
        return Region.ball(self.base.center, self.radius)


def cone_slice(base: Region, t: float, speed: float = 1.0,
               direction: str = "contracting") -> ConeSlice:
    """Slice the light cone with ``base`` as its bottom at elapsed time t."""
    return ConeSlice(base=base, elapsed=float(t), direction=direction,
                     speed=float(speed))


@dataclass(frozen=True)
class Field:
    """Sampled field values: ``components`` samples per lattice site.

    ``values`` has shape (components,) + grid.shape and is treated as
    immutable by convention.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != self.grid.dim + 1 or values.shape[1:] != self.grid.shape:
            raise ShapeMismatchError(
                f"field values shape {values.shape} does not match "
                f"(components,)+{self.grid.shape}")
        if values.shape[0] < 1:
            raise ShapeMismatchError("field needs at least one component")
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("field contains NaN or Inf samples")
        object.__setattr__(self, "values", values)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "Field":
        values = np.asarray(values)
        if values.ndim == grid.dim:
            values = values[np.newaxis]
        return cls(grid=grid, values=values)


class InvalidFieldError(ShapeMismatchError):
    """Field samples are not finite."""


def _check_ball_fits(grid: GridSpec, region: Region) -> None:
    for c in region.center:
        if not (c - region.radius > 0 and c + region.radius < grid.length):
            raise ConfigurationError(
                f"ball center={region.center} radius={region.radius} does not fit "
                f"strictly inside the grid (length {grid.length} per axis)")


def region_mask(grid: GridSpec, region: Region) -> np.ndarray:
    """Boolean membership indicator per site, shape ``grid.shape``."""
    if region.kind == "ball":
        _check_ball_fits(grid, region)
        return grid.distance_to_point(region.center) <= region.radius
    mask = np.zeros(grid.shape, dtype=bool)
    for site in region.sites:
        if len(site) != grid.dim:
            raise ConfigurationError(
                f"site {site} has wrong dimensionality for a {grid.dim}-d grid")
        if any(not 0 <= i < grid.extent for i in site):
            raise ConfigurationError(f"site {site} outside grid bounds")
        mask[site] = True
    return mask


def distance_to_mask(grid: GridSpec, mask: np.ndarray) -> np.ndarray:
    """Per-site periodic distance to the nearest True site of ``mask``.

    Used to build dilations of a disturbance support cheaply for many
    times at once: dilation by r is just ``distance <= r``.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise ShapeMismatchError("mask shape does not match grid")
    support = np.argwhere(mask)
    if support.size == 0:
        return np.full(grid.shape, np.inf)
    coords = grid.axis_coords()
    out = np.full(grid.shape, np.inf)
    # O(n_sites * |support|); supports are small in every experiment here.
    for site in support:
        sq = np.zeros(grid.shape)
        for axis in range(grid.dim):
            d = grid.periodic_delta(coords, coords[site[axis]]) ** 2
            sq += d.reshape([-1 if a == axis else 1 for a in range(grid.dim)])
        np.minimum(out, np.sqrt(sq), out=out)
    return out


def dilate_mask(grid: GridSpec, mask: np.ndarray, distance: float) -> np.ndarray:
    """Sites within ``distance`` (physical, periodic) of any True site."""
    if distance < 0:
        raise ConfigurationError("dilation distance must be >= 0")
    return distance_to_mask(grid, mask) <= distance


def site_dilate(mask: np.ndarray, steps: int, metric: str = "manhattan") -> np.ndarray:
    """Dilate a boolean mask by ``steps`` lattice sites (periodic).

    ``manhattan`` matches cross-shaped stencils (one site per axis per
    application); ``chebyshev`` matches per-axis shift compositions that
    advance along every axis each step.
    """
    if steps < 0:
        raise ConfigurationError("site dilation steps must be >= 0")
    out = np.asarray(mask, dtype=bool).copy()
    if metric == "manhattan":
        for _ in range(steps):
            grown = out.copy()
            for axis in range(out.ndim):
                grown |= np.roll(out, 1, axis=axis)
                grown |= np.roll(out, -1, axis=axis)
            out = grown
    elif metric == "chebyshev":
        for _ in range(steps):
            grown = out.copy()
            for shifts in itertools.product((-1, 0, 1), repeat=out.ndim):
                if any(shifts):
                    grown |= np.roll(out, shifts, axis=tuple(range(out.ndim)))
            out = grown
    else:
        raise ConfigurationError(f"unknown dilation metric {metric!r}")
    return out


def discrete_integral(f: Field, region: Region, weight: str = "midpoint") -> float:
    """Midpoint-rule integral of a single-component real field over a region.

    Returns sum over masked sites of f * spacing**dim.
    """
    if weight != "midpoint":
        raise ConfigurationError(f"unknown quadrature weight {weight!r}")
    if f.components != 1:
        raise ShapeMismatchError(
            f"discrete_integral expects a 1-component field, got {f.components}")
    values = f.values[0]
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag)) > 1e-12 * max(1.0, np.max(np.abs(values.real))):
            raise ShapeMismatchError("discrete_integral expects real samples")
        values = values.real
    mask = region_mask(f.grid, region)
    return float(values[mask].sum() * f.grid.cell_volume)


def masked_sum(grid: GridSpec, values: np.ndarray, mask: np.ndarray) -> float:
    """Bare-array companion of discrete_integral for internal hot paths."""
    return float(values[mask].sum() * grid.cell_volume)
