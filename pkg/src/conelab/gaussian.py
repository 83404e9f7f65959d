"""Lattice free scalar field in the Gaussian (covariance-matrix) sector.

The Hamiltonian is H = (1/2) sum_i [pi_i^2 + phi_i K_ij phi_j] with K
the discrete -laplacian + m^2 on a periodic chain.  For Gaussian states
everything is finite-dimensional and exact:

    - the ground state has <phi phi> = K^{-1/2}/2, <pi pi> = K^{1/2}/2;
    - the reduced state of a region is the restriction of means and
      covariance to its sites (an exact partial trace);
    - unitary evolution conjugates the covariance by the classical
      symplectic propagator and moves the means along classical
      trajectories;
    - entanglement entropies come from symplectic eigenvalues: nu >= 1/2
      always, = 1/2 exactly on pure modes, and
      S = sum [(nu+1/2)ln(nu+1/2) - (nu-1/2)ln(nu-1/2)].

Covariance ordering convention: all phi's first, then all pi's.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (ConfigurationError, InvalidStateError, ShapeMismatchError)
from .lattice import GridSpec, Region, region_mask


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric positive-definite coupling K (discrete -lap + m^2)."""

    matrix: np.ndarray = field(repr=False)
    mass: float
    spacing: float

    def __post_init__(self):
        k = np.asarray(self.matrix, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ShapeMismatchError("coupling matrix must be square")
        if np.max(np.abs(k - k.T)) > 1e-14 * max(1.0, np.max(np.abs(k))):
            raise ConfigurationError("coupling matrix must be symmetric")
        object.__setattr__(self, "matrix", k)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def spectrum(self):
        """(frequencies^2, eigenvectors); raises if K is not positive."""
        w2, vecs = np.linalg.eigh(self.matrix)
        if w2[0] <= 1e-12 * max(1.0, w2[-1]):
            raise ConfigurationError(
                "coupling matrix is (numerically) singular; use mass > 0 on "
                "periodic chains to lift the zero mode")
        return w2, vecs


def chain_coupling(grid: GridSpec, mass: float) -> CouplingMatrix:
    """Periodic-chain K = (2 - shift - shift^T)/h^2 + m^2."""
    if grid.dim != 1:
        raise ConfigurationError("the harmonic-lattice sector is 1-d here")
    n, h = grid.extent, grid.spacing
    k = np.zeros((n, n))
    idx = np.arange(n)
    k[idx, idx] = 2.0 / h ** 2 + mass ** 2
    k[idx, (idx + 1) % n] = -1.0 / h ** 2
    k[idx, (idx - 1) % n] = -1.0 / h ** 2
    return CouplingMatrix(matrix=k, mass=float(mass), spacing=h)


def _matrix_power_from_spectrum(w2, vecs, power: float) -> np.ndarray:
    return (vecs * w2 ** power) @ vecs.T


@dataclass(frozen=True)
class GaussianState:
    """Means and (phi..., pi...) covariance over the sites in site_map."""

    mean_phi: np.ndarray
    mean_pi: np.ndarray
    cov: np.ndarray = field(repr=False)
    site_map: tuple

    def __post_init__(self):
        n = len(self.site_map)
        mp = np.asarray(self.mean_phi, dtype=float)
        mq = np.asarray(self.mean_pi, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mp.shape != (n,) or mq.shape != (n,):
            raise ShapeMismatchError("mean vectors do not match site_map")
        if cov.shape != (2 * n, 2 * n):
            raise ShapeMismatchError("covariance must be 2n x 2n")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise InvalidStateError("covariance must be symmetric")
        object.__setattr__(self, "mean_phi", mp)
        object.__setattr__(self, "mean_pi", mq)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return len(self.site_map)

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Positive spectrum of i*Omega*cov, each value >= 1/2 for states."""
        n = self.n_modes
        omega = np.zeros((2 * n, 2 * n))
        omega[:n, n:] = np.eye(n)
        omega[n:, :n] = -np.eye(n)
        eigs = np.linalg.eigvals(omega @ self.cov)
        nus = np.sort(np.abs(eigs))
        # eigenvalues come in +-i*nu pairs; merge each adjacent pair
        return nus.reshape(-1, 2).mean(axis=1)

    def validate_uncertainty(self, tol: float = 1e-10) -> None:
        nus = self.symplectic_eigenvalues()
        if nus.size and nus.min() < 0.5 - tol:
            raise InvalidStateError(
                f"symplectic eigenvalue {nus.min():.12f} violates the "
                "uncertainty bound 1/2")


def vacuum_state(coupling: CouplingMatrix) -> GaussianState:
    """Ground state: zero means, <phi phi> = K^{-1/2}/2, <pi pi> = K^{1/2}/2."""
    w2, vecs = coupling.spectrum()
    n = coupling.n
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = 0.5 * _matrix_power_from_spectrum(w2, vecs, -0.5)
    cov[n:, n:] = 0.5 * _matrix_power_from_spectrum(w2, vecs, +0.5)
    return GaussianState(mean_phi=np.zeros(n), mean_pi=np.zeros(n),
                         cov=cov, site_map=tuple(range(n)))


def _region_indices(state: GaussianState, grid: GridSpec,
                    region: Region) -> np.ndarray:
    mask = region_mask(grid, region)
    wanted = np.flatnonzero(mask)
    positions = {site: i for i, site in enumerate(state.site_map)}
    missing = [s for s in wanted if s not in positions]
    if missing:
        raise ConfigurationError(
            f"region sites {missing[:4]}... are outside this state's site map")
    return np.array([positions[s] for s in wanted], dtype=int)


def reduce_state(state: GaussianState, grid: GridSpec,
                 region: Region) -> GaussianState:
    """Exact partial trace: restrict means and covariance to region sites."""
    idx = _region_indices(state, grid, region)
    n = state.n_modes
    rows = np.concatenate([idx, n + idx])
    return GaussianState(mean_phi=state.mean_phi[idx],
                         mean_pi=state.mean_pi[idx],
                         cov=state.cov[np.ix_(rows, rows)],
                         site_map=tuple(int(state.site_map[i]) for i in idx))


@dataclass(frozen=True)
class EntropyReport:
    site_map: tuple
    symplectic_eigenvalues: tuple
    entropy: float

    def to_dict(self) -> dict:
        return {"sites": list(self.site_map),
                "symplectic_eigenvalues": list(self.symplectic_eigenvalues),
                "entropy": self.entropy}


def entropy(state: GaussianState) -> EntropyReport:
    """Von Neumann entropy from the symplectic spectrum."""
    nus = state.symplectic_eigenvalues()
    if nus.size and nus.min() < 0.5 - 1e-8:
        raise InvalidStateError(
            f"symplectic eigenvalue {nus.min():.10f} below 1/2; not a state")
    total = 0.0
    for nu in nus:
        plus = nu + 0.5
        minus = max(nu - 0.5, 0.0)
        total += plus * np.log(plus)
        if minus > 0.0:
            total -= minus * np.log(minus)
    return EntropyReport(site_map=state.site_map,
                         symplectic_eigenvalues=tuple(float(v) for v in nus),
                         entropy=float(total))


def mutual_information(state: GaussianState, grid: GridSpec,
                       region_a: Region, region_b: Region) -> float:
    """I(A:B) = S(A) + S(B) - S(A u B) for disjoint regions."""
    mask_a = region_mask(grid, region_a)
    mask_b = region_mask(grid, region_b)
    if (mask_a & mask_b).any():
        raise ConfigurationError("mutual information needs disjoint regions")
    union = Region.site_set(np.flatnonzero(mask_a | mask_b))
    s_a = entropy(reduce_state(state, grid, region_a)).entropy
    s_b = entropy(reduce_state(state, grid, region_b)).entropy
    s_ab = entropy(reduce_state(state, grid, union)).entropy
    return s_a + s_b - s_ab


def _require_full(state: GaussianState, coupling: CouplingMatrix, what: str):
    if state.n_modes != coupling.n or state.site_map != tuple(range(coupling.n)):
        raise ConfigurationError(
            f"{what} is defined for full-grid states only; reduced states "
            "evolve only through the global dynamics")


def evolve(state: GaussianState, coupling: CouplingMatrix, t_span: float,
           method: str = "exact_spectral", dt: float | None = None) -> GaussianState:
    """Unitary Gaussian evolution of a full-grid state.

    exact_spectral conjugates by the normal-mode propagator (the
    oracle); symplectic_steps composes kick-drift maps whose influence
    travels one site per step, making cone statements bit-exact.
    """
    _require_full(state, coupling, "evolution")
    if method == "exact_spectral":
        s_mat = _spectral_propagator(coupling, t_span)
        return _apply_symplectic(state, s_mat)
    if method == "symplectic_steps":
        if dt is None or dt <= 0:
            raise ConfigurationError("symplectic_steps needs dt > 0")
        w2_max = 4.0 / coupling.spacing ** 2 + coupling.mass ** 2
        if dt * np.sqrt(w2_max) >= 2.0:
            raise ConfigurationError(
                f"dt={dt} unstable for this chain (need dt*w_max < 2)")
        steps = int(round(t_span / dt))
        if abs(steps * dt - t_span) > 1e-9 * max(1.0, abs(t_span)):
            raise ConfigurationError("t_span must be a whole number of steps")
        out = state
        for _ in range(steps):
            out = symplectic_step(out, coupling, dt)
        return out
    raise ConfigurationError(f"unknown evolution method {method!r}")


def _spectral_propagator(coupling: CouplingMatrix, t_span: float) -> np.ndarray:
    w2, vecs = coupling.spectrum()
    w = np.sqrt(w2)
    cos = (vecs * np.cos(w * t_span)) @ vecs.T
    sin_over = (vecs * (np.sin(w * t_span) / w)) @ vecs.T
    sin_times = (vecs * (np.sin(w * t_span) * w)) @ vecs.T
    n = coupling.n
    s_mat = np.zeros((2 * n, 2 * n))
    s_mat[:n, :n] = cos
    s_mat[:n, n:] = sin_over
    s_mat[n:, :n] = -sin_times
    s_mat[n:, n:] = cos
    return s_mat


def _apply_symplectic(state: GaussianState, s_mat: np.ndarray) -> GaussianState:
    n = state.n_modes
    mean = s_mat @ np.concatenate([state.mean_phi, state.mean_pi])
    cov = s_mat @ state.cov @ s_mat.T
    cov = 0.5 * (cov + cov.T)
    return replace(state, mean_phi=mean[:n], mean_pi=mean[n:], cov=cov)


def symplectic_step(state: GaussianState, coupling: CouplingMatrix,
                    dt: float) -> GaussianState:
    """One kick-drift step: pi -= dt K phi, then phi += dt pi.

    The composed map is symplectic for any dt and moves information
    exactly one site per step for the tridiagonal chain coupling.
    """
    n = state.n_modes
    k = coupling.matrix
    mp, mq = state.mean_phi, state.mean_pi
    mq = mq - dt * (k @ mp)
    mp = mp + dt * mq

    cov = state.cov.copy()
    # rows/cols transform like the phase-space coordinates
    cov[n:, :] -= dt * (k @ cov[:n, :])
    cov[:, n:] -= dt * (cov[:, :n] @ k)
    cov[:n, :] += dt * cov[n:, :]
    cov[:, :n] += dt * cov[:, n:]
    cov = 0.5 * (cov + cov.T)
    return replace(state, mean_phi=mp, mean_pi=mq, cov=cov)


def displace(state: GaussianState, site: int, d_phi: float,
             d_pi: float) -> GaussianState:
    """Weyl displacement at one site: shifts means, covariance untouched."""
    positions = {s: i for i, s in enumerate(state.site_map)}
    if site not in positions:
        raise ConfigurationError(f"site {site} not in this state's site map")
    i = positions[site]
    mp = state.mean_phi.copy()
    mq = state.mean_pi.copy()
    mp[i] += d_phi
    mq[i] += d_pi
    return replace(state, mean_phi=mp, mean_pi=mq)


def reduced_state_distance(a: GaussianState, b: GaussianState) -> float:
    """max of sup-norm mean difference and sup-norm covariance difference."""
    if a.site_map != b.site_map:
        raise ConfigurationError("states describe different site sets")
    return max(float(np.max(np.abs(a.mean_phi - b.mean_phi))) if a.n_modes else 0.0,
               float(np.max(np.abs(a.mean_pi - b.mean_pi))) if a.n_modes else 0.0,
               float(np.max(np.abs(a.cov - b.cov))) if a.n_modes else 0.0)


def mean_energy(state: GaussianState, coupling: CouplingMatrix) -> float:
    """<H> = (tr<pipi> + tr(K<phiphi>))/2 + classical mean-field energy."""
    _require_full(state, coupling, "mean energy")
    n = state.n_modes
    cov_phi = state.cov[:n, :n]
    cov_pi = state.cov[n:, n:]
    quantum = 0.5 * (np.trace(cov_pi) + np.trace(coupling.matrix @ cov_phi))
    classical = 0.5 * (state.mean_pi @ state.mean_pi
                       + state.mean_phi @ (coupling.matrix @ state.mean_phi))
    return float(quantum + classical)


def covariance_to_csv(state: GaussianState, path) -> None:
    np.savetxt(path, state.cov, delimiter=",")
