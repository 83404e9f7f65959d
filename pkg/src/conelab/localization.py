"""Standard versus Newton-Wigner localization, by quadrature and on lattices.

Two-point functions of the free scalar field (mass m, c = hbar = 1) are
radial momentum integrals:

    equal-time vacuum correlation (standard operators):
        W(r)  = (1/(4 pi^2 r)) Int_0^inf dp p sin(pr) / sqrt(p^2+m^2)
              = m K1(m r) / (4 pi^2 r)                      [oracle]
    commutator function:
        C(t,r) = (1/(2 pi^2 r)) Int dp p sin(pr) sin(E_p t)/E_p
        (vanishes identically at spacelike separation r > |t|)
    Newton-Wigner overlap of sigma-smeared packets:
        N(t,r) = (1/(2 pi^2 r)) Int dp p sin(pr) e^{-i E_p t} e^{-sigma^2 p^2}

W and N are nonzero at spacelike separation while C vanishes there:
annihilating-then-creating a particle is not a local operation under
either choice of creation operators, and for the Newton-Wigner choice
the nonvanishing overlap is precisely a superluminal contribution to
the evolution of its localized states.

The lattice half of the module builds reduced density matrices for a
region out of Newton-Wigner-style Fock data (site-factorized vacuum,
one mode per site), where the partial trace over outside sites is a
finite sum: blocks labeled by the particle count inside the region,
cross-sector blocks included, with the pairing factorials that arise
from matching outside particles.  A brute-force occupation-basis
construction of the same object serves as its oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import (ConfigurationError, InvalidStateError,
                     PreconditionError, QuadratureError)
from .lattice import Field, GridSpec, Region, cone_slice, region_mask
from .sqrtkg import SpectralState, evolve_sqrt_kg


@dataclass(frozen=True)
class Quadrature:
    """Momentum-space quadrature controls for the two-point integrals."""

    cutoff: float
    nodes: int
    sigma: float = 0.0

    def __post_init__(self):
        if self.cutoff <= 0 or self.nodes < 64:
            raise ConfigurationError("need cutoff > 0 and nodes >= 64")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be >= 0")

    def validate_for_mass(self, mass: float) -> None:
        if self.cutoff < 20 * mass:
            raise ConfigurationError(
                f"cutoff {self.cutoff} below 20*mass = {20 * mass}")
        if self.sigma > 0 and self.sigma * self.cutoff < 8:
            raise ConfigurationError(
                f"sigma*cutoff = {self.sigma * self.cutoff:.2f} < 8: "
                "Gaussian tail not controlled")

    @classmethod
    def for_wightman(cls, mass: float) -> "Quadrature":
        return cls(cutoff=2000.0 * mass, nodes=48_000, sigma=0.0)

    @classmethod
    def for_pauli_jordan(cls, mass: float) -> "Quadrature":
        sigma = 0.01 / mass
        return cls(cutoff=10.0 / sigma, nodes=36_000, sigma=sigma)

    @classmethod
    def for_nw(cls, mass: float) -> "Quadrature":
        sigma = 0.1 / mass
        return cls(cutoff=max(20.0 * mass, 12.0 / sigma), nodes=12_000,
                   sigma=sigma)


def _panel_integral(f, cutoff: float, nodes: int, osc_rate: float):
    """Composite Gauss-Legendre over [0, cutoff], panels under a half period."""
    per_panel = 12
    min_panels = max(1, int(np.ceil(cutoff * max(osc_rate, 1e-12) / np.pi)))
    n_panels = max(min_panels, nodes // per_panel)
    edges = np.linspace(0.0, cutoff, n_panels + 1)
    nodes01, weights = roots_legendre(per_panel)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * nodes01[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return ((vals * weights[None, :]).sum(axis=1) * half).sum()


def _converged(value, coarse, rtol=1e-6, atol=1e-9):
    return abs(value - coarse) <= max(atol, rtol * abs(value))


def wightman_equal_time(r: float, mass: float,
                        quadrature: Quadrature | None = None) -> float:
    """Equal-time vacuum two-point function by radial quadrature.

    The non-decaying part of the integrand is removed analytically
    (Int sin(pr) dp = 1/r in the Abel sense) and the remainder
    g(p) = 1 - p/E_p is integrated with a two-term tail correction at
    the cutoff.  Matches m K1(m r)/(4 pi^2 r) to better than 1e-6
    relative over m r in [0.5, 5].
    """
    if r <= 0:
        raise PreconditionError("equal-time separation must be r > 0")
    quad = quadrature or Quadrature.for_wightman(mass)
    quad.validate_for_mass(mass)

    def subtracted(p):
        return (1.0 - p / np.sqrt(p * p + mass * mass)) * np.sin(p * r)

    def tail(cut):
        g_cut = 1.0 - cut / np.sqrt(cut * cut + mass * mass)
        dg_cut = -mass ** 2 / (cut * cut + mass * mass) ** 1.5
        return g_cut * np.cos(cut * r) / r - dg_cut * np.sin(cut * r) / r ** 2

    def evaluate(nodes):
        j = _panel_integral(subtracted, quad.cutoff, nodes, r) + tail(quad.cutoff)
        return (1.0 / r - j) / (4 * np.pi ** 2 * r)

    value = evaluate(quad.nodes)
    coarse = evaluate(quad.nodes // 2)
    if not _converged(value, coarse):
        raise QuadratureError(
            f"wightman quadrature not converged at r={r}: {value} vs {coarse}")
    return float(value)


def pauli_jordan(t: float, r: float, mass: float,
                 quadrature: Quadrature | None = None) -> float:
    """Vacuum commutator function i<[phi(x,t), phi(x',0)]> at separation r.

    Gaussian damping exp(-sigma^2 p^2) controls the oscillatory tail;
    the smearing bias is exponentially small away from the light cone,
    where the exact function vanishes for r > |t|.
    """
    if r <= 0:
        raise PreconditionError("separation must be r > 0")
    if t == 0.0:
        return 0.0
    quad = quadrature or Quadrature.for_pauli_jordan(mass)
    quad.validate_for_mass(mass)
    sig_sq = quad.sigma ** 2

    def integrand(p):
        energy = np.sqrt(p * p + mass * mass)
        damp = np.exp(-sig_sq * p * p) if sig_sq > 0 else 1.0
        return p * np.sin(p * r) * np.sin(energy * t) / energy * damp

    def evaluate(nodes):
        return _panel_integral(integrand, quad.cutoff, nodes, r + abs(t)) \
            / (2 * np.pi ** 2 * r)

    value = evaluate(quad.nodes)
    coarse = evaluate(quad.nodes // 2)
    if not _converged(value, coarse):
        raise QuadratureError(
            f"pauli_jordan quadrature not converged at (t={t}, r={r})")
    return float(value)


def nw_overlap(t: float, r: float, mass: float,
               quadrature: Quadrature | None = None) -> complex:
    """Overlap of sigma-smeared Newton-Wigner packets across (t, r).

    Nonzero at spacelike separation: the smeared NW annihilator at
    (x, t) fails to commute with the NW creator at (x', 0) even for
    r > t.  Requires sigma > 0; the point limit is distributional.
    """
    if r <= 0:
        raise PreconditionError("separation must be r > 0")
    quad = quadrature or Quadrature.for_nw(mass)
    if quad.sigma <= 0:
        raise PreconditionError(
            "nw_overlap needs sigma > 0: strictly point-localized packets "
            "give a distributional kernel with no finite value")
    quad.validate_for_mass(mass)
    sig_sq = quad.sigma ** 2

    def make_integrand(part):
        def integrand(p):
            energy = np.sqrt(p * p + mass * mass)
            phase = np.cos(energy * t) if part == "re" else -np.sin(energy * t)
            return p * np.sin(p * r) * phase * np.exp(-sig_sq * p * p)
        return integrand

    def evaluate(nodes):
        re = _panel_integral(make_integrand("re"), quad.cutoff, nodes, r + abs(t))
        im = _panel_integral(make_integrand("im"), quad.cutoff, nodes, r + abs(t))
        return (re + 1j * im) / (2 * np.pi ** 2 * r)

    value = evaluate(quad.nodes)
    coarse = evaluate(quad.nodes // 2)
    if not _converged(abs(value), abs(coarse)):
        raise QuadratureError(
            f"nw_overlap quadrature not converged at (t={t}, r={r})")
    return complex(value)


def nw_gaussian_normalization(sigma: float) -> float:
    """Closed form of the t=0 overlap prefactor: (8 pi^{3/2} sigma^3)^-1."""
    return 1.0 / (8 * np.pi ** 1.5 * sigma ** 3)


# --------------------------------------------------------------------------
# lattice regional states


@dataclass(frozen=True)
class SingleParticleRegional:
    """Reduced state data of one particle relative to a region."""

    p_inside: float
    purity: float
    entropy: float


def _check_normalized(total: float, what: str, tol: float = 1e-12) -> None:
    if abs(total - 1.0) > tol:
        raise InvalidStateError(f"{what} not normalized: total = {total!r}")


def single_particle_regional_state(psi, grid: GridSpec,
                                   region: Region) -> SingleParticleRegional:
    """(p, purity, entropy) of the block-diagonal one-particle state.

    The reduced density matrix is psi psi^dag restricted to the region
    plus the outside weight (1-p) on the regional vacuum, so
    purity = p^2 + (1-p)^2 and entropy = -p ln p - (1-p) ln (1-p).
    """
    values = psi.values[0] if isinstance(psi, Field) else np.asarray(psi)
    h = grid.cell_volume
    _check_normalized(float((np.abs(values) ** 2).sum() * h), "wave function")
    mask = region_mask(grid, region)
    p = float((np.abs(values[mask]) ** 2).sum() * h)
    p = min(max(p, 0.0), 1.0)
    purity = p ** 2 + (1 - p) ** 2

    def xlnx(x):
        return x * math.log(x) if x > 0 else 0.0

    return SingleParticleRegional(p_inside=p, purity=purity,
                                  entropy=-xlnx(p) - xlnx(1 - p))


def occupation_basis(n_region_sites: int, k: int) -> list:
    """Occupation tuples over the region's sites with total k, sorted."""
    if k == 0:
        return [(0,) * n_region_sites]
    basis = []
    for combo in itertools.combinations_with_replacement(
            range(n_region_sites), k):
        occ = [0] * n_region_sites
        for site in combo:
            occ[site] += 1
        basis.append(tuple(occ))
    return basis


def _occ_rep(occ) -> tuple:
    """Sorted site tuple realizing an occupation vector."""
    rep = []
    for site, count in enumerate(occ):
        rep.extend([site] * count)
    return tuple(rep)


def _occ_factorial(occ) -> float:
    out = 1.0
    for count in occ:
        out *= math.factorial(count)
    return out


@dataclass
class RegionalFockState:
    """Region-reduced density matrix blocks labeled by inside-particle count.

    blocks[(k_row, k_col)] is the (k_row, k_col) sector in the
    occupation basis over region sites; blocks with k_row != k_col come
    from cross-sector (n != m) coherences and are reported but excluded
    from the entropy, which uses the number-diagonal part only.
    """

    region_sites: tuple
    n_max: int
    blocks: dict

    def basis(self, k: int) -> list:
        return occupation_basis(len(self.region_sites), k)

    def assemble(self) -> np.ndarray:
        sizes = [len(self.basis(k)) for k in range(self.n_max + 1)]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        full = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
        for (kr, kc), block in self.blocks.items():
            full[offsets[kr]:offsets[kr + 1], offsets[kc]:offsets[kc + 1]] = block
        return full

    def trace(self) -> float:
        return float(sum(np.trace(self.blocks[(k, k)]).real
                         for k in range(self.n_max + 1)
                         if (k, k) in self.blocks))

    def hermiticity_defect(self) -> float:
        full = self.assemble()
        return float(np.max(np.abs(full - full.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.assemble()).min())

    def purity(self) -> float:
        full = self.assemble()
        return float(np.trace(full @ full).real)

    def number_distribution(self) -> list:
        return [float(np.trace(self.blocks[(k, k)]).real)
                if (k, k) in self.blocks else 0.0
                for k in range(self.n_max + 1)]

    def entropy_number_diagonal(self) -> float:
        total = 0.0
        for k in range(self.n_max + 1):
            if (k, k) not in self.blocks:
                continue
            for lam in np.linalg.eigvalsh(self.blocks[(k, k)]):
                if lam > 1e-14:
                    total -= lam * math.log(lam)
        return float(total)


def _validated_sectors(components: dict, grid: GridSpec, n_max: int,
                       symmetry_tol: float = 1e-10) -> dict:
    if n_max > 3:
        raise ConfigurationError("regional Fock states are capped at n_max = 3")
    n_sites = grid.n_sites
    h = grid.cell_volume
    sectors = {}
    total = 0.0
    for n, psi in components.items():
        if not 0 <= n <= n_max:
            raise ConfigurationError(f"sector {n} outside 0..{n_max}")
        arr = np.asarray(psi, dtype=complex)
        if n == 0:
            if arr.shape != ():
                arr = arr.reshape(())
            sectors[0] = arr
            total += abs(complex(arr)) ** 2
            continue
        if arr.shape != (n_sites,) * n:
            raise ConfigurationError(
                f"sector {n} must have shape {(n_sites,) * n}, got {arr.shape}")
        sym = np.zeros_like(arr)
        perms = list(itertools.permutations(range(n)))
        for perm in perms:
            sym += np.transpose(arr, perm)
        sym /= len(perms)
        defect = float(np.max(np.abs(arr - sym)))
        if defect > symmetry_tol * max(1.0, float(np.max(np.abs(arr)))):
            raise InvalidStateError(
                f"sector {n} wave function is not permutation symmetric "
                f"(defect {defect:.2e})")
        sectors[n] = sym
        total += float((np.abs(sym) ** 2).sum() * h ** n)
    _check_normalized(total, "Fock state", tol=1e-10)
    return sectors


def fock_regional_state(components: dict, grid: GridSpec, region: Region,
                        n_max: int = 3) -> RegionalFockState:
    """Region-reduced density matrix of a few-particle lattice state.

    ``components`` maps particle number n to the symmetric n-coordinate
    amplitude array psi^(n) (measure: sum |psi^(n)|^2 h^n over ordered
    tuples, totalling 1 across sectors).  The reduction sums, for every
    matched count l of outside particles, the contraction of psi^(n)
    against psi^(m)* over ordered outside tuples; the 1/l! compensates
    the l! equivalent pairings of outside coordinates, and the
    remaining prefactor converts ordered-tuple amplitudes to the
    orthonormal occupation basis inside the region.
    """
    mask = region_mask(grid, region)
    inside = np.flatnonzero(mask.ravel())
    outside = np.flatnonzero(~mask.ravel())
    sectors = _validated_sectors(components, grid, n_max)
    h = grid.cell_volume
    n_in = len(inside)

    bases = {k: occupation_basis(n_in, k) for k in range(n_max + 1)}
    blocks = {}

    def contraction(psi_n, psi_m, k_row, k_col, ell):
        """T[u, v] = sum_{y in outside^ell} psi_n[u, y] conj(psi_m[v, y])."""
        sel_row = np.ix_(*([inside] * k_row + [outside] * ell)) \
            if (k_row + ell) else None
        sel_col = np.ix_(*([inside] * k_col + [outside] * ell)) \
            if (k_col + ell) else None
        a = psi_n[sel_row] if sel_row else psi_n.reshape(())
        b = psi_m[sel_col] if sel_col else psi_m.reshape(())
        a = np.asarray(a).reshape(n_in ** k_row, len(outside) ** ell)
        b = np.asarray(b).reshape(n_in ** k_col, len(outside) ** ell)
        return a @ b.conj().T

    for n, psi_n in sectors.items():
        for m, psi_m in sectors.items():
            for ell in range(0, min(n, m) + 1):
                k_row, k_col = n - ell, m - ell
                coeff = (h ** ((n + m) / 2)
                         * math.sqrt(math.factorial(n) * math.factorial(m))
                         / math.factorial(ell))
                t_mat = contraction(psi_n, psi_m, k_row, k_col, ell)
                key = (k_row, k_col)
                if key not in blocks:
                    blocks[key] = np.zeros((len(bases[k_row]), len(bases[k_col])),
                                           dtype=complex)
                for i, occ_r in enumerate(bases[k_row]):
                    rep_r = _occ_rep(occ_r)
                    flat_r = int(np.ravel_multi_index(
                        rep_r, (n_in,) * k_row)) if k_row else 0
                    for j, occ_c in enumerate(bases[k_col]):
                        rep_c = _occ_rep(occ_c)
                        flat_c = int(np.ravel_multi_index(
                            rep_c, (n_in,) * k_col)) if k_col else 0
                        norm = math.sqrt(_occ_factorial(occ_r)
                                         * _occ_factorial(occ_c))
                        blocks[key][i, j] += (coeff / norm
                                              * t_mat[flat_r, flat_c])
    return RegionalFockState(region_sites=tuple(int(i) for i in inside),
                             n_max=n_max, blocks=blocks)


def fock_regional_state_brute_force(components: dict, grid: GridSpec,
                                    region: Region,
                                    n_max: int = 3) -> RegionalFockState:
    """Oracle: explicit occupation-basis density matrix and partial trace.

    Expands the state over the orthonormal occupation basis of all
    sites, forms the full density matrix, and traces outside-site
    occupations by direct summation.  Independent of the pairing
    combinatorics used by fock_regional_state.
    """
    mask = region_mask(grid, region)
    inside = tuple(int(i) for i in np.flatnonzero(mask.ravel()))
    outside = tuple(int(i) for i in np.flatnonzero(~mask.ravel()))
    sectors = _validated_sectors(components, grid, n_max)
    h = grid.cell_volume
    n_sites = grid.n_sites

    amplitudes = {}  # occupation tuple over all sites -> amplitude
    for n, psi in sectors.items():
        if n == 0:
            occ = (0,) * n_sites
            amplitudes[occ] = amplitudes.get(occ, 0.0) + complex(psi)
            continue
        for combo in itertools.combinations_with_replacement(range(n_sites), n):
            occ = [0] * n_sites
            for site in combo:
                occ[site] += 1
            occ = tuple(occ)
            amp = (h ** (n / 2)
                   * math.sqrt(math.factorial(n) / _occ_factorial(occ))
                   * complex(psi[combo]))
            amplitudes[occ] = amplitudes.get(occ, 0.0) + amp

    bases = {k: occupation_basis(len(inside), k) for k in range(n_max + 1)}
    index_of = {k: {occ: i for i, occ in enumerate(bases[k])} for k in bases}
    blocks = {}
    items = list(amplitudes.items())
    for occ_a, amp_a in items:
        in_a = tuple(occ_a[s] for s in inside)
        out_a = tuple(occ_a[s] for s in outside)
        k_a = sum(in_a)
        for occ_b, amp_b in items:
            out_b = tuple(occ_b[s] for s in outside)
            if out_a != out_b:
                continue  # orthogonal outside content traces to zero
            in_b = tuple(occ_b[s] for s in inside)
            k_b = sum(in_b)
            key = (k_a, k_b)
            if key not in blocks:
                blocks[key] = np.zeros((len(bases[k_a]), len(bases[k_b])),
                                       dtype=complex)
            blocks[key][index_of[k_a][in_a], index_of[k_b][in_b]] += \
                amp_a * np.conj(amp_b)
    return RegionalFockState(region_sites=inside, n_max=n_max, blocks=blocks)


def regional_state_defect(a: RegionalFockState, b: RegionalFockState) -> float:
    """Entrywise sup difference between two regional state constructions."""
    if a.region_sites != b.region_sites or a.n_max != b.n_max:
        raise ConfigurationError("regional states are not comparable")
    return float(np.max(np.abs(a.assemble() - b.assemble())))


# --------------------------------------------------------------------------
# Newton-Wigner locality probe


@dataclass(frozen=True)
class NwProbeResult:
    """Amplitude-scale penetration of NW evolution into a contracting cone."""

    p_inside: float
    sup_amplitude: float
    penetration: float


def nw_locality_probe(psi0, grid: GridSpec, region: Region, t_span: float,
                      mass: float, support_tol: float = 1e-15) -> NwProbeResult:
    """Evolve a one-particle state vanishing on R and look inside R^-.

    The comparison state (zero initial data) stays zero, so any weight
    the evolved state carries on the contracted slice is a reduced-state
    difference that local dynamics would forbid.  Reported on the
    amplitude scale, penetration = sqrt(p) + sup|psi| over the slice,
    so an exp(-m d) wave-function tail shows up as an exp(-m d) decay.
    """
    values = (psi0.values[0] if isinstance(psi0, Field)
              else np.asarray(psi0, dtype=complex))
    field = Field.from_values(grid, values.astype(complex))
    h = grid.cell_volume
    total = float((np.abs(values) ** 2).sum() * h)
    if total == 0.0:
        return NwProbeResult(0.0, 0.0, 0.0)
    _check_normalized(total, "wave function")
    mask = region_mask(grid, region)
    scale = float(np.max(np.abs(values)))
    if float(np.max(np.abs(values[mask]))) > support_tol * max(scale, 1.0):
        raise PreconditionError("initial data must vanish on the region")

    if t_span == 0.0:
        return NwProbeResult(0.0, 0.0, 0.0)
    evolved = evolve_sqrt_kg(SpectralState.from_field(field, mass), t_span)
    psi_t = evolved.to_field().values[0]
    slice_mask = region_mask(
        grid, cone_slice(region, t_span, 1.0, "contracting").region())
    p_inside = float((np.abs(psi_t[slice_mask]) ** 2).sum() * h)
    sup_amp = float(np.max(np.abs(psi_t[slice_mask]))) if slice_mask.any() else 0.0
    return NwProbeResult(p_inside=p_inside, sup_amplitude=sup_amp,
                         penetration=math.sqrt(max(p_inside, 0.0)) + sup_amp)
