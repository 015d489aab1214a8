"""Embedding self-energy, sample-space resolvent, and the bound-state screen.

The leads act on the sample through an energy-dependent self-energy; the
sample resolvent at real energy E is the inverse of

    K(E) = h_sample + self_energy(E) - E.

Transport formulas are valid only when K(E) is invertible for every real E
(no bound states or real resonances of the coupled one-body Hamiltonian);
`check_spectral_condition` screens for violations numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SingularMatrixError
from .leads import BandGeometry, surface_green
from .model import SystemConfig, require_valid
from .utils import thread_map


def singular_tolerance(config: SystemConfig) -> float:
    """Singular-value floor separating genuine resonances from roundoff."""
    scale = np.linalg.norm(config.sample.hamiltonian, 2) if config.n_sites else 0.0
    return 1e-8 * scale + 1e-12


@dataclass(frozen=True)
class SelfEnergy:
    """Sample-space self-energy at one energy: sum of rank-one lead terms."""

    energy: float
    matrix: np.ndarray


@dataclass(frozen=True)
class SampleResolvent:
    energy: float
    matrix: np.ndarray
    condition_number: float


def embedding_self_energy(config: SystemConfig, E: float) -> SelfEnergy:
    """Self-energy sum_j d_j^2 g_j(E) |phi_j><phi_j| at real energy E."""
    n = config.n_sites
    out = np.zeros((n, n), dtype=complex)
    for ld in config.leads:
        g = surface_green(E, ld.bias, config.hopping)
        phi = ld.coupling_vector
        out += (ld.coupling ** 2 * g) * np.outer(phi, phi.conj())
    return SelfEnergy(float(E), out)


def _kernel_batch(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """K(E) = h_sample + self_energy(E) - E for a batch of energies."""
    Es = np.asarray(Es, dtype=float)
    n = config.n_sites
    K = np.broadcast_to(config.sample.hamiltonian, (Es.size, n, n)).copy()
    for ld in config.leads:
        g = surface_green(Es, ld.bias, config.hopping)
        proj = np.outer(ld.coupling_vector, ld.coupling_vector.conj())
        K += (ld.coupling ** 2 * np.atleast_1d(g))[:, None, None] * proj
    K[:, np.arange(n), np.arange(n)] -= Es[:, None]
    return K


def sample_resolvent(config: SystemConfig, E: float) -> SampleResolvent:
    """Invert K(E) by dense solve, recording the condition number.

    Raises SingularMatrixError when the smallest singular value of K(E) is
    below the resonance floor, which signals a spectral-condition violation
    at this energy.
    """
    K = _kernel_batch(config, np.array([float(E)]))[0]
    sv = np.linalg.svd(K, compute_uv=False)
    tol = singular_tolerance(config)
    if sv[-1] < tol:
        raise SingularMatrixError(E, sv[-1])
    mat = np.linalg.solve(K, np.eye(config.n_sites, dtype=complex))
    return SampleResolvent(float(E), mat, float(sv[0] / sv[-1]))


@dataclass(frozen=True)
class ScanSpec:
    """Energy scan for the spectral-condition screen."""

    n_points: int = 2048
    refine_to: float = 1e-10
    # default margin: 4 c_R + ||h_sample|| + sum_j |d_j|.  The tunneling term
    # is required: every eigenvalue of the coupled Hamiltonian lies within
    # its norm, and strong coupling pushes bound states far outside the bands
    # (a single site with d = 10, c_R = 1 binds near |E| = 10.05).
    margin: Optional[float] = None


@dataclass(frozen=True)
class SpectralReport:
    passed: bool
    violations: tuple[tuple[float, float], ...]  # (energy, smallest singular value)
    grid_min: float
    grid_max: float
    n_points: int
    refine_to: float
    min_singular_value: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [{"E": e, "smallest_singular_value": s} for e, s in self.violations],
            "scan": {"E_min": self.grid_min, "E_max": self.grid_max,
                     "n_points": self.n_points, "refine_to": self.refine_to},
            "min_singular_value": self.min_singular_value,
            "tolerance": self.tolerance,
        }


def _smallest_sv(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    K = _kernel_batch(config, Es)
    return np.linalg.svd(K, compute_uv=False)[:, -1]


def _golden_refine(config, lo, hi, width):
    """Golden-section minimization of the smallest singular value on [lo, hi].

    Returns (E*, s(E*), slope) where slope is the local growth rate of the
    singular value around the minimum.  A genuine singular point is V-shaped,
    so the deepest value reachable at bracket width w is about slope * w; the
    caller must fold that into its detection threshold.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = _smallest_sv(config, np.array([c, d]))
    while hi - lo > width:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = _smallest_sv(config, np.array([c]))[0]
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = _smallest_sv(config, np.array([d]))[0]
    e = 0.5 * (lo + hi)
    s = _smallest_sv(config, np.array([e]))[0]
    probe = max(1e3 * width, 1e-9)
    sp, sm = _smallest_sv(config, np.array([e + probe, e - probe]))
    slope = max(sp - s, sm - s, 0.0) / probe
    return e, s, slope


def _real_kernel_det(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """det K(E) where it is guaranteed real (off-band, real h and couplings)."""
    return np.linalg.det(_kernel_batch(config, Es)).real


def _is_real_system(config: SystemConfig) -> bool:
    if np.max(np.abs(config.sample.hamiltonian.imag)) > 0:
        return False
    return all(np.max(np.abs(ld.coupling_vector.imag)) == 0 for ld in config.leads)


def check_spectral_condition(config: SystemConfig,
                             scan: ScanSpec = ScanSpec(),
                             threads: int = 1) -> SpectralReport:
    """Screen the real axis for energies where K(E) is singular.

    Scans [min threshold - margin, max threshold + margin] on a uniform grid,
    refines every local minimum of the smallest singular value by golden
    section, and additionally runs sign-change bisection on the (real)
    determinant over off-band segments when the model is real.  This is a
    numerical screen, not a proof.
    """
    require_valid(config)
    geometry = BandGeometry.from_config(config)
    tol = singular_tolerance(config)
    margin = scan.margin
    if margin is None:
        margin = (4.0 * config.hopping
                  + np.linalg.norm(config.sample.hamiltonian, 2)
                  + float(np.sum(np.abs(config.couplings))))
    lo = geometry.thresholds[0] - margin
    hi = geometry.thresholds[-1] + margin

    grid = np.linspace(lo, hi, scan.n_points)
    chunks = np.array_split(grid, max(1, threads * 4))
    sv = np.concatenate(thread_map(lambda c: _smallest_sv(config, c), chunks, threads))

    candidates = []
    interior = np.flatnonzero((sv[1:-1] <= sv[:-2]) & (sv[1:-1] <= sv[2:])) + 1
    for i in interior:
        candidates.append((grid[i - 1], grid[i + 1]))
    if sv[0] < sv[1]:
        candidates.append((grid[0], grid[1]))
    if sv[-1] < sv[-2]:
        candidates.append((grid[-2], grid[-1]))

    found: list[tuple[float, float]] = []
    for a, b in candidates:
        e, s, slope = _golden_refine(config, a, b, scan.refine_to)
        # a simple root of det K cannot be resolved below slope * bracket
        if s < max(tol, 8.0 * slope * scan.refine_to):
            found.append((e, s))

    # Off-band bound states cross zero in the real determinant; root finding
    # is sharper than minimization there, so add those roots when applicable.
    if _is_real_system(config):
        inband = np.zeros(grid.shape, dtype=bool)
        for j in range(config.n_leads):
            b0, b1 = geometry.band(j)
            inband |= (grid >= b0) & (grid <= b1)
        det = np.full(grid.shape, np.nan)
        off = ~inband
        if np.any(off):
            det[off] = _real_kernel_det(config, grid[off])
        for i in range(len(grid) - 1):
            if off[i] and off[i + 1] and det[i] * det[i + 1] < 0:
                a, b = grid[i], grid[i + 1]
                fa, fb = det[i], det[i + 1]
                # bisect to the requested width, then secant-polish the root
                while b - a > scan.refine_to:
                    mid = 0.5 * (a + b)
                    fm = _real_kernel_det(config, np.array([mid]))[0]
                    if fa * fm <= 0:
                        b, fb = mid, fm
                    else:
                        a, fa = mid, fm
                e = 0.5 * (a + b)
                for _ in range(8):
                    if fb == fa:
                        break
                    step = b - fb * (b - a) / (fb - fa)
                    fe = _real_kernel_det(config, np.array([step]))[0]
                    a, fa, b, fb = b, fb, step, fe
                    e = step
                    if fe == 0.0 or abs(b - a) < 1e-15 * max(1.0, abs(e)):
                        break
                s = _smallest_sv(config, np.array([e]))[0]
                found.append((e, s))

    found.sort()
    merged: list[tuple[float, float]] = []
    for e, s in found:
        if merged and abs(e - merged[-1][0]) < 1e-6:
            if s < merged[-1][1]:
                merged[-1] = (e, s)
        else:
            merged.append((e, s))

    return SpectralReport(
        passed=not merged,
        violations=tuple(merged),
        grid_min=float(lo),
        grid_max=float(hi),
        n_points=scan.n_points,
        refine_to=scan.refine_to,
        min_singular_value=float(min(sv.min(), min((s for _, s in merged), default=np.inf))),
        tolerance=tol,
    )
