"""One-shot mean-field correction built from the non-interacting steady state.

The pair interaction w contributes, to first order in the interaction
strength xi, a static one-body potential

    v_hartree(x, x) = sum_y w(x, y) n0(y),
    v_exchange(x, y) = w(x, y) <a_y^* a_x>_0,
    v_hf = v_hartree - v_exchange,

where <.>_0 is the xi = 0 steady state.  Replacing the sample Hamiltonian by
h + xi * v_hf and switching the interaction off reproduces every observable
of the interacting steady state up to O(xi^2).  The potential is built once
from the xi = 0 state (no self-consistent iteration); that is the
construction whose error is second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlators import CorrelationMatrix, ness_density_matrix
from .errors import SpectralViolation
from .model import SystemConfig, require_valid
from .quadrature import QuadratureSpec
from .spectral import ScanSpec, check_spectral_condition


@dataclass(frozen=True)
class HartreeFockPotential:
    hartree: np.ndarray       # real diagonal part
    exchange: np.ndarray      # Hermitian part subtracted from it
    combined: np.ndarray      # hartree - exchange
    source: CorrelationMatrix # the xi = 0 density matrix used


def build_potential(config: SystemConfig,
                    quad: QuadratureSpec = QuadratureSpec()) -> HartreeFockPotential:
    """Mean-field potential from the xi = 0 steady state of this model."""
    require_valid(config)
    base = config.with_sample_hamiltonian(config.sample.hamiltonian, interaction_strength=0.0)
    n = config.n_sites
    rho = ness_density_matrix(base, list(range(n)), quad)
    w = config.sample.pair_potential
    occ = np.real(np.diag(rho.values))
    hartree = np.diag(w @ occ)
    exchange = w * rho.values
    return HartreeFockPotential(hartree, exchange, hartree - exchange, rho)


def hf_system(config: SystemConfig,
              quad: QuadratureSpec = QuadratureSpec(),
              potential: Optional[HartreeFockPotential] = None,
              scan: ScanSpec = ScanSpec(n_points=1024)) -> SystemConfig:
    """Non-interacting surrogate whose sample Hamiltonian is h + xi * v_hf.

    Every transport and correlator operation applies verbatim to the result.
    Re-checks the bound-state screen for the shifted Hamiltonian and raises
    SpectralViolation if the mean-field shift pushed a level out of the
    continuum.
    """
    require_valid(config)
    xi = config.sample.interaction_strength
    if xi == 0.0:
        return config
    if potential is None:
        potential = build_potential(config, quad)
    shifted = config.sample.hamiltonian + xi * potential.combined
    out = config.with_sample_hamiltonian(shifted, interaction_strength=0.0)
    report = check_spectral_condition(out, scan)
    if not report.passed:
        worst = ", ".join(f"E={e:.6g}" for e, _ in report.violations)
        raise SpectralViolation(
            f"mean-field Hamiltonian at xi={xi:g} fails the spectral screen ({worst})")
    return out
