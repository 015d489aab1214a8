"""Transmission, steady currents, entropy production, and linear response.

Charge and energy currents are the stationary expectation values of the
current observables at the sample--lead contacts.  With f(x) = 1/(1 + e^x)
and x_j(E) = beta_j (E - v_j - mu_j),

    J_j   = sum_k  int_{I_jk} T_jk(E) [f(x_j) - f(x_k)] dE,
    E_j   = sum_k  int_{I_jk} T_jk(E) [f(x_j) - f(x_k)] (E - v_j) dE,
    sigma = -sum_j beta_j (E_j - mu_j J_j) >= 0,

where I_jk is the overlap of the j and k lead bands and T_jk is the
transmission factor computed from the sample resolvent.  In this
normalization a fully open channel carries T = 1/(2 pi).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, SingularMatrixError
from .leads import BandGeometry, spectral_factor
from .model import SystemConfig, require_valid
from .quadrature import QuadratureSpec, integrate_segments
from .spectral import _kernel_batch, singular_tolerance
from .utils import fermi


@dataclass(frozen=True)
class TransmissionMatrix:
    energy: float
    values: np.ndarray  # (m, m) nonnegative, zero diagonal


@dataclass(frozen=True)
class SteadyObservables:
    charge_currents: np.ndarray     # (m,)
    energy_currents: np.ndarray     # (m,)
    entropy_production: float
    charge_error: float             # quadrature error estimates
    energy_error: float
    entropy_error: float

    @property
    def charge_sum(self) -> float:
        return float(np.sum(self.charge_currents))


def resolvent_columns(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """m_v(E) applied to every coupling vector, batched over energies.

    Returns shape (nE, n, m); column k is the sample resolvent acting on
    phi_k.  Raises SingularMatrixError if any solve blows past the resonance
    floor (the spectral condition is violated at that energy).
    """
    Es = np.asarray(Es, dtype=float)
    K = _kernel_batch(config, Es)
    Phi = config.coupling_matrix
    try:
        X = np.linalg.solve(K, np.broadcast_to(Phi, (Es.size,) + Phi.shape))
    except np.linalg.LinAlgError:
        X = None
    bound = 1.0 / singular_tolerance(config)
    if X is None or not np.all(np.isfinite(X)) or np.max(np.abs(X)) > bound:
        sv = np.linalg.svd(K, compute_uv=False)[:, -1]
        i = int(np.argmin(sv))
        raise SingularMatrixError(Es[i], sv[i])
    return X


def transmission_batch(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """Transmission factors T_jk(E) for a batch of energies, shape (nE, m, m)."""
    Es = np.asarray(Es, dtype=float)
    m = config.n_leads
    X = resolvent_columns(config, Es)
    Phi = config.coupling_matrix
    M = np.einsum("xj,exk->ejk", Phi.conj(), X)  # <phi_j | m(E) phi_k>
    d2 = config.couplings ** 2
    r = np.stack([spectral_factor(Es - ld.bias, config.hopping) for ld in config.leads], axis=1)
    T = (d2[None, :, None] * d2[None, None, :]
         * r[:, :, None] * r[:, None, :] * np.abs(M) ** 2)
    T[:, np.arange(m), np.arange(m)] = 0.0
    return T


def transmission(config: SystemConfig, E: float) -> TransmissionMatrix:
    """Transmission matrix at a single energy (zero diagonal by convention)."""
    require_valid(config)
    T = transmission_batch(config, np.array([float(E)]))[0]
    return TransmissionMatrix(float(E), T)


def _current_integrand(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """Stacked charge/energy current integrands, shape (nE, 2, m)."""
    Es = np.asarray(Es, dtype=float)
    T = transmission_batch(config, Es)
    x = config.betas[None, :] * (Es[:, None] - config.biases[None, :] - config.mus[None, :])
    f = fermi(x)  # (nE, m)
    df = f[:, :, None] - f[:, None, :]
    jdot = np.sum(T * df, axis=2)                       # (nE, m)
    edot = jdot * (Es[:, None] - config.biases[None, :])
    return np.stack([jdot, edot], axis=1)


def lb_currents(config: SystemConfig, quad: QuadratureSpec = QuadratureSpec()) -> SteadyObservables:
    """Steady charge and energy currents into the sample from each lead.

    Integrates the transmission formulas over the band union, split at every
    band edge so each panel is smooth up to sqrt endpoint factors.
    """
    require_valid(config)
    geometry = BandGeometry.from_config(config)
    segs = geometry.union_segments()
    value, err = integrate_segments(lambda E: _current_integrand(config, E), segs,
                                    quad, context="steady currents")
    J = value[0].real
    Ef = value[1].real
    betas, mus = config.betas, config.mus
    sigma = -float(np.sum(betas * (Ef - mus * J)))
    sigma_err = float(np.sum(np.abs(betas) * (err + np.abs(mus) * err)))
    return SteadyObservables(J, Ef, sigma, err, err, sigma_err)


def energy_sum_rule(config: SystemConfig, obs: SteadyObservables) -> float:
    """Conserved combination sum_j (E_j + v_j J_j); zero in any steady state."""
    return float(np.sum(obs.energy_currents + config.biases * obs.charge_currents))


@dataclass(frozen=True)
class EntropyProduction:
    rate: float
    strictly_positive: bool
    observables: SteadyObservables
    error: float


def entropy_production(config: SystemConfig,
                       quad: QuadratureSpec = QuadratureSpec()) -> EntropyProduction:
    """Entropy production rate of the steady state, with a positivity flag.

    The flag reports whether some pair of leads has a non-vanishing
    transmission on its band overlap together with unequal beta or unequal
    v + mu; in that case the rate is strictly positive.
    """
    obs = lb_currents(config, quad)
    geometry = BandGeometry.from_config(config)
    m = config.n_leads
    flag = False
    for j in range(m):
        for k in range(j + 1, m):
            window = geometry.overlap(j, k)
            if window is None:
                continue
            lj, lk = config.leads[j], config.leads[k]
            distinct = (abs(lj.beta - lk.beta) > 0
                        or abs((lj.bias + lj.mu) - (lk.bias + lk.mu)) > 0)
            if not distinct:
                continue
            probe = np.linspace(window[0], window[1], 129)[1:-1]
            if np.max(transmission_batch(config, probe)[:, j, k]) > 1e-12:
                flag = True
                break
        if flag:
            break
    return EntropyProduction(obs.entropy_production, flag, obs, obs.entropy_error)


@dataclass(frozen=True)
class OnsagerMatrix:
    values: np.ndarray        # (m, m)
    step: float
    fd_error: float           # max discrepancy between step and step/2 results


def onsager_matrix(config: SystemConfig, step: Optional[float] = None,
                   quad: QuadratureSpec = QuadratureSpec()) -> OnsagerMatrix:
    """Linear-response matrix L_jk = (1/beta) dJ_j/dmu_k at equilibrium.

    Requires equal beta and mu on all leads and zero biases.  Central finite
    differences in mu_k; the result is taken at step/2 with the coarse-step
    discrepancy reported as the finite-difference error.
    """
    require_valid(config)
    betas, mus = config.betas, config.mus
    if np.ptp(betas) > 0 or np.ptp(mus) > 0 or np.max(np.abs(config.biases)) > 0:
        raise ConfigError("onsager_matrix requires equal beta, equal mu, and zero biases")
    beta = betas[0]
    if step is None:
        step = 1e-4 * config.hopping

    def matrix_at(h: float) -> np.ndarray:
        m = config.n_leads
        L = np.empty((m, m))
        for k in range(m):
            mu_p = mus.copy(); mu_p[k] += h
            mu_m = mus.copy(); mu_m[k] -= h
            Jp = lb_currents(config.with_mus(mu_p), quad).charge_currents
            Jm = lb_currents(config.with_mus(mu_m), quad).charge_currents
            L[:, k] = (Jp - Jm) / (2.0 * h * beta)
        return L

    coarse = matrix_at(step)
    fine = matrix_at(step / 2.0)
    return OnsagerMatrix(fine, step / 2.0, float(np.max(np.abs(fine - coarse))))
