"""Brute-force verification runs on finite-lead truncations.

A semi-infinite lead truncated to L sites supports a transient quasi-steady
window before wavefronts reflect off the far end and return; the fastest
group velocity is 2 c_R, so the recurrence estimate is t_rec = 2L / (2 c_R).
Plateau values extracted from that window are the finite-size surrogate for
the steady state and are the reference every closed formula is pinned
against.

Two engines share the protocol machinery:

* one-particle correlation-matrix evolution (exact for xi = 0, any L),
* full Fock-space evolution by number sector (any xi, dimension-capped).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import fock
from .errors import ConfigError, DimensionCapError
from .model import SystemConfig, effective_single_particle_hamiltonian, require_valid
from .utils import fermi

FOCK_MODE_CAP = 14  # many-body runs: n + m L modes, Fock dimension <= 16384

SWITCHING_PROFILES = ("sudden", "linear_ramp", "smooth_ramp")

_PLATEAU_FLOOR = 1e-9  # slope acceptance floor for plateaus compatible with 0


@dataclass(frozen=True)
class OracleConfig:
    """Protocol knobs for a finite-lead run.

    ramp_time is |t0|, the duration of the switching ramp ending at t = 0
    (ignored for the sudden profile).  ramp_dt is the piecewise-constant
    Hamiltonian step used during the ramp; observables are sampled on the
    output grid dt regardless.
    """

    lead_truncation: int
    dt: float = 0.1
    t_max: Optional[float] = None
    switching: str = "sudden"
    ramp_time: float = 0.0
    ramp_dt: Optional[float] = None
    sample_state: Union[str, np.ndarray] = "half"
    check_ramp_convergence: bool = False
    plateau_fraction: tuple = (0.5, 0.9)

    def __post_init__(self):
        if self.lead_truncation < 1:
            raise ConfigError("lead truncation must be >= 1")
        if self.switching not in SWITCHING_PROFILES:
            raise ConfigError(f"switching {self.switching!r} not in {SWITCHING_PROFILES}")
        if self.switching != "sudden" and not self.ramp_time > 0:
            raise ConfigError("ramped switching requires ramp_time > 0")


@dataclass(frozen=True)
class PlateauSet:
    values: np.ndarray      # (m,) fitted plateau per lead
    slopes: np.ndarray
    converged: np.ndarray   # bool per lead: |slope| * window < 1% of value
    window: tuple


@dataclass(frozen=True)
class OracleRun:
    mode: str               # "free" | "interacting"
    scenario: str
    times: np.ndarray                # output grid, t = 0 is the end of switching
    charge_currents: np.ndarray      # (m, T)
    energy_currents: np.ndarray      # (m, T)
    densities: np.ndarray            # (n_sample, T)
    plateau: PlateauSet
    energy_plateau: PlateauSet
    recurrence_time: float
    particle_drift: float
    hermiticity_drift: float
    ramp_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    ramp_charge_currents: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    metadata: dict = field(default_factory=dict)


def switching_profile(name: str):
    """Coupling factor s(u) on u in [0, 1], rising 0 -> 1 (u = 1 is t = 0)."""
    if name == "linear_ramp":
        return lambda u: np.clip(u, 0.0, 1.0)
    if name == "smooth_ramp":
        def smooth(u):
            u = np.clip(u, 0.0, 1.0)
            return u * u * (3.0 - 2.0 * u)
        return smooth
    return lambda u: np.where(np.asarray(u) >= 1.0, 1.0, 0.0)


def open_chain_modes(L: int, hopping: float):
    """Exact eigenpairs of the L-site open chain with hopping -c."""
    k = np.arange(1, L + 1)
    eigvals = -2.0 * hopping * np.cos(k * np.pi / (L + 1))
    x = np.arange(1, L + 1)
    vecs = np.sqrt(2.0 / (L + 1)) * np.sin(np.outer(x, k) * np.pi / (L + 1))
    return eigvals, vecs


def _sample_block(state: Union[str, np.ndarray], n: int) -> np.ndarray:
    if isinstance(state, str):
        if state == "half":
            return 0.5 * np.eye(n)
        if state == "empty":
            return np.zeros((n, n))
        if state == "full":
            return np.eye(n)
        raise ConfigError(f"unknown sample state {state!r}")
    mat = np.asarray(state, dtype=complex)
    if mat.shape != (n, n):
        raise ConfigError(f"sample state must be {n}x{n}")
    ev = np.linalg.eigvalsh(mat)
    if ev.min() < -1e-10 or ev.max() > 1.0 + 1e-10:
        raise ConfigError("sample state must have occupation eigenvalues in [0, 1]")
    return mat


def _initial_correlation(config: SystemConfig, L: int,
                         sample_state: Union[str, np.ndarray]) -> np.ndarray:
    """One-particle density of the initial state on the truncated geometry.

    Partitioned: decoupled product -- the given sample block and each lead in
    its own grand-canonical state with respect to the unbiased chain.
    Partition-free: joint equilibrium of the coupled, unbiased Hamiltonian at
    the common (beta, mu).
    """
    n, m = config.n_sites, config.n_leads
    dim = n + m * L
    if config.scenario == "partition_free":
        beta = config.eq_beta if config.eq_beta is not None else config.leads[0].beta
        mu = config.eq_mu if config.eq_mu is not None else config.leads[0].mu
        h0 = effective_single_particle_hamiltonian(config, L, include_bias=False)
        w, V = np.linalg.eigh(h0)
        return (V * fermi(beta * (w - mu))) @ V.conj().T

    C = np.zeros((dim, dim), dtype=complex)
    C[:n, :n] = _sample_block(sample_state, n)
    ev, vecs = open_chain_modes(L, config.hopping)
    for j, ld in enumerate(config.leads):
        occ = fermi(ld.beta * (ev - ld.mu))
        block = (vecs * occ) @ vecs.T
        a = n + j * L
        C[a:a + L, a:a + L] = block
    return C


def _fit_plateau(times: np.ndarray, series: np.ndarray, window: tuple) -> PlateauSet:
    """Least-squares constant+slope fit of each row of series over the window.

    A plateau is accepted when |slope| * window_length is below 1% of the
    fitted value (with an absolute floor so exact zeros pass).
    """
    t0, t1 = window
    mask = (times >= t0) & (times <= t1)
    if np.count_nonzero(mask) < 4:
        raise ConfigError(f"plateau window {window} contains fewer than 4 samples")
    t = times[mask]
    y = series[:, mask]
    tc = t - t.mean()
    denom = np.sum(tc * tc)
    values = y.mean(axis=1)
    slopes = (y @ tc) / denom
    drift = np.abs(slopes) * (t1 - t0)
    converged = drift <= 0.01 * np.maximum(np.abs(values), _PLATEAU_FLOOR)
    return PlateauSet(values, slopes, converged, (float(t0), float(t1)))


def _plateau_window(recurrence: float, ramp: float, fraction: tuple) -> tuple:
    """Window in output time (t = 0 at ramp end), shifted by wavefronts
    launched throughout the ramp."""
    w0 = max(fraction[0] * recurrence - ramp, 0.05 * recurrence)
    w1 = fraction[1] * recurrence - ramp
    if w1 <= w0:
        raise ConfigError(
            f"ramp of {ramp:g} leaves no plateau window before the recurrence "
            f"estimate {recurrence:g}; increase the lead truncation")
    return (w0, w1)


def _observable_vectors(config: SystemConfig, L: int):
    """(u, w, scale) triples whose Im<u|rho_t|w> time series are the outputs.

    Charge current j:  -2 d_j Im <phi_j| rho_t |contact_j>
    Energy current j:  +2 c d_j Im <phi_j| rho_t |contact_j + 1>
    """
    n, m = config.n_sites, config.n_leads
    dim = n + m * L
    pairs = []
    for j, ld in enumerate(config.leads):
        u = np.zeros(dim, dtype=complex)
        u[:n] = ld.coupling_vector
        wv = np.zeros(dim, dtype=complex)
        wv[n + j * L] = 1.0
        pairs.append((u, wv, -2.0 * ld.coupling))
    for j, ld in enumerate(config.leads):
        u = np.zeros(dim, dtype=complex)
        u[:n] = ld.coupling_vector
        wv = np.zeros(dim, dtype=complex)
        if L >= 2:
            wv[n + j * L + 1] = 1.0
        pairs.append((u, wv, 2.0 * config.hopping * ld.coupling))
    return pairs


def _free_series(lam, V, C0, pairs, times):
    """Time series <u|e^{-ith} C0 e^{ith}|w> for each (u, w) pair."""
    Ct = V.conj().T @ C0 @ V
    P = np.exp(1j * np.outer(lam, times))
    out = []
    for u, wv, _scale in pairs:
        ut = V.conj().T @ u
        wt = V.conj().T @ wv
        M = np.outer(ut.conj(), wt) * Ct
        out.append(np.sum(P.conj() * (M @ P), axis=0))
    return out, Ct, P


def _free_observables(config, L, lam, V, C0, times):
    """Currents and sample densities on the output grid, plus drift checks."""
    n, m = config.n_sites, config.n_leads
    pairs = _observable_vectors(config, L)
    series, Ct, P = _free_series(lam, V, C0, pairs, times)
    charge = np.array([sc * s.imag for (_, _, sc), s in zip(pairs[:m], series[:m])])
    energy = np.array([sc * s.imag for (_, _, sc), s in zip(pairs[m:], series[m:])])

    dens_pairs = []
    dim = n + m * L
    for x in range(n):
        e = np.zeros(dim, dtype=complex)
        e[x] = 1.0
        dens_pairs.append((e, e, 1.0))
    dens_series, _, _ = _free_series(lam, V, C0, dens_pairs, times)
    densities = np.array([s.real for s in dens_series])

    # unitarity checks at a few checkpoint times, via the full evolved matrix
    drift = 0.0
    herm = 0.0
    total0 = float(np.trace(C0).real)
    for t in (times[0], times[len(times) // 2], times[-1]):
        ph = np.exp(-1j * lam * t)
        Cfull = (V * ph) @ Ct @ (V * ph).conj().T
        drift = max(drift, abs(float(np.trace(Cfull).real) - total0))
        herm = max(herm, float(np.max(np.abs(Cfull - Cfull.conj().T))))
    return charge, energy, densities, drift, herm


def evolve_free(config: SystemConfig, ocfg: OracleConfig) -> OracleRun:
    """Exact one-particle evolution of the truncated system (xi = 0 dynamics).

    Sudden protocol: the initial state is released under the full biased
    Hamiltonian at t = 0.  Rejects t_max beyond the recurrence estimate.
    """
    require_valid(config)
    L = ocfg.lead_truncation
    recurrence = 2.0 * L / (2.0 * config.hopping)
    t_end = ocfg.t_max if ocfg.t_max is not None else ocfg.plateau_fraction[1] * recurrence
    if t_end > recurrence + 1e-9:
        raise ConfigError(f"t_max {t_end:g} exceeds the recurrence estimate {recurrence:g}")
    times = np.arange(0.0, t_end + 0.5 * ocfg.dt, ocfg.dt)

    h = effective_single_particle_hamiltonian(config, L)
    lam, V = np.linalg.eigh(h)
    C0 = _initial_correlation(config, L, ocfg.sample_state)
    charge, energy, dens, drift, herm = _free_observables(config, L, lam, V, C0, times)

    window = _plateau_window(recurrence, 0.0, ocfg.plateau_fraction)
    return OracleRun(
        mode="free", scenario=config.scenario, times=times,
        charge_currents=charge, energy_currents=energy, densities=dens,
        plateau=_fit_plateau(times, charge, window),
        energy_plateau=_fit_plateau(times, energy, window),
        recurrence_time=recurrence, particle_drift=drift, hermiticity_drift=herm,
        metadata={"lead_truncation": L, "switching": "sudden"},
    )


# -- many-body engine ---------------------------------------------------------


def _fock_dimension_guard(config: SystemConfig, L: int) -> int:
    n_modes = config.n_sites + config.n_leads * L
    if n_modes > FOCK_MODE_CAP:
        raise DimensionCapError(
            f"{n_modes} one-particle modes exceed the many-body cap of "
            f"{FOCK_MODE_CAP} (Fock dimension 2^{n_modes})")
    return n_modes


def _embedded_pair_potential(config: SystemConfig, dim: int) -> np.ndarray:
    w = np.zeros((dim, dim))
    n = config.n_sites
    w[:n, :n] = config.sample.pair_potential
    return w


def _partitioned_weight_matrix(config: SystemConfig, L: int,
                               sample_state: Union[str, np.ndarray]) -> np.ndarray:
    """One-particle matrix q with initial state proportional to e^{-dGamma(q)}.

    Lead blocks are beta_j (h_chain - mu_j); the sample block is
    log((1 - rho_S)/rho_S) of the requested sample density (0 for the
    tracial half-filled block), with occupations clamped away from 0 and 1.
    """
    n, m = config.n_sites, config.n_leads
    dim = n + m * L
    q = np.zeros((dim, dim), dtype=complex)
    rho_s = _sample_block(sample_state, n)
    ev, vecs = np.linalg.eigh(rho_s)
    p = np.clip(ev, 1e-12, 1.0 - 1e-12)
    q[:n, :n] = (vecs * np.log((1.0 - p) / p)) @ vecs.conj().T
    idx = np.arange(L)
    for j, ld in enumerate(config.leads):
        a = n + j * L
        block = np.zeros((L, L))
        block[idx[:-1], idx[1:]] = -config.hopping
        block[idx[1:], idx[:-1]] = -config.hopping
        q[a:a + L, a:a + L] = ld.beta * (block - ld.mu * np.eye(L))
    return q


class _ManyBodySectors:
    """Per-sector dense operators for one truncated geometry."""

    def __init__(self, config: SystemConfig, L: int):
        self.config = config
        self.L = L
        self.n_modes = _fock_dimension_guard(config, L)
        self.states = [fock.sector_states(self.n_modes, k) for k in range(self.n_modes + 1)]
        self.xi = config.sample.interaction_strength
        self._wdiag = None

    def pair_diag(self, k: int) -> np.ndarray:
        if self._wdiag is None:
            w = _embedded_pair_potential(self.config, self.n_modes)
            self._wdiag = [fock.pair_interaction_diag(st, w) for st in self.states]
        return self._wdiag[k]

    def hamiltonian(self, k: int, h_one: np.ndarray, xi: Optional[float] = None) -> np.ndarray:
        xi = self.xi if xi is None else xi
        H = fock.one_body_operator(self.states[k], h_one)
        if xi != 0.0:
            H[np.arange(H.shape[0]), np.arange(H.shape[0])] += xi * self.pair_diag(k)
        return H

    def initial_blocks(self) -> list[np.ndarray]:
        """Initial density-matrix blocks per sector, normalized over all sectors."""
        config, L = self.config, self.L
        spectra = []
        if config.scenario == "partition_free":
            beta = config.eq_beta if config.eq_beta is not None else config.leads[0].beta
            mu = config.eq_mu if config.eq_mu is not None else config.leads[0].mu
            h0 = effective_single_particle_hamiltonian(config, L, include_bias=False)
            for k in range(self.n_modes + 1):
                Hk = self.hamiltonian(k, h0)
                wk, Vk = np.linalg.eigh(Hk)
                spectra.append((beta * (wk - mu * k), Vk))
        else:
            q = _partitioned_weight_matrix(config, L, "half")
            for k in range(self.n_modes + 1):
                Qk = fock.one_body_operator(self.states[k], q)
                wk, Vk = np.linalg.eigh(Qk)
                spectra.append((wk, Vk))
        shift = min(w.min() for w, _ in spectra)
        Z = sum(np.sum(np.exp(-(w - shift))) for w, _ in spectra)
        return [(Vk * (np.exp(-(wk - shift)) / Z)) @ Vk.conj().T for wk, Vk in spectra]

    def observable_one_body(self) -> list[tuple[np.ndarray, float]]:
        config, L = self.config, self.L
        n, m = config.n_sites, config.n_leads
        dim = self.n_modes
        ops = []
        for j, ld in enumerate(config.leads):
            a = n + j * L
            op = np.zeros((dim, dim), dtype=complex)
            op[a, :n] = 1j * ld.coupling * ld.coupling_vector.conj()
            op[:n, a] = -1j * ld.coupling * ld.coupling_vector
            ops.append((op, 1.0))
        for j, ld in enumerate(config.leads):
            op = np.zeros((dim, dim), dtype=complex)
            if L >= 2:
                b = n + j * L + 1
                op[b, :n] = -1j * config.hopping * ld.coupling * ld.coupling_vector.conj()
                op[:n, b] = 1j * config.hopping * ld.coupling * ld.coupling_vector
            ops.append((op, 1.0))
        return ops


def _sector_series(lam, V, rho0, obs_mats, times):
    """Tr(rho(t) O) per observable for one sector."""
    rho_t = V.conj().T @ rho0 @ V
    P = np.exp(1j * np.outer(lam, times))
    out = []
    for O in obs_mats:
        Ot = V.conj().T @ O @ V
        M = rho_t * Ot.T
        out.append(np.sum(P.conj() * (M @ P), axis=0))
    return out


def evolve_interacting(config: SystemConfig, ocfg: OracleConfig) -> OracleRun:
    """Exact Fock-space evolution (any xi within the dimension cap).

    The initial density matrix is block-diagonal in total particle number and
    stays so; each sector is evolved by exact diagonalization.
    """
    require_valid(config)
    L = ocfg.lead_truncation
    sectors = _ManyBodySectors(config, L)
    recurrence = 2.0 * L / (2.0 * config.hopping)
    t_end = ocfg.t_max if ocfg.t_max is not None else ocfg.plateau_fraction[1] * recurrence
    if t_end > recurrence + 1e-9:
        raise ConfigError(f"t_max {t_end:g} exceeds the recurrence estimate {recurrence:g}")
    times = np.arange(0.0, t_end + 0.5 * ocfg.dt, ocfg.dt)

    if config.scenario == "partitioned" and not (
            isinstance(ocfg.sample_state, str) and ocfg.sample_state == "half"):
        q = _partitioned_weight_matrix(config, L, ocfg.sample_state)
        blocks = _gibbs_blocks_from_weight(sectors, q)
    else:
        blocks = sectors.initial_blocks()

    h_dyn = effective_single_particle_hamiltonian(config, L)
    obs = sectors.observable_one_body()
    n, m = config.n_sites, config.n_leads
    nobs = len(obs)
    acc = [np.zeros(times.size, dtype=complex) for _ in range(nobs)]
    dens = np.zeros((n, times.size))
    trace_total = 0.0
    herm = 0.0
    for k in range(sectors.n_modes + 1):
        rho0 = blocks[k]
        trace_total += float(np.trace(rho0).real)
        Hk = sectors.hamiltonian(k, h_dyn)
        lam, V = np.linalg.eigh(Hk)
        obs_mats = [fock.one_body_operator(sectors.states[k], op) for op, _ in obs]
        series = _sector_series(lam, V, rho0, obs_mats, times)
        for i in range(nobs):
            acc[i] += series[i]
        occ = fock.occupancy(sectors.states[k], sectors.n_modes)[:, :n]
        rho_t = V.conj().T @ rho0 @ V
        P = np.exp(1j * np.outer(lam, times))
        for x in range(n):
            M = rho_t * (V.conj().T @ (occ[:, x][:, None] * V)).T
            dens[x] += np.sum(P.conj() * (M @ P), axis=0).real
        tmid = times[-1]
        ph = np.exp(-1j * lam * tmid)
        rho_end = (V * ph) @ rho_t @ (V * ph).conj().T
        herm = max(herm, float(np.max(np.abs(rho_end - rho_end.conj().T))))

    charge = np.array([acc[j].real for j in range(m)])
    energy = np.array([acc[m + j].real for j in range(m)])
    window = _plateau_window(recurrence, 0.0, ocfg.plateau_fraction)
    return OracleRun(
        mode="interacting", scenario=config.scenario, times=times,
        charge_currents=charge, energy_currents=energy, densities=dens,
        plateau=_fit_plateau(times, charge, window),
        energy_plateau=_fit_plateau(times, energy, window),
        recurrence_time=recurrence,
        particle_drift=abs(trace_total - 1.0),
        hermiticity_drift=herm,
        metadata={"lead_truncation": L, "switching": "sudden",
                  "fock_modes": sectors.n_modes},
    )


def _gibbs_blocks_from_weight(sectors: _ManyBodySectors, q: np.ndarray) -> list[np.ndarray]:
    spectra = []
    for k in range(sectors.n_modes + 1):
        Qk = fock.one_body_operator(sectors.states[k], q)
        wk, Vk = np.linalg.eigh(Qk)
        spectra.append((wk, Vk))
    shift = min(w.min() for w, _ in spectra)
    Z = sum(np.sum(np.exp(-(w - shift))) for w, _ in spectra)
    return [(Vk * (np.exp(-(wk - shift)) / Z)) @ Vk.conj().T for wk, Vk in spectra]


# -- adiabatic switching -------------------------------------------------------


def _ramp_hamiltonian_free(config: SystemConfig, L: int, s: float) -> np.ndarray:
    """Switched one-particle Hamiltonian: coupling for the partitioning
    scenario, bias for the partition-free one."""
    if config.scenario == "partition_free":
        h = effective_single_particle_hamiltonian(config, L, include_bias=False)
        n = config.n_sites
        for j, ld in enumerate(config.leads):
            a = n + j * L
            h[np.arange(a, a + L), np.arange(a, a + L)] += s * ld.bias
        return h
    return effective_single_particle_hamiltonian(config, L, coupling_scale=s)


def evolve_adiabatic(config: SystemConfig, ocfg: OracleConfig) -> OracleRun:
    """Switch the coupling (partitioned) or the bias (partition-free) over a
    ramp of duration ramp_time ending at t = 0, then run freely and extract
    the plateau.

    The ramp is integrated with piecewise-constant Hamiltonian steps (exact
    exponentials, no splitting error beyond the piecewise-constancy); with
    check_ramp_convergence the ramp is re-run at half the step and the
    plateau shift is recorded in metadata (flagged above 0.1%).
    """
    require_valid(config)
    if ocfg.switching == "sudden":
        run = (evolve_free(config, ocfg) if config.sample.interaction_strength == 0.0
               else evolve_interacting(config, ocfg))
        run.metadata["switching"] = "sudden"
        return run

    run = _evolve_adiabatic_once(config, ocfg)
    if ocfg.check_ramp_convergence:
        finer = replace(ocfg, ramp_dt=_ramp_step(ocfg) / 2.0, check_ramp_convergence=False)
        run2 = _evolve_adiabatic_once(config, finer)
        scale = np.maximum(np.abs(run2.plateau.values), _PLATEAU_FLOOR)
        shift = float(np.max(np.abs(run.plateau.values - run2.plateau.values) / scale))
        run2.metadata["ramp_dt_shift"] = shift
        run2.metadata["ramp_dt_converged"] = bool(shift < 1e-3)
        return run2
    return run


def _ramp_step(ocfg: OracleConfig) -> float:
    if ocfg.ramp_dt is not None:
        return ocfg.ramp_dt
    # midpoint piecewise-constant stepping is second order in the step and
    # the ramps are smooth; 100 steps leaves the splitting error far below
    # plateau resolution
    return ocfg.ramp_time / 100.0


def _evolve_adiabatic_once(config: SystemConfig, ocfg: OracleConfig) -> OracleRun:
    L = ocfg.lead_truncation
    recurrence = 2.0 * L / (2.0 * config.hopping)
    window = _plateau_window(recurrence, ocfg.ramp_time, ocfg.plateau_fraction)
    t_end = ocfg.t_max if ocfg.t_max is not None else window[1]
    if t_end > recurrence - ocfg.ramp_time + 1e-9:
        raise ConfigError(
            f"t_max {t_end:g} exceeds the post-ramp recurrence budget "
            f"{recurrence - ocfg.ramp_time:g}")
    times = np.arange(0.0, t_end + 0.5 * ocfg.dt, ocfg.dt)
    profile = switching_profile(ocfg.switching)
    dt_h = _ramp_step(ocfg)
    n_steps = max(1, int(np.ceil(ocfg.ramp_time / dt_h)))
    step = ocfg.ramp_time / n_steps
    interacting = config.sample.interaction_strength != 0.0

    if not interacting:
        C = _initial_correlation(config, L, ocfg.sample_state)
        m = config.n_leads
        pairs = _observable_vectors(config, L)
        ramp_ts = np.empty(n_steps)
        ramp_j = np.empty((m, n_steps))
        for kstep in range(n_steps):
            tmid = -ocfg.ramp_time + (kstep + 0.5) * step
            s = float(profile((tmid + ocfg.ramp_time) / ocfg.ramp_time))
            hk = _ramp_hamiltonian_free(config, L, s)
            lamk, Vk = np.linalg.eigh(hk)
            U = (Vk * np.exp(-1j * lamk * step)) @ Vk.conj().T
            C = U @ C @ U.conj().T
            ramp_ts[kstep] = tmid + 0.5 * step
            for j in range(m):
                u, wv, sc = pairs[j]
                ramp_j[j, kstep] = sc * np.imag(u.conj() @ C @ wv)
        h = _ramp_hamiltonian_free(config, L, 1.0)
        lam, V = np.linalg.eigh(h)
        charge, energy, dens, drift, herm = _free_observables(config, L, lam, V, C, times)
        run_mode = "free"
        fock_modes = None
    else:
        sectors = _ManyBodySectors(config, L)
        m = config.n_leads
        n = config.n_sites
        blocks = (sectors.initial_blocks()
                  if (isinstance(ocfg.sample_state, str) and ocfg.sample_state == "half")
                  or config.scenario == "partition_free"
                  else _gibbs_blocks_from_weight(
                      sectors, _partitioned_weight_matrix(config, L, ocfg.sample_state)))
        obs = sectors.observable_one_body()
        ramp_ts = (np.arange(n_steps) + 1.0) * step - ocfg.ramp_time
        ramp_j = np.zeros((m, n_steps))
        acc = [np.zeros(times.size, dtype=complex) for _ in range(len(obs))]
        dens = np.zeros((n, times.size))
        trace_total = 0.0
        herm = 0.0
        for k in range(sectors.n_modes + 1):
            rho = blocks[k].copy()
            trace_total += float(np.trace(rho).real)
            obs_mats = [fock.one_body_operator(sectors.states[k], op) for op, _ in obs]
            for kstep in range(n_steps):
                tmid = -ocfg.ramp_time + (kstep + 0.5) * step
                s = float(profile((tmid + ocfg.ramp_time) / ocfg.ramp_time))
                h_one = _ramp_hamiltonian_free(config, L, s)
                Hk = sectors.hamiltonian(k, h_one)
                lamk, Vk = np.linalg.eigh(Hk)
                U = (Vk * np.exp(-1j * lamk * step)) @ Vk.conj().T
                rho = U @ rho @ U.conj().T
                for j in range(m):
                    ramp_j[j, kstep] += float(np.trace(rho @ obs_mats[j]).real)
            H_final = sectors.hamiltonian(k, _ramp_hamiltonian_free(config, L, 1.0))
            lam, V = np.linalg.eigh(H_final)
            series = _sector_series(lam, V, rho, obs_mats, times)
            for i in range(len(obs)):
                acc[i] += series[i]
            occ = fock.occupancy(sectors.states[k], sectors.n_modes)[:, :n]
            rho_t = V.conj().T @ rho @ V
            P = np.exp(1j * np.outer(lam, times))
            for x in range(n):
                M = rho_t * (V.conj().T @ (occ[:, x][:, None] * V)).T
                dens[x] += np.sum(P.conj() * (M @ P), axis=0).real
            herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
        charge = np.array([acc[j].real for j in range(m)])
        energy = np.array([acc[m + j].real for j in range(m)])
        drift = abs(trace_total - 1.0)
        run_mode = "interacting"
        fock_modes = sectors.n_modes

    meta = {"lead_truncation": L, "switching": ocfg.switching,
            "ramp_time": ocfg.ramp_time, "ramp_dt": step}
    if fock_modes is not None:
        meta["fock_modes"] = fock_modes
    return OracleRun(
        mode=run_mode, scenario=config.scenario, times=times,
        charge_currents=charge, energy_currents=energy, densities=dens,
        plateau=_fit_plateau(times, charge, window),
        energy_plateau=_fit_plateau(times, energy, window),
        recurrence_time=recurrence, particle_drift=drift, hermiticity_drift=herm,
        ramp_times=ramp_ts, ramp_charge_currents=ramp_j, metadata=meta,
    )


# -- initial-state independence ------------------------------------------------


@dataclass(frozen=True)
class IndependenceReport:
    labels: tuple
    plateaus: np.ndarray      # (n_states, m)
    spread: np.ndarray        # (m,) max pairwise |difference| per lead
    relative_spread: float    # spread / scale, worst lead with nonzero current

    def to_dict(self) -> dict:
        return {
            "states": list(self.labels),
            "plateaus": self.plateaus.tolist(),
            "spread": self.spread.tolist(),
            "relative_spread": self.relative_spread,
        }


def initial_state_independence(config: SystemConfig, ocfg: OracleConfig,
                               sample_states: Sequence = ("empty", "half", "full"),
                               rng: Optional[np.random.Generator] = None) -> IndependenceReport:
    """Re-run the oracle with different initial sample states and compare
    plateaus.  The steady state forgets the sample preparation, so the spread
    must shrink with the lead truncation.

    The label "random" draws a valid random density matrix from rng.
    """
    require_valid(config)
    if config.scenario != "partitioned":
        raise ConfigError("initial-state independence is a partitioned-scenario check")
    n = config.n_sites
    labels = []
    plateaus = []
    for state in sample_states:
        if isinstance(state, str) and state == "random":
            gen = rng if rng is not None else np.random.default_rng(0)
            A = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
            Hr = (A + A.conj().T) / 2.0
            wv, Vv = np.linalg.eigh(Hr)
            occ = gen.uniform(0.05, 0.95, size=n)
            mat = (Vv * occ) @ Vv.conj().T
            labels.append("random")
            state = mat
        else:
            labels.append(state if isinstance(state, str) else "matrix")
        run_cfg = replace(ocfg, sample_state=state)
        run = (evolve_free(config, run_cfg)
               if config.sample.interaction_strength == 0.0
               else evolve_interacting(config, run_cfg))
        plateaus.append(run.plateau.values)
    plateaus = np.array(plateaus)
    spread = plateaus.max(axis=0) - plateaus.min(axis=0)
    scale = np.abs(plateaus).max(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > _PLATEAU_FLOOR, spread / scale, 0.0)
    return IndependenceReport(tuple(labels), plateaus, spread, float(np.max(rel)))
