"""Steady-state two-point functions and Green-Keldysh correlators (xi = 0).

The non-interacting steady state is quasi-free with one-particle density

    rho = sum_j  int_{band_j} f_j(E) |chi_j(E)><chi_j(E)| dE,

where chi_j(E) is the scattering eigenfunction of the coupled one-body
Hamiltonian fed by lead j at energy E and f_j(E) = fermi(beta_j (E - v_j -
mu_j)).  On the sample, chi_j(E) = -d_j psi_j(0; E) m(E) phi_j with m(E) the
sample resolvent; on lead sites it is the free lead wave plus the scattered
wave expressed through the explicit lead resolvent.  All correlators below
are energy integrals of these amplitudes, so sample and lead sites are
treated uniformly.

Green-Keldysh functions are taken in the stationary state with the second
time fixed at zero:

    G_lesser(t; x, y)  =  i <a_y^* a_x(t)>,
    G_greater(t; x, y) = -i <a_x(t) a_y^*>,
    G_retarded(t)      =  i theta(-t) A(t),   G_advanced(t) = -i theta(t) A(t),

with A(t; x, y) = <delta_x| e^{-i t h} |delta_y> the (state-independent)
anticommutator kernel.  Frequency transforms use

    Ghat(omega) = int G(t) e^{+i omega t} dt,

which places the support of Ghat_lesser on the physical lead bands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, UndecayedWindowError
from .leads import BandGeometry, lead_resolvent_entry
from .model import SystemConfig, require_valid
from .quadrature import QuadratureSpec, integrate_segments
from .transport import resolvent_columns
from .utils import fermi

Site = Union[int, tuple]

GREEN_KINDS = ("lesser", "greater", "retarded", "advanced")


def normalize_site(site: Site, config: SystemConfig) -> tuple:
    """Canonical site key: ('S', x) for sample, ('L', j, x) for lead sites."""
    if isinstance(site, (int, np.integer)):
        if not 0 <= site < config.n_sites:
            raise ConfigError(f"sample site {site} out of range 0..{config.n_sites - 1}")
        return ("S", int(site))
    if isinstance(site, tuple):
        if len(site) == 2 and site[0] == "S":
            return normalize_site(site[1], config)
        if len(site) == 3 and site[0] == "L":
            site = site[1:]
        if len(site) == 2:
            j, x = int(site[0]), int(site[1])
            if not 0 <= j < config.n_leads:
                raise ConfigError(f"lead index {j} out of range 0..{config.n_leads - 1}")
            if x < 0:
                raise ConfigError(f"lead site {x} must be >= 0")
            return ("L", j, x)
    raise ConfigError(f"cannot interpret site {site!r}")


def parse_site(text: str) -> Site:
    """Parse a CLI site label: 'k' is sample site k, 'j:x' is lead j site x."""
    if ":" in text:
        j, x = text.split(":", 1)
        return (int(j), int(x))
    return int(text)


def site_label(site: Site) -> str:
    return f"{site[0]}:{site[1]}" if isinstance(site, tuple) else str(site)


def _channel_amplitudes(config: SystemConfig, Es: np.ndarray,
                        sites: Sequence[tuple]) -> np.ndarray:
    """Scattering amplitudes chi_j(E)[site], shape (nE, m, n_sites).

    Channel j vanishes identically for E outside the band of lead j.
    """
    Es = np.asarray(Es, dtype=float)
    m = config.n_leads
    c = config.hopping
    d = config.couplings

    X = resolvent_columns(config, Es)                     # (nE, n, m)
    Phi = config.coupling_matrix
    M = np.einsum("xk,exj->ekj", Phi.conj(), X)           # <phi_k| m |phi_j>

    # contact-site magnitude of the energy-normalized lead wave
    u = (Es[:, None] - config.biases[None, :]) / (2.0 * c)
    inband = np.abs(u) < 1.0
    sin_th = np.sqrt(np.clip(1.0 - u ** 2, 0.0, None))
    psi0 = np.where(inband, np.sqrt(sin_th / (np.pi * c)), 0.0)   # (nE, m)

    out = np.zeros((Es.size, m, len(sites)), dtype=complex)
    for s, key in enumerate(sites):
        if key[0] == "S":
            x = key[1]
            out[:, :, s] = -d[None, :] * psi0 * X[:, x, :]
        else:
            _, k, x = key
            res = lead_resolvent_entry(x, 0, Es, config.leads[k].bias, c)  # (nE,)
            out[:, :, s] = (d[None, :] * d[k] * psi0) * res[:, None] * M[:, k, :]
            # free wave of the feeding lead: sin((x+1) theta') energy-normalized
            theta_p = np.arccos(np.clip(-u[:, k], -1.0, 1.0))
            wave = np.where(inband[:, k],
                            np.sin((x + 1) * theta_p)
                            / np.sqrt(np.pi * c * np.maximum(sin_th[:, k], 1e-300)),
                            0.0)
            out[:, k, s] += wave
    return out


def _occupations(config: SystemConfig, Es: np.ndarray) -> np.ndarray:
    """Initial lead occupations f_j(E) on a batch of energies, (nE, m)."""
    Es = np.asarray(Es, dtype=float)
    x = config.betas[None, :] * (Es[:, None] - config.biases[None, :] - config.mus[None, :])
    return fermi(x)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Two-point matrix <a_y^* a_x> on an explicit site set."""

    sites: tuple
    values: np.ndarray          # (ns, ns), entry [x, y] = <a_y^* a_x>
    error: float                # quadrature error estimate
    # measure convention of the underlying energy integral; the equilibrium
    # Fermi-matrix calibration fixes the prefactor to exactly 1
    normalization: str = "spectral_factor * dE / sqrt(2*pi)"

    def index(self, site: Site) -> int:
        key = site if isinstance(site, tuple) and len(site) == 3 else None
        for i, s in enumerate(self.sites):
            if s == site or s == key:
                return i
        raise KeyError(f"site {site!r} not in correlation matrix")


def _density_sites(config: SystemConfig, sites) -> list:
    return [normalize_site(s, config) for s in sites]


def ness_density_matrix(config: SystemConfig, sites: Sequence[Site],
                        quad: QuadratureSpec = QuadratureSpec()) -> CorrelationMatrix:
    """Steady-state density matrix on the requested sites (xi = 0 only).

    Sites may mix sample indices and (lead, site) pairs; the result is
    Hermitian with spectrum in [0, 1].
    """
    require_valid(config)
    if config.sample.interaction_strength != 0.0:
        raise ConfigError("ness_density_matrix requires xi = 0 "
                          "(interacting reference values come from the oracle)")
    keys = _density_sites(config, sites)
    geometry = BandGeometry.from_config(config)

    def integrand(Es):
        A = _channel_amplitudes(config, Es, keys)
        f = _occupations(config, Es)
        return np.einsum("ej,ejx,ejy->exy", f, A, A.conj())

    value, err = integrate_segments(integrand, geometry.union_segments(), quad,
                                    context="ness density matrix")
    return CorrelationMatrix(tuple(keys), value, err)


@dataclass(frozen=True)
class GreensFunction:
    kind: str
    x: tuple
    y: tuple
    times: np.ndarray
    values: np.ndarray
    error: float
    frequencies: Optional[np.ndarray] = None
    freq_values: Optional[np.ndarray] = None


def _spectral_time_integral(config, ts, x, y, weight, quad):
    """sum_j int w_j(E) chi_j(x) chi_j(y)^* e^{-i t E} dE over the band union."""
    keys = [normalize_site(x, config), normalize_site(y, config)]
    geometry = BandGeometry.from_config(config)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    def integrand(Es):
        A = _channel_amplitudes(config, Es, keys)
        w = weight(_occupations(config, Es))                  # (nE, m)
        kern = np.einsum("ej,ej,ej->e", w, A[:, :, 0], A[:, :, 1].conj())
        return np.exp(-1j * np.outer(Es, ts)) * kern[:, None]

    value, err = integrate_segments(integrand, geometry.union_segments(), quad,
                                    context="green function")
    return value, err


def green_function(config: SystemConfig, kind: str, ts, x: Site, y: Site,
                   quad: QuadratureSpec = QuadratureSpec()) -> GreensFunction:
    """Green-Keldysh function of the steady state at xi = 0.

    kind is one of 'lesser', 'greater', 'retarded', 'advanced'.  At t = 0 the
    step function in the retarded/advanced kinds is taken as 1/2, so the
    identity G_retarded - G_advanced = G_lesser - G_greater holds pointwise
    including t = 0.
    """
    require_valid(config)
    if config.sample.interaction_strength != 0.0:
        raise ConfigError("green_function requires xi = 0")
    if kind not in GREEN_KINDS:
        raise ConfigError(f"unknown Green function kind {kind!r}")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    if kind == "lesser":
        val, err = _spectral_time_integral(config, ts, x, y, lambda f: f, quad)
        val = 1j * val
    elif kind == "greater":
        val, err = _spectral_time_integral(config, ts, x, y, lambda f: 1.0 - f, quad)
        val = -1j * val
    else:
        val, err = _spectral_time_integral(config, ts, x, y, np.ones_like, quad)
        if kind == "retarded":
            step = np.where(ts < 0, 1.0, np.where(ts > 0, 0.0, 0.5))
            val = 1j * step * val
        else:
            step = np.where(ts > 0, 1.0, np.where(ts < 0, 0.0, 0.5))
            val = -1j * step * val
    return GreensFunction(kind, normalize_site(x, config), normalize_site(y, config),
                          ts, val, err)


def lesser_green(config: SystemConfig, t, x: Site, y: Site,
                 quad: QuadratureSpec = QuadratureSpec()):
    """G_lesser(t; x, y); scalar t gives a scalar value."""
    gf = green_function(config, "lesser", np.atleast_1d(t), x, y, quad)
    return gf.values[0] if np.isscalar(t) else gf.values


def charge_density(config: SystemConfig, x: Site,
                   quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Steady-state occupation of a site, Im G_lesser(0; x, x)."""
    return float(np.imag(lesser_green(config, 0.0, x, x, quad)))


def steady_current_from_lesser(config: SystemConfig, lead: int,
                               quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Charge current into the sample from one lead, via the contact G_lesser.

    Evaluates -2 d_j Re sum_x G_lesser(0; contact_j, x) phi_j(x); this is an
    independent route to the same number as the transmission-integral
    current.
    """
    require_valid(config)
    if not 0 <= lead < config.n_leads:
        raise ConfigError(f"lead index {lead} out of range")
    ld = config.leads[lead]
    n = config.n_sites
    sites = [("L", lead, 0)] + [("S", x) for x in range(n)]
    rho = ness_density_matrix(config, sites, quad)
    glesser_row = 1j * rho.values[0, 1:]     # G_lesser(0; contact, x) = i <a_x^* a_contact>
    return float(-2.0 * ld.coupling * np.real(np.sum(glesser_row * ld.coupling_vector)))


def lesser_fourier_direct(config: SystemConfig, omegas, x: Site, y: Site) -> np.ndarray:
    """Frequency-space lesser function, evaluated from the spectral integrand.

    Ghat_lesser(omega) = 2 pi i f_j(omega) * (channel spectral density at
    omega); identically zero for omega outside every lead band.
    """
    require_valid(config)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    keys = [normalize_site(x, config), normalize_site(y, config)]
    geometry = BandGeometry.from_config(config)
    out = np.zeros(omegas.shape, dtype=complex)
    inside = np.zeros(omegas.shape, dtype=bool)
    for j in range(config.n_leads):
        lo, hi = geometry.band(j)
        inside |= (omegas > lo) & (omegas < hi)
    if np.any(inside):
        A = _channel_amplitudes(config, omegas[inside], keys)
        f = _occupations(config, omegas[inside])
        out[inside] = 2j * np.pi * np.einsum("ej,ej,ej->e", f, A[:, :, 0], A[:, :, 1].conj())
    return out


def fourier_transform(gf: GreensFunction, omegas,
                      decay_fraction: float = 1e-6) -> GreensFunction:
    """Windowed transform Ghat(omega) = int G(t) e^{+i omega t} dt of sampled data.

    Refuses windows whose endpoint magnitudes exceed decay_fraction of the
    peak, since the plain trapezoid estimate is meaningless before the
    correlator has decayed.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    ts, vals = gf.times, gf.values
    if ts.size < 8:
        raise UndecayedWindowError("need at least 8 time samples")
    peak = float(np.max(np.abs(vals)))
    edge = max(abs(vals[0]), abs(vals[-1]))
    if peak > 0 and edge > decay_fraction * peak:
        raise UndecayedWindowError(
            f"window endpoints at {edge / peak:.2e} of peak exceed the "
            f"decay requirement {decay_fraction:.1e}; enlarge the time window")
    phases = np.exp(1j * np.outer(omegas, ts))
    fvals = np.trapezoid(phases * vals[None, :], ts, axis=1)
    return GreensFunction(gf.kind, gf.x, gf.y, ts, vals, gf.error,
                          frequencies=omegas, freq_values=fvals)


def inverse_fourier(omegas: np.ndarray, fvals: np.ndarray, ts) -> np.ndarray:
    """G(t) = (1/2 pi) int Ghat(omega) e^{-i t omega} d omega on sampled data."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    phases = np.exp(-1j * np.outer(ts, omegas))
    return np.trapezoid(phases * fvals[None, :], omegas, axis=1) / (2.0 * np.pi)
