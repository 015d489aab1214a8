"""System description: sample, leads, thermodynamic parameters, and validation.

All energies are in units of the lead hopping unless stated otherwise; hbar = 1
and the particle charge is 1, so charge currents are particles per unit time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from .errors import ConfigError

HERMITICITY_ATOL = 1e-12

SCENARIOS = ("partitioned", "partition_free")


def _frozen_array(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SampleSpec:
    """Finite sample: one-body Hamiltonian plus an optional pair interaction.

    Parameters
    ----------
    hamiltonian : (n, n) complex ndarray
        One-body Hamiltonian of the isolated sample (Hermitian).
    pair_potential : (n, n) float ndarray
        Symmetric two-body potential w(x, y) with zero diagonal and
        max |w| <= 1.
    interaction_strength : float
        Dimensionless multiplier of the pair interaction.
    """

    hamiltonian: np.ndarray
    pair_potential: np.ndarray
    interaction_strength: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian", _frozen_array(self.hamiltonian, complex))
        object.__setattr__(self, "pair_potential", _frozen_array(self.pair_potential, float))
        object.__setattr__(self, "interaction_strength", float(self.interaction_strength))

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class LeadSpec:
    """One semi-infinite lead: coupling to the sample and its thermal state.

    Parameters
    ----------
    coupling : float
        Tunneling amplitude d between the lead's contact site and the sample.
    coupling_vector : (n,) complex ndarray
        Unit vector in sample space the lead couples to.
    bias : float
        Rigid shift of the lead band (drives transport in the
        partition-free scenario).
    beta : float
        Inverse temperature of the lead's initial equilibrium state.
    mu : float
        Chemical potential of the lead's initial equilibrium state.
    """

    coupling: float
    coupling_vector: np.ndarray
    bias: float = 0.0
    beta: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "coupling_vector", _frozen_array(self.coupling_vector, complex))
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "mu", float(self.mu))


@dataclass(frozen=True)
class SystemConfig:
    """Full model description shared by every computation in the package.

    The lead hopping is positive and common to all leads; each lead band is
    [bias - 2*hopping, bias + 2*hopping].
    """

    sample: SampleSpec
    leads: tuple[LeadSpec, ...]
    hopping: float = 1.0
    scenario: str = "partitioned"
    eq_beta: Optional[float] = None
    eq_mu: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "leads", tuple(self.leads))
        object.__setattr__(self, "hopping", float(self.hopping))

    @property
    def n_sites(self) -> int:
        return self.sample.n_sites

    @property
    def n_leads(self) -> int:
        return len(self.leads)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([ld.coupling for ld in self.leads])

    @property
    def biases(self) -> np.ndarray:
        return np.array([ld.bias for ld in self.leads])

    @property
    def betas(self) -> np.ndarray:
        return np.array([ld.beta for ld in self.leads])

    @property
    def mus(self) -> np.ndarray:
        return np.array([ld.mu for ld in self.leads])

    @property
    def coupling_matrix(self) -> np.ndarray:
        """(n, m) matrix whose columns are the lead coupling vectors."""
        return np.column_stack([ld.coupling_vector for ld in self.leads])

    def with_sample_hamiltonian(self, h: np.ndarray, interaction_strength=None) -> "SystemConfig":
        xi = self.sample.interaction_strength if interaction_strength is None else interaction_strength
        sample = SampleSpec(h, self.sample.pair_potential, xi)
        return replace(self, sample=sample)

    def with_mus(self, mus: Sequence[float]) -> "SystemConfig":
        leads = tuple(replace(ld, mu=float(m)) for ld, m in zip(self.leads, mus))
        return replace(self, leads=leads)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.passed


def validate(config: SystemConfig) -> ValidationReport:
    """Check every structural invariant of a system description.

    Returns a report rather than raising, so callers can surface all
    violations at once.
    """
    bad: list[str] = []
    h = config.sample.hamiltonian
    w = config.sample.pair_potential
    n = config.n_sites

    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        bad.append(f"h_S shape: expected square matrix, got {h.shape}")
        return ValidationReport(False, tuple(bad))
    if w.shape != h.shape:
        bad.append(f"w shape: expected {h.shape}, got {w.shape}")
        return ValidationReport(False, tuple(bad))

    dev = np.max(np.abs(h - h.conj().T)) if n else 0.0
    if dev > HERMITICITY_ATOL:
        bad.append(f"h_S hermiticity: max |h_S - h_S^dagger| = {dev:.3e}")
    dev = np.max(np.abs(w - w.T)) if n else 0.0
    if dev > HERMITICITY_ATOL:
        bad.append(f"w symmetry: max |w - w^T| = {dev:.3e}")
    diag = np.max(np.abs(np.diag(w))) if n else 0.0
    if diag > HERMITICITY_ATOL:
        bad.append(f"zero diagonal of w: max |w(x,x)| = {diag:.3e}")
    if n and np.max(np.abs(w)) > 1.0 + HERMITICITY_ATOL:
        bad.append(f"w normalization: max |w(x,y)| = {np.max(np.abs(w)):.6g} > 1")

    if not config.hopping > 0.0:
        bad.append(f"lead hopping: c_R = {config.hopping:.6g} must be > 0")
    if config.n_leads < 1:
        bad.append("leads: at least one lead is required")
    if config.scenario not in SCENARIOS:
        bad.append(f"scenario: {config.scenario!r} not in {SCENARIOS}")

    for j, ld in enumerate(config.leads):
        if ld.coupling_vector.shape != (n,):
            bad.append(f"leads[{j}].phi shape: expected ({n},), got {ld.coupling_vector.shape}")
            continue
        nrm = np.linalg.norm(ld.coupling_vector)
        if abs(nrm - 1.0) > 1e-10:
            bad.append(f"leads[{j}].phi normalization: ||phi|| = {nrm:.12g}")
        if not ld.beta > 0.0:
            bad.append(f"leads[{j}].beta: {ld.beta:.6g} must be > 0")

    if config.scenario == "partition_free" and config.n_leads >= 1:
        beta0 = config.eq_beta if config.eq_beta is not None else config.leads[0].beta
        mu0 = config.eq_mu if config.eq_mu is not None else config.leads[0].mu
        if any(abs(ld.beta - beta0) > 1e-12 for ld in config.leads):
            bad.append("partition_free scenario: all lead beta values must equal the reference beta")
        if any(abs(ld.mu - mu0) > 1e-12 for ld in config.leads):
            bad.append("partition_free scenario: all lead mu values must equal the reference mu")

    return ValidationReport(not bad, tuple(bad))


def require_valid(config: SystemConfig) -> None:
    """Raise ConfigError with every violation listed if validation fails."""
    report = validate(config)
    if not report.passed:
        raise ConfigError("invalid config: " + "; ".join(report.violations))


def effective_single_particle_hamiltonian(config: SystemConfig, lead_truncation: int,
                                          include_bias: bool = True,
                                          coupling_scale: float = 1.0) -> np.ndarray:
    """Assemble the one-body Hamiltonian with each lead truncated to L sites.

    Site layout: sample sites 0..n-1, then lead j occupies n + j*L .. n + (j+1)*L - 1
    with the contact site first.  Each lead block is the L-site open chain with
    -c_R on the first off-diagonals, shifted by the lead bias; the coupling
    blocks are d_j (|contact><phi_j| + h.c.).

    `include_bias` / `coupling_scale` exist for switching protocols: the
    returned matrix is h with bias off, or with the tunneling scaled.
    """
    L = int(lead_truncation)
    if L < 1:
        raise ValueError(f"lead truncation must be >= 1, got {lead_truncation}")
    n, m = config.n_sites, config.n_leads
    c = config.hopping
    dim = n + m * L
    H = np.zeros((dim, dim), dtype=complex)
    H[:n, :n] = config.sample.hamiltonian
    for j, ld in enumerate(config.leads):
        a = n + j * L
        idx = np.arange(a, a + L)
        H[idx[:-1], idx[1:]] = -c
        H[idx[1:], idx[:-1]] = -c
        if include_bias:
            H[idx, idx] += ld.bias
        d = coupling_scale * ld.coupling
        if d != 0.0:
            H[:n, a] += d * ld.coupling_vector
            H[a, :n] += d * ld.coupling_vector.conj()
    return H


# -- JSON config interface ---------------------------------------------------
#
# Schema (all matrices row-major; complex entries are numbers or [re, im]):
# {
#   "sample":   {"h_S": [[..]], "w": [[..]], "xi": 0.0},
#   "leads":    [{"d": 0.4, "phi": [..], "v": 0.0, "beta": 20.0, "mu": 0.1}, ..],
#   "c_R":      1.0,
#   "scenario": "partitioned" | "partition_free",
#   "equilibrium": {"beta": .., "mu": ..}          # optional, partition_free
# }


def _expect(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in obj:
        raise ConfigError(f"{path}.{key}: missing required key")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _as_complex(entry, path) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if (isinstance(entry, (list, tuple)) and len(entry) == 2
            and all(isinstance(p, (int, float)) for p in entry)):
        return complex(entry[0], entry[1])
    raise ConfigError(f"{path}: expected a number or [re, im] pair")


def _complex_matrix(rows, path) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    mat = []
    width = None
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]: expected a list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(f"{path}[{i}]: ragged row (length {len(row)}, expected {width})")
        mat.append([_as_complex(e, f"{path}[{i}][{k}]") for k, e in enumerate(row)])
    return np.array(mat, dtype=complex)


def config_from_dict(doc: dict) -> SystemConfig:
    """Build a SystemConfig from a parsed JSON document.

    Errors name the JSON path of the offending entry.
    """
    sample_doc = _expect(doc, "sample", "$")
    h = _complex_matrix(_expect(sample_doc, "h_S", "$.sample"), "$.sample.h_S")
    n = h.shape[0]
    if h.shape != (n, n):
        raise ConfigError(f"$.sample.h_S: expected square matrix, got {h.shape}")
    if "w" in sample_doc and sample_doc["w"] is not None:
        w = _complex_matrix(sample_doc["w"], "$.sample.w")
        if np.max(np.abs(w.imag)) > 0:
            raise ConfigError("$.sample.w: entries must be real")
        w = w.real
    else:
        w = np.zeros((n, n))
    xi = sample_doc.get("xi", 0.0)
    if not isinstance(xi, (int, float)):
        raise ConfigError("$.sample.xi: expected a number")

    leads_doc = _expect(doc, "leads", "$", list)
    leads = []
    for j, ld in enumerate(leads_doc):
        p = f"$.leads[{j}]"
        phi_doc = _expect(ld, "phi", p, list)
        phi = np.array([_as_complex(e, f"{p}.phi[{k}]") for k, e in enumerate(phi_doc)])
        leads.append(LeadSpec(
            coupling=float(_expect(ld, "d", p, (int, float))),
            coupling_vector=phi,
            bias=float(ld.get("v", 0.0)),
            beta=float(_expect(ld, "beta", p, (int, float))),
            mu=float(_expect(ld, "mu", p, (int, float))),
        ))

    c_R = _expect(doc, "c_R", "$", (int, float))
    scenario = doc.get("scenario", "partitioned")
    if scenario not in SCENARIOS:
        raise ConfigError(f"$.scenario: {scenario!r} not in {SCENARIOS}")
    eq = doc.get("equilibrium")
    eq_beta = eq_mu = None
    if eq is not None:
        eq_beta = float(_expect(eq, "beta", "$.equilibrium", (int, float)))
        eq_mu = float(_expect(eq, "mu", "$.equilibrium", (int, float)))

    return SystemConfig(
        sample=SampleSpec(h, w, float(xi)),
        leads=tuple(leads),
        hopping=float(c_R),
        scenario=scenario,
        eq_beta=eq_beta,
        eq_mu=eq_mu,
    )


def _complex_entry(z: complex):
    return z.real if z.imag == 0.0 else [z.real, z.imag]


def config_to_dict(config: SystemConfig) -> dict:
    doc: dict[str, Any] = {
        "sample": {
            "h_S": [[_complex_entry(z) for z in row] for row in config.sample.hamiltonian],
            "w": [[float(v) for v in row] for row in config.sample.pair_potential],
            "xi": config.sample.interaction_strength,
        },
        "leads": [
            {
                "d": ld.coupling,
                "phi": [_complex_entry(z) for z in ld.coupling_vector],
                "v": ld.bias,
                "beta": ld.beta,
                "mu": ld.mu,
            }
            for ld in config.leads
        ],
        "c_R": config.hopping,
        "scenario": config.scenario,
    }
    if config.eq_beta is not None or config.eq_mu is not None:
        doc["equilibrium"] = {"beta": config.eq_beta, "mu": config.eq_mu}
    return doc


def load_config(path: str) -> SystemConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    config = config_from_dict(doc)
    require_valid(config)
    return config


def config_hash(config: SystemConfig) -> str:
    """Deterministic sha256 of the canonical JSON serialization."""
    blob = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
