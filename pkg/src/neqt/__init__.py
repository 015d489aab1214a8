"""Steady-state quantum transport for finite tight-binding samples wired to
semi-infinite one-dimensional leads, with finite-lead brute-force oracles."""

__version__ = "0.1.0"

from .errors import (ConfigError, DimensionCapError, NeqtError, QuadratureFailure,
                     SingularMatrixError, SpectralViolation, UndecayedWindowError)
from .leads import BandGeometry, lead_resolvent_entry, spectral_factor, surface_green
from .model import (LeadSpec, SampleSpec, SystemConfig, ValidationReport,
                    effective_single_particle_hamiltonian, load_config, validate)
from .quadrature import QuadratureSpec
from .spectral import (SampleResolvent, ScanSpec, SelfEnergy, SpectralReport,
                       check_spectral_condition, embedding_self_energy, sample_resolvent)
from .transport import (EntropyProduction, OnsagerMatrix, SteadyObservables,
                        TransmissionMatrix, energy_sum_rule, entropy_production,
                        lb_currents, onsager_matrix, transmission)
from .correlators import (CorrelationMatrix, GreensFunction, charge_density,
                          fourier_transform, green_function, inverse_fourier,
                          lesser_fourier_direct, lesser_green, ness_density_matrix,
                          steady_current_from_lesser)
from .hartree_fock import HartreeFockPotential, build_potential, hf_system
from .oracle import (IndependenceReport, OracleConfig, OracleRun, evolve_adiabatic,
                     evolve_free, evolve_interacting, initial_state_independence)

__all__ = [name for name in dir() if not name.startswith("_")]
