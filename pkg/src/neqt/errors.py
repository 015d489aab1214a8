"""Exception types shared across the package."""


class NeqtError(Exception):
    """Base class for all package errors."""


class ConfigError(NeqtError):
    """Invalid system description or malformed config file."""


class SingularMatrixError(NeqtError):
    """The sample-space resolvent is (numerically) singular at some energy.

    Carries the offending energy and the smallest singular value found there.
    """

    def __init__(self, energy: float, smallest_singular_value: float):
        self.energy = float(energy)
        self.smallest_singular_value = float(smallest_singular_value)
        super().__init__(
            f"resolvent singular at E={energy:.12g} "
            f"(smallest singular value {smallest_singular_value:.3e})"
        )


class QuadratureFailure(NeqtError):
    """An adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, estimate: float, tol: float, context: str = ""):
        self.estimate = float(estimate)
        self.tol = float(tol)
        msg = f"quadrature error estimate {estimate:.3e} exceeds tolerance {tol:.3e}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class SpectralViolation(NeqtError):
    """A Hamiltonian fails the bound-state/resonance screen."""


class DimensionCapError(NeqtError):
    """Requested many-body run exceeds the Fock-space dimension cap."""


class UndecayedWindowError(NeqtError):
    """A time window handed to the Fourier transform has not decayed."""
