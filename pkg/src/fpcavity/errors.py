"""Exception types raised by the cavity toolkit."""


class CavityError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfigError(CavityError):
    """A configuration value violates an invariant (bad units, negative
    thickness, membrane thicker than the cavity, ...)."""


class StabilityError(CavityError):
    """The requested geometry does not support a confined Gaussian mode.

    Carries a human-readable diagnostic naming the failed condition.
    """


class InsufficientRangeError(CavityError):
    """A resonance scan found fewer than two peaks, so no free spectral
    range can be extracted."""


class ResolutionError(CavityError):
    """Adaptive refinement hit its iteration cap before the linewidth
    estimate converged."""


class DegenerateGeometryError(CavityError):
    """A formula is singular for the requested inputs (e.g. transverse mode
    spacing of exactly zero or one free spectral range)."""


class DegeneracyError(CavityError):
    """Nondegenerate perturbation theory is invalid: a basis mode is too
    close in eigenvalue to the reference mode."""

    def __init__(self, message, mode=None, cavity_length=None):
        super().__init__(message)
        self.mode = mode
        self.cavity_length = cavity_length


class QuadratureAccuracyError(CavityError):
    """A quadrature estimate failed to converge under refinement."""


class FitQualityError(CavityError):
    """A least-squares fit did not converge or left implausible residuals."""


class InconsistentDataError(CavityError):
    """The closure system for the bare-cavity parameters has no physical
    root; the message names the violated constraint."""
