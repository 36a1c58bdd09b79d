"""Solver fault types."""


class SolverError(RuntimeError):
    """Base class for numerical-integrity failures during time evolution."""


class NormGrowthError(SolverError):
    """Conditional-state norm grew between steps (non-Hermitian evolution
    must be contractive); signals an unstable step size or corrupt input."""


class FluxConservationError(SolverError):
    """Emitted flux plus residual excitation failed to account for the
    initial excitation within tolerance."""
