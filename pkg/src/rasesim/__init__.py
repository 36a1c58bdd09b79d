"""Deterministic simulator of heralded single-photon production by
rephased collective emission from an inhomogeneously broadened ensemble."""

from ._version import __version__
from .ensemble import (
    Grid,
    Density,
    Distribution,
    CouplingParams,
    make_grid,
    gaussian_density,
    tailored_density,
    peak_optical_depth,
    coupling_for_depth,
    spectral_peak_depth,
    coupling_for_spectral_peak_depth,
)
from .ase import (
    Amplitude,
    AseTrajectory,
    SurvivalCurve,
    SurvivalSurface,
    post_jump_state,
    evolve_no_jump,
    survival_probability,
    deexcitation_distribution,
    survival_curve_for_depth,
    no_second_emission_surface,
)
from .rase import (
    LightRecord,
    RaseResult,
    ExcitationHeatmap,
    invert_state,
    flat_initial_state,
    propagate_light,
    evolve_rase,
    emission_probability,
    excitation_heatmap,
)
from .analytic import (
    EchoProfile,
    analytic_echo_profile,
    photon_overlap,
    intensity_overlap,
    weak_coupling_survival,
)
from .errors import SolverError, NormGrowthError, FluxConservationError

__all__ = [
    "__version__",
    "Grid", "Density", "Distribution", "CouplingParams",
    "make_grid", "gaussian_density", "tailored_density",
    "peak_optical_depth", "coupling_for_depth",
    "spectral_peak_depth", "coupling_for_spectral_peak_depth",
    "Amplitude", "AseTrajectory", "SurvivalCurve", "SurvivalSurface",
    "post_jump_state", "evolve_no_jump", "survival_probability",
    "deexcitation_distribution", "survival_curve_for_depth",
    "no_second_emission_surface",
    "LightRecord", "RaseResult", "ExcitationHeatmap",
    "invert_state", "flat_initial_state", "propagate_light",
    "evolve_rase", "emission_probability", "excitation_heatmap",
    "EchoProfile", "analytic_echo_profile", "photon_overlap",
    "intensity_overlap", "weak_coupling_survival",
    "SolverError", "NormGrowthError", "FluxConservationError",
]
