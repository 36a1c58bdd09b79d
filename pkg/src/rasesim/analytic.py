"""Closed-form weak-coupling results used as independent checks.

In the weak-coupling limit the atoms only accumulate detuning phase, so the
rephased field is the Fourier transform of the ensemble spectral density:
for a Gaussian line of width Gamma the echo is Gaussian with duration
tau = 1/Gamma, and the bare no-further-emission probability decays at the
rate alphaL*Gamma implied by the uniform term of the conditional evolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import Density, _fmt


@dataclass
class EchoProfile:
    """Unnormalized analytic echo amplitude around its rephasing time."""

    times: np.ndarray
    amplitude: np.ndarray
    center: float
    width: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("t,re_phi,im_phi\n")
            for t, a in zip(self.times, self.amplitude):
                fh.write(f"{_fmt(t)},{_fmt(a.real)},{_fmt(a.imag)}\n")


def analytic_echo_profile(density: Density, t_s: float, times) -> EchoProfile:
    """phi(t) proportional to int d_delta rho_bar(delta) e^{i delta (t - t_s)},
    evaluated with the grid quadrature of the z-integrated spectral density."""
    times = np.asarray(times, dtype=float)
    spectral = density.spectral_marginal() * density.grid.delta_weights
    phases = np.exp(1j * np.outer(times - t_s, density.grid.delta))
    amplitude = phases @ spectral
    return EchoProfile(times, amplitude, center=float(t_s), width=1.0 / density.gamma)


def photon_overlap(spacing: float, tau: float) -> float:
    """Normalized field-amplitude overlap of two Gaussian photons of
    amplitude width tau separated by `spacing`: e^{-spacing^2/(4 tau^2)}."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if spacing < 0:
        raise ValueError(f"spacing must be nonnegative, got {spacing}")
    return float(np.exp(-(spacing**2) / (4.0 * tau**2)))


def intensity_overlap(spacing: float, tau: float) -> float:
    """Normalized intensity-profile overlap of the same pair; equals
    photon_overlap squared."""
    return photon_overlap(spacing, tau) ** 2


def weak_coupling_survival(alpha_l: float, t) -> np.ndarray | float:
    """Bare exponential no-further-emission probability e^{-alphaL*Gamma*t}
    (Gamma = 1 units).  Ignores the collective bunching transient, so it is
    accurate only for alphaL << 1."""
    if alpha_l < 0:
        raise ValueError(f"alpha_l must be nonnegative, got {alpha_l}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.exp(-alpha_l * t)
    return float(out) if out.ndim == 0 else out
