"""Conditional dynamics of the inverted ensemble after a photodetection.

A detection projects the ensemble onto a collective de-excitation that is
uniform over the atoms; while no further photon is seen the coefficient
field s(z, delta, t) evolves under the non-Hermitian generator

    ds/dt = i*delta*s - (pi g^2 N / c) s - (2 pi g^2 / c) int_z^L dy B(y,t),
    B(y, t) = int d_delta' s(y, delta', t) rho(y, delta'),

whose weighted norm ||s||^2_rho gives the no-further-emission probability.
The collective term makes a second emission initially twice as likely as the
bare rate (photon bunching) and concentrates the surviving de-excitation
amplitude toward the output face z = L.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ensemble import Density, Distribution, CouplingParams, Grid, coupling_for_depth, _fmt
from .errors import NormGrowthError

NORM_GROWTH_TOL = 1e-6  # relative per-step growth that aborts a run


@dataclass
class Amplitude:
    """Complex de-excitation coefficient field on a grid at time t (in tau)."""

    grid: Grid
    values: np.ndarray
    t: float

    def __post_init__(self):
        if self.values.shape != (self.grid.n_z, self.grid.n_delta):
            raise ValueError("amplitude shape does not match grid")
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("amplitude must be finite everywhere")

    def copy(self) -> "Amplitude":
        return Amplitude(self.grid, self.values.copy(), self.t)


def weighted_norm(state: Amplitude, density: Density) -> float:
    """||s||^2_rho = int int |s|^2 rho dz d_delta."""
    g = state.grid
    return float(g.z_weights @ ((np.abs(state.values) ** 2) * density.values) @ g.delta_weights)


@dataclass
class SurvivalCurve:
    """No-further-emission probability versus time since the detection."""

    times: np.ndarray
    probabilities: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("t,p_no_jump\n")
            for t, p in zip(self.times, self.probabilities):
                fh.write(f"{_fmt(t)},{_fmt(p)}\n")


@dataclass
class AseTrajectory:
    """Sampled no-jump evolution. `times` are absolute (detection at -T_S),
    `survival` is normalized to the post-detection state, `step_survival`
    holds every integrator step for monotonicity checks."""

    times: np.ndarray
    survival: np.ndarray
    final: Amplitude
    step_times: np.ndarray
    step_survival: np.ndarray
    states: list | None = None

    def survival_curve(self) -> SurvivalCurve:
        return SurvivalCurve(self.times - self.times[0], self.survival)


def post_jump_state(density: Density, detection_time: float = -4.0) -> Amplitude:
    """State right after a detection: the de-excitation is shared equally by
    every atom (s = 1; the density lives in the integration measure)."""
    values = np.ones((density.grid.n_z, density.grid.n_delta), dtype=np.complex128)
    return Amplitude(density.grid, values, float(detection_time))


def survival_probability(state: Amplitude, density: Density) -> float:
    """||s(t)||^2_rho normalized to the post-detection norm ||1||^2_rho."""
    if not state.grid.matches(density.grid):
        raise ValueError("state and density are on different grids")
    n0 = density.quadrature()
    if n0 <= 0:
        raise ValueError("density has zero quadrature; initial norm undefined")
    return weighted_norm(state, density) / n0


def deexcitation_distribution(state: Amplitude, density: Density) -> Distribution:
    """|s|^2 rho normalized to unit quadrature."""
    if not state.grid.matches(density.grid):
        raise ValueError("state and density are on different grids")
    w = (np.abs(state.values) ** 2) * density.values
    total = float(state.grid.z_weights @ w @ state.grid.delta_weights)
    if total <= 0:
        raise ValueError("state has zero weighted norm; distribution undefined")
    return Distribution(state.grid, w / total)


def _steps_for(duration: float, dt: float, sample_every: float):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not duration > 0:
        raise ValueError(f"t_end must be a positive duration, got {duration}")
    nstep = int(round(duration / dt))
    if nstep < 1 or abs(nstep * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"t_end = {duration} is not an integer number of dt = {dt} steps")
    stride = max(1, int(round(sample_every / dt)))
    return nstep, stride


def evolve_no_jump(
    state: Amplitude,
    density: Density,
    coupling: CouplingParams,
    dt: float = 1e-3,
    t_end: float = 4.0,
    sample_every: float = 1e-2,
    keep_states: bool = False,
) -> AseTrajectory:
    """Integrate the no-further-detection evolution for a duration t_end
    (measured from state.t) with fixed-step classical RK4.

    Aborts with NormGrowthError if the weighted norm grows by more than
    NORM_GROWTH_TOL relative between consecutive steps.
    """
    if not state.grid.matches(density.grid):
        raise ValueError("state and density are on different grids")
    g = state.grid
    nstep, stride = _steps_for(t_end, dt, sample_every)

    s = np.ascontiguousarray(state.values, dtype=np.complex128).copy()
    rw = np.ascontiguousarray(density.values * g.delta_weights[None, :])
    nw = np.ascontiguousarray(density.values * np.outer(g.z_weights, g.delta_weights))
    lin = np.ascontiguousarray(
        1j * g.delta - np.pi * coupling.g**2 * density.n_atoms / coupling.c,
        dtype=np.complex128,
    )
    kap = 2.0 * np.pi * coupling.g**2 / coupling.c

    n0 = weighted_norm(state, density)
    if n0 <= 0:
        raise ValueError("state has zero weighted norm")

    step_norms = np.empty(nstep + 1)
    step_norms[0] = n0
    times = [state.t]
    survival = [1.0]
    states = [Amplitude(g, s.copy(), state.t)] if keep_states else None

    done = 0
    prev = n0
    while done < nstep:
        chunk = min(stride, nstep - done)
        norms = _kernels.ase_rk4_chunk(s, rw, g.dz, lin, kap, dt, chunk, nw)
        step_norms[done + 1 : done + 1 + chunk] = norms
        done += chunk
        seq = np.concatenate([[prev], norms])
        growth = np.diff(seq) - NORM_GROWTH_TOL * seq[:-1]
        if np.any(growth > 0):
            bad = int(np.argmax(growth > 0))
            raise NormGrowthError(
                f"norm grew by {seq[bad + 1] / seq[bad] - 1:.3e} at step {done - chunk + bad + 1} "
                f"(dt = {dt}); the no-jump evolution must be contractive"
            )
        prev = norms[-1]
        t_now = state.t + done * dt
        times.append(t_now)
        survival.append(prev / n0)
        if keep_states:
            states.append(Amplitude(g, s.copy(), t_now))

    final = Amplitude(g, s, state.t + nstep * dt)
    step_times = state.t + dt * np.arange(nstep + 1)
    return AseTrajectory(
        times=np.array(times),
        survival=np.array(survival),
        final=final,
        step_times=step_times,
        step_survival=step_norms / n0,
        states=states,
    )


def survival_curve_for_depth(
    alpha_l: float,
    density: Density,
    t_end: float = 8.0,
    dt: float = 1e-3,
    sample_every: float = 1e-2,
    detection_time: float = -4.0,
) -> SurvivalCurve:
    """Detection -> no-jump evolution -> survival curve, at a given depth."""
    coupling = coupling_for_depth(alpha_l, density)
    traj = evolve_no_jump(
        post_jump_state(density, detection_time), density, coupling,
        dt=dt, t_end=t_end, sample_every=sample_every,
    )
    return traj.survival_curve()


@dataclass
class SurvivalSurface:
    """Survival probability tabulated over (optical depth, time).
    Columns that failed to integrate are NaN and recorded in `failures`."""

    od_values: np.ndarray
    times: np.ndarray
    p_no_jump: np.ndarray  # shape (n_od, n_times)
    failures: dict

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("alpha_l,t,p_no_jump\n")
            for i, al in enumerate(self.od_values):
                ai = _fmt(al)
                for j, t in enumerate(self.times):
                    fh.write(f"{ai},{_fmt(t)},{_fmt(self.p_no_jump[i, j])}\n")


def no_second_emission_surface(
    od_values,
    t_grid,
    base_density: Density,
    dt: float = 1e-3,
) -> SurvivalSurface:
    """Survival probability for each depth in od_values over t_grid.

    t_grid must start at 0 and be uniformly spaced by a multiple of dt.
    A column whose integration faults is recorded as NaN, never fabricated.
    """
    od_values = np.asarray(od_values, dtype=float)
    if np.any(od_values <= 0):
        raise ValueError("optical depths must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    spacing = float(t_grid[1] - t_grid[0])
    if np.max(np.abs(np.diff(t_grid) - spacing)) > 1e-9:
        raise ValueError("t_grid must be uniformly spaced")

    surface = np.full((od_values.size, t_grid.size), np.nan)
    failures = {}
    for i, alpha in enumerate(od_values):
        try:
            curve = survival_curve_for_depth(
                float(alpha), base_density, t_end=float(t_grid[-1]), dt=dt,
                sample_every=spacing,
            )
        except Exception as exc:  # noqa: BLE001 - per-cell isolation is the contract
            failures[float(alpha)] = str(exc)
            continue
        if curve.times.size != t_grid.size or np.max(np.abs(curve.times - t_grid)) > 1e-9:
            failures[float(alpha)] = "sample times do not line up with t_grid"
            continue
        surface[i] = curve.probabilities
    return SurvivalSurface(od_values, t_grid, surface, failures)
