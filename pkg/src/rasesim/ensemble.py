"""Grids, atom densities, and the optical-depth / coupling-strength mapping.

Internal units: the inhomogeneous linewidth sets the clock (Gamma = 1, so
times are in tau = 1/Gamma), the medium length is L = 1, and the speed of
light defaults to c = 1.  Detunings are measured in units of Gamma.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
SQRT_TWO_PI = np.sqrt(2.0 * np.pi)


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.zeros_like(nodes)
    dx = np.diff(nodes)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def _fmt(x: float) -> str:
    """Shortest round-trip decimal form, used by every CSV writer."""
    return repr(float(x))


@dataclass(frozen=True)
class Grid:
    """Uniform product grid in position z in [0, L] and detuning delta,
    with trapezoidal quadrature weights for both axes."""

    z: np.ndarray
    delta: np.ndarray
    z_weights: np.ndarray
    delta_weights: np.ndarray

    @property
    def n_z(self) -> int:
        return self.z.size

    @property
    def n_delta(self) -> int:
        return self.delta.size

    @property
    def length(self) -> float:
        return float(self.z[-1])

    @property
    def delta_halfspan(self) -> float:
        return float(self.delta[-1])

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    def matches(self, other: "Grid") -> bool:
        return self is other or (
            np.array_equal(self.z, other.z) and np.array_equal(self.delta, other.delta)
        )


def make_grid(n_z: int, n_delta: int, delta_halfspan: float) -> Grid:
    """Build the uniform simulation grid.

    n_delta must be odd so that delta = 0 is a node; n_z needs at least the
    two boundary nodes.
    """
    if int(n_z) != n_z or n_z < 2:
        raise ValueError(f"n_z must be an integer >= 2, got {n_z}")
    if int(n_delta) != n_delta or n_delta < 3:
        raise ValueError(f"n_delta must be an integer >= 3, got {n_delta}")
    if n_delta % 2 == 0:
        raise ValueError(f"n_delta must be odd so delta = 0 is a node, got {n_delta}")
    if not delta_halfspan > 0:
        raise ValueError(f"delta_halfspan must be positive, got {delta_halfspan}")
    z = np.linspace(0.0, 1.0, int(n_z))
    # mirror a half-axis so delta = 0 is a node and the axis is exactly even
    half_axis = np.linspace(0.0, float(delta_halfspan), (int(n_delta) + 1) // 2)
    delta = np.concatenate([-half_axis[:0:-1], half_axis])
    return Grid(z, delta, _trapezoid_weights(z), _trapezoid_weights(delta))


@dataclass(frozen=True)
class Density:
    """Atom number density rho(z, delta) on a Grid.

    n_atoms is the total atom count (the double quadrature of values) and
    gamma the inhomogeneous linewidth used in the optical-depth formula.
    """

    grid: Grid
    values: np.ndarray
    n_atoms: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.values.shape != (self.grid.n_z, self.grid.n_delta):
            raise ValueError(
                f"density shape {self.values.shape} does not match grid "
                f"({self.grid.n_z}, {self.grid.n_delta})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")
        if not self.n_atoms > 0:
            raise ValueError(f"n_atoms must be positive, got {self.n_atoms}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        q = self.quadrature()
        if abs(q - self.n_atoms) > 1e-6 * self.n_atoms:
            raise ValueError(
                f"density quadrature {q!r} disagrees with n_atoms {self.n_atoms!r}"
            )

    def quadrature(self) -> float:
        return float(self.grid.z_weights @ self.values @ self.grid.delta_weights)

    def spectral_marginal(self) -> np.ndarray:
        """z-integrated density, atoms per unit detuning."""
        return self.grid.z_weights @ self.values

    def spatial_marginal(self) -> np.ndarray:
        """delta-integrated density, atoms per unit length."""
        return self.values @ self.grid.delta_weights

    def to_csv(self, path) -> None:
        """Write `z,delta,rho` rows, row-major over z then delta."""
        g = self.grid
        with open(path, "w", newline="\n") as fh:
            fh.write("z,delta,rho\n")
            for i in range(g.n_z):
                zi = _fmt(g.z[i])
                row = self.values[i]
                for j in range(g.n_delta):
                    fh.write(f"{zi},{_fmt(g.delta[j])},{_fmt(row[j])}\n")


@dataclass(frozen=True)
class Distribution:
    """Nonnegative weight field on a Grid, normalized to unit quadrature."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n_z, self.grid.n_delta):
            raise ValueError("distribution shape does not match grid")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("distribution values must be finite and nonnegative")
        q = float(self.grid.z_weights @ self.values @ self.grid.delta_weights)
        if not np.isclose(q, 1.0, rtol=1e-9, atol=0):
            raise ValueError(f"distribution must have unit quadrature, got {q!r}")

    def z_marginal(self) -> np.ndarray:
        return self.values @ self.grid.delta_weights

    def delta_marginal(self) -> np.ndarray:
        return self.grid.z_weights @ self.values

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="\n") as fh:
            fh.write("z,delta,weight\n")
            for i in range(g.n_z):
                zi = _fmt(g.z[i])
                row = self.values[i]
                for j in range(g.n_delta):
                    fh.write(f"{zi},{_fmt(g.delta[j])},{_fmt(row[j])}\n")


@dataclass(frozen=True)
class CouplingParams:
    """Per-atom vacuum coupling g and speed of light c."""

    g: float
    c: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"coupling g must be nonnegative, got {self.g}")
        if not self.c > 0:
            raise ValueError(f"speed of light c must be positive, got {self.c}")


def gaussian_density(grid: Grid, n_atoms: float, gamma: float = 1.0) -> Density:
    """Gaussian spectral profile of width gamma, flat in z, renormalized on
    the truncated grid so the quadrature equals n_atoms exactly."""
    if not n_atoms > 0:
        raise ValueError(f"n_atoms must be positive, got {n_atoms}")
    profile = np.exp(-grid.delta**2 / (2.0 * gamma**2)) / (SQRT_TWO_PI * gamma)
    values = np.broadcast_to(profile, (grid.n_z, grid.n_delta)).copy()
    values *= n_atoms / float(grid.z_weights @ values @ grid.delta_weights)
    return Density(grid, values, float(n_atoms), float(gamma))


def tailored_density(shape, n_atoms: float, gamma: float = 1.0, grid: Grid | None = None) -> Density:
    """Density proportional to an arbitrary nonnegative shape, normalized to
    n_atoms by quadrature.

    `shape` is a Distribution, or a raw (n_z, n_delta) array with `grid`
    given explicitly.
    """
    if isinstance(shape, Distribution):
        grid = shape.grid
        values = shape.values
    else:
        if grid is None:
            raise ValueError("grid is required when shape is a bare array")
        values = np.asarray(shape, dtype=float)
    if values.shape != (grid.n_z, grid.n_delta):
        raise ValueError("shape does not match grid")
    if np.any(values < 0):
        raise ValueError("shape must be nonnegative")
    total = float(grid.z_weights @ values @ grid.delta_weights)
    if total <= 0:
        raise ValueError("shape must not be identically zero")
    return Density(grid, values * (n_atoms / total), float(n_atoms), float(gamma))


def peak_optical_depth(density: Density, coupling: CouplingParams) -> float:
    """Dimensionless depth 2*pi*g^2*N / (c*Gamma) of a Gaussian-class ensemble.

    This printed formula is adopted as the definition of the depth axis for
    every scan, regardless of the exact on-resonance absorption it implies.
    """
    return TWO_PI * coupling.g**2 * density.n_atoms / (coupling.c * density.gamma)


def coupling_for_depth(target_alpha_l: float, density: Density, c: float = 1.0) -> CouplingParams:
    """Invert the depth formula: g = sqrt(alphaL * c * Gamma / (2 pi N))."""
    if target_alpha_l < 0:
        raise ValueError(f"target optical depth must be nonnegative, got {target_alpha_l}")
    g = np.sqrt(target_alpha_l * c * density.gamma / (TWO_PI * density.n_atoms))
    return CouplingParams(g=float(g), c=float(c))


def spectral_peak_depth(density: Density, coupling: CouplingParams) -> float:
    """Depth formula generalized through the peak of the spectral marginal:
    2*pi*sqrt(2*pi)*g^2*max_delta(rho_bar)/c.  Coincides with
    peak_optical_depth for Gaussian profiles (up to grid truncation)."""
    peak = float(np.max(density.spectral_marginal()))
    return TWO_PI * SQRT_TWO_PI * coupling.g**2 * peak / coupling.c


def coupling_for_spectral_peak_depth(target_alpha_l: float, density: Density, c: float = 1.0) -> CouplingParams:
    """Coupling that gives a non-Gaussian ensemble the requested
    spectral-peak depth."""
    if target_alpha_l < 0:
        raise ValueError(f"target optical depth must be nonnegative, got {target_alpha_l}")
    peak = float(np.max(density.spectral_marginal()))
    if peak <= 0:
        raise ValueError("density has an empty spectral marginal")
    g = np.sqrt(target_alpha_l * c / (TWO_PI * SQRT_TWO_PI * peak))
    return CouplingParams(g=float(g), c=float(c))
