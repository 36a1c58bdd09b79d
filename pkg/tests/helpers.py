"""Plain-numpy reference implementations of both right-hand sides, written
independently of the compiled kernels so the two routes check each other."""
import numpy as np


def weighted_norm(values, density):
    g = density.grid
    return float(g.z_weights @ ((np.abs(values) ** 2) * density.values) @ g.delta_weights)


def _B(values, density):
    return (values * density.values) @ density.grid.delta_weights


def _forward_cum(B, z):
    out = np.empty_like(B)
    out[0] = 0
    np.cumsum(0.5 * (B[1:] + B[:-1]) * np.diff(z), out=out[1:])
    return out


def ase_rhs_reference(values, density, coupling):
    g = density.grid
    B = _B(values, density)
    F = _forward_cum(B, g.z)
    tail = F[-1] - F  # integral from z to L
    lin = 1j * g.delta - np.pi * coupling.g**2 * density.n_atoms / coupling.c
    return lin[None, :] * values - (2 * np.pi * coupling.g**2 / coupling.c) * tail[:, None]


def rase_rhs_reference(values, density, coupling):
    g = density.grid
    head = _forward_cum(_B(values, density), g.z)  # integral from 0 to z
    return (1j * g.delta)[None, :] * values - (2 * np.pi * coupling.g**2 / coupling.c) * head[:, None]


def rk4_step(values, rhs, dt):
    k1 = rhs(values)
    k2 = rhs(values + 0.5 * dt * k1)
    k3 = rhs(values + 0.5 * dt * k2)
    k4 = rhs(values + dt * k3)
    return values + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
