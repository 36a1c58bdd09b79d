"""Compiled classical-RK4 stepping kernels.

Both evolutions are linear in the field s(z, delta); the nonlocal coupling
enters only through B(z) = int d_delta s*rho and its cumulative z-integral
(reverse cumulative for the monitored pre-inversion stage, forward for the
post-inversion stage).  Single-threaded on purpose: runs must be bitwise
reproducible and scans parallelize at the process level.
"""
import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _ase_rhs(base, rw, dz, lin, kap, out):
    # out = lin(delta)*base - kap * int_z^L B,  B(z) = sum_j base*rho*w_delta
    nz, nd = base.shape
    B = np.empty(nz, dtype=np.complex128)
    for i in range(nz):
        acc = 0.0 + 0.0j
        for j in range(nd):
            acc += base[i, j] * rw[i, j]
        B[i] = acc
    C = 0.0 + 0.0j
    for i in range(nz - 1, -1, -1):
        if i < nz - 1:
            C = C + 0.5 * (B[i] + B[i + 1]) * dz
        ci = kap * C
        for j in range(nd):
            out[i, j] = lin[j] * base[i, j] - ci


@njit(cache=True, fastmath=True)
def ase_rk4_chunk(s, rw, dz, lin, kap, dt, nstep, nw):
    """Advance s in place by nstep RK4 steps; returns the weighted norm
    ||s||^2_rho after each step."""
    nz, nd = s.shape
    k = np.empty_like(s)
    acc = np.empty_like(s)
    tmp = np.empty_like(s)
    norms = np.empty(nstep)
    for n in range(nstep):
        _ase_rhs(s, rw, dz, lin, kap, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] = k[i, j]
                tmp[i, j] = s[i, j] + 0.5 * dt * k[i, j]
        _ase_rhs(tmp, rw, dz, lin, kap, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] += 2.0 * k[i, j]
                tmp[i, j] = s[i, j] + 0.5 * dt * k[i, j]
        _ase_rhs(tmp, rw, dz, lin, kap, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] += 2.0 * k[i, j]
                tmp[i, j] = s[i, j] + dt * k[i, j]
        _ase_rhs(tmp, rw, dz, lin, kap, k)
        c = dt / 6.0
        normacc = 0.0
        for i in range(nz):
            for j in range(nd):
                v = s[i, j] + c * (acc[i, j] + k[i, j])
                s[i, j] = v
                normacc += (v.real * v.real + v.imag * v.imag) * nw[i, j]
        norms[n] = normacc
    return norms


@njit(cache=True, fastmath=True)
def _rase_rhs(base, rw, dz, delta, coup2, out):
    # out = 1j*delta*base - coup2 * int_0^z B  (light slaved to the state;
    # coup2 = 2*pi*g^2/c absorbs the field elimination)
    nz, nd = base.shape
    C = 0.0 + 0.0j
    B_prev = 0.0 + 0.0j
    for i in range(nz):
        acc = 0.0 + 0.0j
        for j in range(nd):
            acc += base[i, j] * rw[i, j]
        if i > 0:
            C = C + 0.5 * (acc + B_prev) * dz
        B_prev = acc
        ci = coup2 * C
        for j in range(nd):
            out[i, j] = 1j * delta[j] * base[i, j] - ci


@njit(cache=True, fastmath=True)
def rase_rk4_chunk(s, rw, dz, delta, coup2, dt, nstep):
    """Advance the post-inversion state in place by nstep RK4 steps."""
    nz, nd = s.shape
    k = np.empty_like(s)
    acc = np.empty_like(s)
    tmp = np.empty_like(s)
    for n in range(nstep):
        _rase_rhs(s, rw, dz, delta, coup2, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] = k[i, j]
                tmp[i, j] = s[i, j] + 0.5 * dt * k[i, j]
        _rase_rhs(tmp, rw, dz, delta, coup2, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] += 2.0 * k[i, j]
                tmp[i, j] = s[i, j] + 0.5 * dt * k[i, j]
        _rase_rhs(tmp, rw, dz, delta, coup2, k)
        for i in range(nz):
            for j in range(nd):
                acc[i, j] += 2.0 * k[i, j]
                tmp[i, j] = s[i, j] + dt * k[i, j]
        _rase_rhs(tmp, rw, dz, delta, coup2, k)
        c = dt / 6.0
        for i in range(nz):
            for j in range(nd):
                s[i, j] = s[i, j] + c * (acc[i, j] + k[i, j])


def warmup():
    """Trigger JIT compilation on a toy problem (cached across processes)."""
    s = np.ones((3, 3), dtype=np.complex128)
    rw = np.ones((3, 3))
    lin = np.zeros(3, dtype=np.complex128)
    ase_rk4_chunk(s, rw, 0.5, lin, 0.0, 1e-3, 1, rw)
    rase_rk4_chunk(s, rw, 0.5, np.zeros(3), 0.0, 1e-3, 1)
