"""Compiled kernels for the adaptive Kuramoto-Sakaguchi vector field.

Both kernels assume a rule ``h(phi, x) = sin(phi + beta(x))`` and take
``sin(beta_ij)`` and ``cos(beta_ij)`` precomputed. Pairwise sines and
cosines come from the angle-addition identities, so the O(N^2) loop only
does multiply-adds and touches each weight once.
"""

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def rhs_sinusoidal(phi, kappa, adj, sinb, cosb, alpha, eps, omega, dphi, dkappa):
    n = phi.shape[0]
    s = np.sin(phi)
    c = np.cos(phi)
    sa = math.sin(alpha)
    ca = math.cos(alpha)
    for i in range(n):
        si = s[i]
        ci = c[i]
        acc = 0.0
        for j in range(n):
            sd = si * c[j] - ci * s[j]
            cd = ci * c[j] + si * s[j]
            k = kappa[i, j]
            acc += adj[i, j] * k * (sd * ca + cd * sa)
            dkappa[i, j] = -eps * (k + sd * cosb[i, j] + cd * sinb[i, j])
        dphi[i] = omega - acc / n


@nb.njit(cache=True)
def rk4_advance(phi, kappa, adj, sinb, cosb, alpha, eps, omega, dt, nsteps):
    """Advance ``(phi, kappa)`` in place by ``nsteps`` classical RK4 steps."""
    n = phi.shape[0]
    k1p = np.empty(n)
    k2p = np.empty(n)
    k3p = np.empty(n)
    k4p = np.empty(n)
    k1k = np.empty((n, n))
    k2k = np.empty((n, n))
    k3k = np.empty((n, n))
    k4k = np.empty((n, n))
    tp = np.empty(n)
    tk = np.empty((n, n))
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for _ in range(nsteps):
        rhs_sinusoidal(phi, kappa, adj, sinb, cosb, alpha, eps, omega, k1p, k1k)
        for i in range(n):
            tp[i] = phi[i] + h2 * k1p[i]
            for j in range(n):
                tk[i, j] = kappa[i, j] + h2 * k1k[i, j]
        rhs_sinusoidal(tp, tk, adj, sinb, cosb, alpha, eps, omega, k2p, k2k)
        for i in range(n):
            tp[i] = phi[i] + h2 * k2p[i]
            for j in range(n):
                tk[i, j] = kappa[i, j] + h2 * k2k[i, j]
        rhs_sinusoidal(tp, tk, adj, sinb, cosb, alpha, eps, omega, k3p, k3k)
        for i in range(n):
            tp[i] = phi[i] + dt * k3p[i]
            for j in range(n):
                tk[i, j] = kappa[i, j] + dt * k3k[i, j]
        rhs_sinusoidal(tp, tk, adj, sinb, cosb, alpha, eps, omega, k4p, k4k)
        for i in range(n):
            phi[i] += h6 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])
            for j in range(n):
                kappa[i, j] += h6 * (k1k[i, j] + 2.0 * k2k[i, j] + 2.0 * k3k[i, j] + k4k[i, j])
