"""Master stability function, explicit stability criteria and network verdicts.

For a mode with structure parameters ``a = Dg(0) mu`` and ``b = g(0) nu``
the two Lyapunov exponents solve

    lambda**2 + (eps - a) lambda - eps (a + b) = 0

and the master stability function is the larger real part. With
``g(phi) = -sin(phi + alpha)`` and real spectra this is equivalent to
``c1 = cos(alpha) mu > -eps`` and ``c2 = cos(alpha) mu + sin(alpha) nu > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ParameterError
from .model import circulant_laplacian_rows, gaussian_weight, relative_distance, sinusoidal_rule
from .spectra import ModeSpectrum, circulant_spectrum, ring_mu_closed, ring_nu_closed

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"

MARGINAL_BAND = 1e-9


@dataclass(frozen=True)
class MsfQuery:
    a: complex
    b: complex
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")


def quadratic_roots(b, c):
    """Both roots of ``lambda**2 + b lambda + c = 0``.

    Uses the principal complex square root and picks the cancellation-free
    root first, recovering the second one from Vieta's product. Accepts
    scalars or arrays.
    """
    b = np.asarray(b, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    # roots scale with s = max(|b|, sqrt|c|); solving the unit-scale problem avoids under/overflow
    s = np.maximum(np.abs(b), np.sqrt(np.abs(c)))
    s = np.where(s > 0, s, 1.0)
    b = (b.real / s) + 1j * (b.imag / s)
    c = (c.real / s / s) + 1j * (c.imag / s / s)
    d = np.sqrt(b * b - 4.0 * c)
    d = np.where(np.abs(b + d) >= np.abs(b - d), d, -d)
    q = -0.5 * (b + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(q != 0, c / np.where(q != 0, q, 1.0), 0.0)
    q, other = q * s, other * s
    if q.ndim == 0:
        return complex(q), complex(other)
    return q, other


def structure_parameters(alpha: float, mu, nu):
    """(Dg(0) mu, g(0) nu) for the Sakaguchi coupling."""
    return -math.cos(alpha) * np.asarray(mu), -math.sin(alpha) * np.asarray(nu)


def master_stability(a, b, epsilon: float):
    """Vectorized MSF: max real part of the two roots for each (a, b)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    r1, r2 = quadratic_roots(epsilon - a, -epsilon * (a + b))
    lam = np.maximum(np.real(r1), np.real(r2))
    return float(lam) if np.ndim(lam) == 0 else lam


def msf_lambda(query: MsfQuery) -> float:
    return float(master_stability(query.a, query.b, query.epsilon))


def criteria(alpha: float, mu, nu, epsilon: float | None = None):
    """Return ``(c1, c2)``; the stable side is ``c1 > -epsilon`` and ``c2 > 0``.

    ``epsilon`` is accepted for signature symmetry with the other helpers;
    use :func:`criteria_hold` for the actual comparison.
    """
    c1 = math.cos(alpha) * np.asarray(mu, dtype=float)
    c2 = c1 + math.sin(alpha) * np.asarray(nu, dtype=float)
    if c1.ndim == 0:
        return float(c1), float(c2)
    return c1, c2


def criteria_hold(alpha: float, mu, nu, epsilon: float):
    c1, c2 = criteria(alpha, mu, nu)
    return np.logical_and(np.asarray(c1) > -epsilon, np.asarray(c2) > 0.0)


@dataclass(frozen=True)
class MsfGrid:
    """Lambda on a real (mu, nu) grid; ``lam[i, j]`` belongs to ``(mu[j], nu[i])``."""

    alpha: float
    epsilon: float
    mu: NDArray[np.float64]
    nu: NDArray[np.float64]
    lam: NDArray[np.float64]
    contour: list[tuple[float, float]]


def zero_contour(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> list[tuple[float, float]]:
    """Linearly interpolated sign changes of ``z[i, j] = f(x[j], y[i])`` along grid edges."""
    pts: list[tuple[float, float]] = []
    ny, nx = z.shape
    for i in range(ny):
        for j in range(nx):
            if z[i, j] == 0.0:
                pts.append((float(x[j]), float(y[i])))
                continue
            if j + 1 < nx and z[i, j] * z[i, j + 1] < 0:
                t = z[i, j] / (z[i, j] - z[i, j + 1])
                pts.append((float(x[j] + t * (x[j + 1] - x[j])), float(y[i])))
            if i + 1 < ny and z[i, j] * z[i + 1, j] < 0:
                t = z[i, j] / (z[i, j] - z[i + 1, j])
                pts.append((float(x[j]), float(y[i] + t * (y[i + 1] - y[i]))))
    return pts


def msf_grid(alpha: float, epsilon: float, mu_values: ArrayLike, nu_values: ArrayLike) -> MsfGrid:
    mu = np.atleast_1d(np.asarray(mu_values, dtype=float))
    nu = np.atleast_1d(np.asarray(nu_values, dtype=float))
    if mu.size == 0 or nu.size == 0:
        raise ParameterError("grid ranges must be nonempty")
    M, V = np.meshgrid(mu, nu)
    a, b = structure_parameters(alpha, M, V)
    lam = np.asarray(master_stability(a, b, epsilon), dtype=float).reshape(M.shape)
    return MsfGrid(alpha, epsilon, mu, nu, lam, zero_contour(mu, nu, lam))


@dataclass(frozen=True)
class StabilityReport:
    k: NDArray[np.int64]
    mu: NDArray[np.complex128]
    nu: NDArray[np.complex128]
    lam: NDArray[np.float64]
    c1: NDArray[np.float64]
    c2: NDArray[np.float64]
    verdict: str
    margin: float
    critical_mode: int

    @property
    def max_lambda(self) -> float:
        """Largest exponent over the nontrivial modes."""
        return float(self.lam[self.k != 0].max())


def network_stability(alpha: float, epsilon: float, spectrum: ModeSpectrum) -> StabilityReport:
    """Per-mode MSF values and the aggregate verdict over modes k >= 1.

    For real spectra the margin is ``min_k min(c1 + eps, c2)``; otherwise it
    is ``-max_k Lambda_k``. Ties for the critical mode go to the smallest k.
    """
    spec = spectrum.sorted()
    if spec.n < 2:
        raise ParameterError("spectrum needs at least one nontrivial mode")
    a, b = structure_parameters(alpha, spec.mu, spec.nu)
    lam = np.asarray(master_stability(a, b, epsilon), dtype=float)
    c1, c2 = criteria(alpha, spec.mu.real, spec.nu.real)
    nontrivial = spec.k != 0
    if spec.is_real:
        decisive = np.minimum(c1 + epsilon, c2)
    else:
        decisive = -lam
    d = decisive[nontrivial]
    margin = float(d.min())
    tied = np.flatnonzero(d <= margin + 1e-12 * max(1.0, abs(margin)))
    critical = int(spec.k[nontrivial][tied].min())
    if margin > MARGINAL_BAND:
        verdict = STABLE
    elif margin < -MARGINAL_BAND:
        verdict = UNSTABLE
    else:
        verdict = MARGINAL
    return StabilityReport(spec.k, spec.mu, spec.nu, lam, np.asarray(c1), np.asarray(c2), verdict, margin, critical)


def c_min_over_modes(alpha: float, spectrum: ModeSpectrum) -> float:
    """Smallest c2 over the nontrivial modes."""
    if not spectrum.is_real:
        raise ParameterError("c_min needs a real spectrum")
    nontrivial = spectrum.k != 0
    _, c2 = criteria(alpha, spectrum.mu.real[nontrivial], spectrum.nu.real[nontrivial])
    return float(np.min(c2))


def gaussian_spectrum(n: int, xi: float, sigma: float, normalize: bool = True) -> ModeSpectrum:
    """Exact spectrum of the Gaussian network with the sinusoidal rule, built from first rows."""
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    row = gaussian_weight(relative_distance(np.arange(n), n), xi, sigma)
    row[0] = 0.0
    if normalize:
        row = row / row.sum()
    lh, ldh = circulant_laplacian_rows(row, sinusoidal_rule(n))
    return circulant_spectrum(lh, ldh)


def gaussian_c_min(alpha: float, n: int, xi: float, sigma: float) -> float:
    return c_min_over_modes(alpha, gaussian_spectrum(n, xi, sigma))


def c_min_map(alpha: float, n: int, sigmas: Sequence[float], xis: Sequence[float]) -> NDArray[np.float64]:
    """``out[i, j] = c_min`` at ``(sigmas[j], xis[i])``."""
    return np.array([[gaussian_c_min(alpha, n, xi, s) for s in sigmas] for xi in xis])


def stability_boundary(
    alpha: float,
    sigma_grid: Sequence[float],
    xi_grid: Sequence[float],
    n: int,
    tol: float = 1e-3,
) -> list[tuple[float, float]]:
    """Points (sigma, xi) where c_min changes sign, refined by bisection in xi.

    Columns without a sign change contribute nothing.
    """
    sig = np.asarray(sigma_grid, dtype=float)
    xis = np.asarray(xi_grid, dtype=float)
    if np.any(np.diff(sig) <= 0) or np.any(np.diff(xis) <= 0):
        raise ParameterError("sigma and xi grids must be strictly increasing")
    out = []
    for s in sig:
        vals = [gaussian_c_min(alpha, n, x, s) for x in xis]
        for j in range(len(xis) - 1):
            lo, hi, flo, fhi = xis[j], xis[j + 1], vals[j], vals[j + 1]
            if flo == 0.0:
                out.append((float(s), float(lo)))
                continue
            if flo * fhi >= 0:
                continue
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = gaussian_c_min(alpha, n, mid, s)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi, fhi = mid, fm
            out.append((float(s), float(0.5 * (lo + hi))))
    return out


def ring_c2_curves(alpha: float, p_grid: Sequence[float], kmax: int = 10) -> list[tuple[float, int, float, float, float]]:
    """Closed-form (p, k, mu_k, nu_k, c2) rows for k = 1..kmax."""
    rows = []
    for p in p_grid:
        for k in range(1, kmax + 1):
            mu, nu = ring_mu_closed(k, p), ring_nu_closed(k, p)
            rows.append((float(p), k, mu, nu, criteria(alpha, mu, nu)[1]))
    return rows
