"""Model parameters, ring-like topologies, plasticity rules and the synchronous state.

Conventions used throughout the package:

* distances are index differences ``d_ij = |j - i|``, folded onto the
  relative distance ``x = d/N`` (``1 - d/N`` beyond half the ring);
* the coupling function is ``g(phi) = -sin(phi + alpha)`` and the global
  ``1/N`` factor of the phase equation lives inside both Laplacians, so
  ``Dg(0) = -cos(alpha)`` and ``g(0) = -sin(alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ExistenceError, ParameterError

FloatArray = NDArray[np.float64]

LAPLACIAN_CONVENTION = "1/N"


def _frozen(a: ArrayLike) -> FloatArray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def check_alpha(alpha: float) -> float:
    if not (-math.pi < alpha <= math.pi):
        raise ParameterError(f"alpha must lie in (-pi, pi], got {alpha}")
    return alpha


@dataclass(frozen=True)
class ModelParams:
    """Oscillator count, phase lag, time-scale separation and natural frequency."""

    n: int
    alpha: float
    epsilon: float
    omega: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"N must be an integer >= 2, got {self.n}")
        check_alpha(self.alpha)
        # epsilon = 0 is the frozen-weight limit
        if not self.epsilon >= 0.0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def coupling_derivative(self) -> float:
        """Dg(0) under the package convention."""
        return -math.cos(self.alpha)

    @property
    def coupling_value(self) -> float:
        """g(0) under the package convention."""
        return -math.sin(self.alpha)


def index_distance(n: int) -> NDArray[np.int64]:
    i = np.arange(n)
    return np.abs(i[None, :] - i[:, None])


def relative_distance(d: ArrayLike, n: int) -> FloatArray:
    """Fold an index distance onto ``[0, 1/2]``."""
    d = np.asarray(d, dtype=float)
    return np.where(d <= n / 2, d / n, 1.0 - d / n)


def _is_circulant(w: FloatArray, atol: float) -> bool:
    n = w.shape[0]
    first = w[0]
    return all(np.allclose(w[i], np.roll(first, i), rtol=0.0, atol=atol) for i in range(1, n))


@dataclass(frozen=True)
class Topology:
    """Weighted adjacency matrix with cached structural flags.

    Build instances through :func:`build_ring_adjacency`,
    :func:`build_gaussian_adjacency` or :meth:`Topology.from_matrix`; the
    flags are trusted by downstream code.
    """

    weights: FloatArray
    is_circulant: bool
    is_symmetric: bool

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def distances(self) -> NDArray[np.int64]:
        return index_distance(self.n)

    @classmethod
    def from_matrix(cls, weights: ArrayLike, *, atol: float = 1e-12) -> "Topology":
        """Wrap an arbitrary weight matrix, detecting circulant/symmetric structure.

        Entries must lie in [0, 1]; the diagonal is forced to zero.
        """
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 2:
            raise ParameterError(f"adjacency must be a square matrix with N >= 2, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ParameterError("adjacency contains non-finite entries")
        if w.min() < 0.0 or w.max() > 1.0:
            raise ParameterError("adjacency entries must lie in [0, 1]")
        np.fill_diagonal(w, 0.0)
        return cls(
            weights=_frozen(w),
            is_circulant=_is_circulant(w, atol),
            is_symmetric=bool(np.allclose(w, w.T, rtol=0.0, atol=atol)),
        )


def build_ring_adjacency(n: int, p_range: int) -> Topology:
    """Nonlocal ring: nodes within ``p_range`` index steps on either side are coupled.

    For even ``n`` and ``p_range == n // 2`` the antipodal link is counted once.
    """
    if n < 2:
        raise ParameterError(f"N must be >= 2, got {n}")
    if int(p_range) != p_range or not 1 <= p_range <= n // 2:
        raise ParameterError(f"coupling range P must satisfy 1 <= P <= {n // 2}, got {p_range}")
    d = index_distance(n)
    linked = ((d > 0) & (d <= p_range)) | ((n - d > 0) & (n - d <= p_range))
    w = linked.astype(float)
    return Topology(weights=_frozen(w), is_circulant=True, is_symmetric=True)


def ring_range(n: int, p: float) -> int:
    """Integer coupling range P = round(p N) for a relative range p."""
    if not 0.0 < p <= 0.5:
        raise ParameterError(f"relative coupling range p must lie in (0, 1/2], got {p}")
    P = int(round(p * n))
    if not 1 <= P <= n // 2:
        raise ParameterError(f"p = {p} gives P = {P}, outside [1, {n // 2}] for N = {n}")
    return P


def gaussian_weight(x: ArrayLike, xi: float, sigma: float) -> FloatArray:
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - xi) ** 2) / (2.0 * sigma**2))


def build_gaussian_adjacency(n: int, xi: float, sigma: float, normalize: bool = True) -> Topology:
    """Isotropic network with Gaussian distance-dependent weights."""
    if n < 2:
        raise ParameterError(f"N must be >= 2, got {n}")
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not 0.0 <= xi <= 0.5:
        raise ParameterError(f"xi must lie in [0, 1/2], got {xi}")
    w = gaussian_weight(relative_distance(index_distance(n), n), xi, sigma)
    np.fill_diagonal(w, 0.0)
    if normalize:
        w = w / w.sum(axis=1, keepdims=True)
    return Topology(weights=_frozen(w), is_circulant=True, is_symmetric=True)


PhaseFn = Callable[[ArrayLike, ArrayLike], FloatArray]


@dataclass(frozen=True)
class PlasticityRule:
    """Distance-dependent adaptation rule ``h(phi, x)`` and its phase derivative.

    ``shift`` is set for rules of the form ``sin(phi + beta(x))``; the
    simulator uses it for a fused kernel.
    """

    n: int
    value: PhaseFn
    derivative: PhaseFn
    shift: Callable[[ArrayLike], FloatArray] | None = field(default=None)

    def relative_distances(self) -> FloatArray:
        return relative_distance(index_distance(self.n), self.n)

    def h_matrix(self, phi: ArrayLike = 0.0) -> FloatArray:
        """Matrix of h_ij(phi); ``phi`` may be a scalar or an N x N array."""
        return np.asarray(self.value(phi, self.relative_distances()), dtype=float)

    def dh_matrix(self, phi: ArrayLike = 0.0) -> FloatArray:
        return np.asarray(self.derivative(phi, self.relative_distances()), dtype=float)

    def shift_matrix(self) -> FloatArray:
        if self.shift is None:
            raise ParameterError("rule has no phase-shift form")
        return np.asarray(self.shift(self.relative_distances()), dtype=float)


def sinusoidal_rule(n: int) -> PlasticityRule:
    """``h(phi, x) = sin(phi + beta(x))`` with ``beta`` sweeping from -pi to 0.

    Odd ``n`` rescales distances by ``N/(N+1)`` so that the largest folded
    distance stays below ``1/2``.
    """
    if n < 2:
        raise ParameterError(f"N must be >= 2, got {n}")
    scale = 1.0 if n % 2 == 0 else n / (n + 1)

    def beta(x):
        return (2.0 * scale * np.asarray(x, dtype=float) - 1.0) * np.pi

    def value(phi, x):
        return np.sin(np.asarray(phi, dtype=float) + beta(x))

    def derivative(phi, x):
        return np.cos(np.asarray(phi, dtype=float) + beta(x))

    return PlasticityRule(n=n, value=value, derivative=derivative, shift=beta)


@dataclass(frozen=True)
class CoupledLaplacians:
    """The structure Laplacians L^h and L^Dh (both carry the 1/N factor)."""

    lh: FloatArray
    ldh: FloatArray
    is_circulant: bool = False
    is_symmetric: bool = False
    convention: str = LAPLACIAN_CONVENTION

    @property
    def n(self) -> int:
        return self.lh.shape[0]


def _laplacian(offdiag: FloatArray) -> FloatArray:
    lap = offdiag.copy()
    np.fill_diagonal(lap, 0.0)
    lap[np.diag_indices_from(lap)] = -lap.sum(axis=1)
    return lap


def _check_sizes(topology: Topology, rule: PlasticityRule) -> None:
    if topology.n != rule.n:
        raise ParameterError(f"topology has N = {topology.n} but rule has N = {rule.n}")


def build_laplacians(topology: Topology, rule: PlasticityRule) -> CoupledLaplacians:
    _check_sizes(topology, rule)
    n = topology.n
    a = topology.weights
    lh = _laplacian(a * rule.h_matrix(0.0) / n)
    ldh = _laplacian(a * rule.dh_matrix(0.0) / n)
    sym = topology.is_symmetric and np.array_equal(lh, lh.T) and np.array_equal(ldh, ldh.T)
    return CoupledLaplacians(
        lh=_frozen(lh), ldh=_frozen(ldh), is_circulant=topology.is_circulant, is_symmetric=bool(sym)
    )


def circulant_laplacian_rows(first_row: ArrayLike, rule: PlasticityRule) -> tuple[FloatArray, FloatArray]:
    """First rows of L^h and L^Dh for a circulant adjacency given by its first row.

    O(N) shortcut for parameter sweeps; agrees with :func:`build_laplacians`.
    """
    a = np.array(first_row, dtype=float)
    n = a.shape[0]
    if n != rule.n:
        raise ParameterError(f"row has length {n} but rule has N = {rule.n}")
    a[0] = 0.0
    x = relative_distance(np.arange(n), n)
    lh = a * np.asarray(rule.value(0.0, x), dtype=float) / n
    ldh = a * np.asarray(rule.derivative(0.0, x), dtype=float) / n
    lh[0] = -lh[1:].sum()
    ldh[0] = -ldh[1:].sum()
    return lh, ldh


def check_row_sum(topology: Topology, rule: PlasticityRule) -> float:
    """Return the constant weighted row sum ``w``; raise if rows disagree.

    The synchronous state only exists when every row of ``a_ij h_ij(0)``
    sums to the same value.
    """
    _check_sizes(topology, rule)
    hw = topology.weights * rule.h_matrix(0.0)
    np.fill_diagonal(hw, 0.0)
    sums = hw.sum(axis=1)
    w = float(sums[0])
    dev = float(np.max(np.abs(sums - w)))
    if dev >= 1e-9 * topology.n:
        raise ExistenceError(f"weighted row sums are not constant (max deviation {dev:.3e})", dev)
    return w


@dataclass(frozen=True)
class SyncState:
    """In-phase synchronous state in the co-rotating frame."""

    frequency: float
    kappa: FloatArray
    row_sum: float


def sync_state(params: ModelParams, topology: Topology, rule: PlasticityRule) -> SyncState:
    if params.n != topology.n:
        raise ParameterError(f"params.n = {params.n} but topology has N = {topology.n}")
    w = check_row_sum(topology, rule)
    # Omega = -w g(0) where the coupling without the Laplacian 1/N has g(0) = -sin(alpha)/N
    frequency = w * math.sin(params.alpha) / params.n
    return SyncState(frequency=frequency, kappa=_frozen(-rule.h_matrix(0.0)), row_sum=w)
