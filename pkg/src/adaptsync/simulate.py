"""Direct simulation of the adaptive network and synchronization-error diagnostics.

    dphi_i/dt   = omega - (1/N) sum_j a_ij kappa_ij sin(phi_i - phi_j + alpha)
    dkappa_ij/dt = -eps (kappa_ij + h(phi_i - phi_j, x_ij))

integrated with fixed-step classical RK4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .errors import NumericError, ParameterError
from .model import ModelParams, PlasticityRule, Topology, sync_state

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

CONVERGED = "converged"
DIVERGED = "diverged"
UNDECIDED = "undecided"

E_BLOW = 10.0
E_FLOOR = 1e-10
# E below this is treated as rounding noise when judging trends
E_SILENT = 1e-9


@dataclass(frozen=True)
class SimState:
    phases: FloatArray
    weights: FloatArray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.phases.shape[0]


@dataclass(frozen=True)
class SyncErrorSeries:
    """Sampled synchronization error plus the mean unwrapped phase at each sample."""

    t: FloatArray
    E: FloatArray
    mean_phase: FloatArray
    blew_up: bool = False

    def __len__(self) -> int:
        return len(self.t)


def wrap(x):
    """Map angles onto (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), 2.0 * np.pi)


def sync_error(phases: np.ndarray) -> float:
    """Euclidean norm of the wrapped deviations from oscillator 1."""
    d = wrap(phases - phases[0])
    return float(np.sqrt(np.dot(d, d)))


def _check_system(state: SimState, params: ModelParams, topology: Topology, rule: PlasticityRule) -> None:
    n = state.n
    if not (params.n == topology.n == rule.n == n) or state.weights.shape != (n, n):
        raise ParameterError(
            f"inconsistent sizes: params {params.n}, topology {topology.n}, rule {rule.n}, "
            f"phases {n}, weights {state.weights.shape}"
        )


def _rhs_generic(phi, kappa, params, topology, rule):
    n = phi.shape[0]
    diff = phi[:, None] - phi[None, :]
    dphi = params.omega - (topology.weights * kappa * np.sin(diff + params.alpha)).sum(axis=1) / n
    dkappa = -params.epsilon * (kappa + rule.value(diff, rule.relative_distances()))
    return dphi, dkappa


def rhs(state: SimState, params: ModelParams, topology: Topology, rule: PlasticityRule) -> tuple[FloatArray, FloatArray]:
    """Time derivative ``(dphi/dt, dkappa/dt)`` at ``state``."""
    _check_system(state, params, topology, rule)
    phi = np.ascontiguousarray(state.phases, dtype=float)
    kappa = np.ascontiguousarray(state.weights, dtype=float)
    if rule.shift is None:
        return _rhs_generic(phi, kappa, params, topology, rule)
    beta = rule.shift_matrix()
    dphi = np.empty_like(phi)
    dkappa = np.empty_like(kappa)
    _kernels.rhs_sinusoidal(
        phi, kappa, np.ascontiguousarray(topology.weights), np.sin(beta), np.cos(beta),
        params.alpha, params.epsilon, params.omega, dphi, dkappa,
    )
    return dphi, dkappa


def _make_stepper(params: ModelParams, topology: Topology, rule: PlasticityRule, dt: float):
    if rule.shift is not None:
        beta = rule.shift_matrix()
        adj = np.ascontiguousarray(topology.weights, dtype=float)
        sinb, cosb = np.sin(beta), np.cos(beta)

        def advance(phi, kappa, nsteps):
            _kernels.rk4_advance(phi, kappa, adj, sinb, cosb, params.alpha, params.epsilon, params.omega, dt, nsteps)

        return advance

    def advance(phi, kappa, nsteps):
        for _ in range(nsteps):
            k1 = _rhs_generic(phi, kappa, params, topology, rule)
            k2 = _rhs_generic(phi + 0.5 * dt * k1[0], kappa + 0.5 * dt * k1[1], params, topology, rule)
            k3 = _rhs_generic(phi + 0.5 * dt * k2[0], kappa + 0.5 * dt * k2[1], params, topology, rule)
            k4 = _rhs_generic(phi + dt * k3[0], kappa + dt * k3[1], params, topology, rule)
            phi += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            kappa += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])

    return advance


def integrate(
    state0: SimState,
    params: ModelParams,
    topology: Topology,
    rule: PlasticityRule,
    T: float,
    dt: float = 0.01,
    sample_every: int = 10,
    *,
    e_blow: float = E_BLOW,
    e_floor: float = E_FLOOR,
) -> tuple[SyncErrorSeries, SimState]:
    """Fixed-step RK4 from ``state0`` over ``T``, sampling E every ``sample_every`` steps.

    Stops early once E exceeds ``e_blow``, or once E drops below
    ``e_floor`` after the slow time 10/eps has passed.

    Raises:
        NumericError: the state became non-finite; ``partial`` holds the
            series sampled so far.
    """
    if not dt > 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if not T >= dt:
        raise ParameterError(f"T must be >= dt, got T = {T}, dt = {dt}")
    if sample_every < 1:
        raise ParameterError(f"sample_every must be >= 1, got {sample_every}")
    _check_system(state0, params, topology, rule)

    phi = np.array(state0.phases, dtype=float)
    kappa = np.array(state0.weights, dtype=float)
    advance = _make_stepper(params, topology, rule, dt)
    nsteps = int(round(T / dt))
    settle = 10.0 / params.epsilon if params.epsilon > 0 else math.inf

    ts, es, means = [], [], []
    blew_up = False
    step = 0
    t = state0.t

    def record():
        ts.append(t)
        es.append(sync_error(phi))
        means.append(float(phi.mean()))

    def series():
        return SyncErrorSeries(np.array(ts), np.array(es), np.array(means), blew_up)

    record()
    while step < nsteps:
        chunk = min(sample_every, nsteps - step)
        advance(phi, kappa, chunk)
        step += chunk
        t = state0.t + step * dt
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(kappa))):
            raise NumericError(f"non-finite state at t = {t:g}", time=t, partial=series())
        record()
        if es[-1] > e_blow:
            blew_up = True
            logger.debug("E exceeded %g at t = %g", e_blow, t)
            break
        if t - state0.t > settle and es[-1] < e_floor:
            break
    return series(), SimState(phi, kappa, t)


def perturbed_sync_init(
    params: ModelParams, topology: Topology, rule: PlasticityRule, amplitude: float, seed: int
) -> SimState:
    """Synchronous weights with phases drawn uniformly from [-amplitude, amplitude]."""
    if not amplitude >= 0.0:
        raise ParameterError(f"amplitude must be >= 0, got {amplitude}")
    s = sync_state(params, topology, rule)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-amplitude, amplitude, params.n) if amplitude > 0 else np.zeros(params.n)
    return SimState(phases, np.array(s.kappa), 0.0)


def _tail(n: int, fraction: float = 0.2) -> slice:
    return slice(n - max(2, int(math.ceil(fraction * n))), n)


def classify_run(series: SyncErrorSeries, e_blow: float = E_BLOW) -> str:
    if len(series) == 0:
        raise ParameterError("empty series")
    E = series.E
    if series.blew_up or E.max() > e_blow:
        return DIVERGED
    if E[0] <= E_SILENT:
        return CONVERGED if E.max() <= E_SILENT else UNDECIDED
    ratio = E[-1] / E[0]
    if ratio > 10.0:
        return DIVERGED
    if ratio < 0.1:
        tail = _tail(len(E))
        quiet = E[tail].max() <= E_SILENT
        if quiet or len(E) < 2:
            return CONVERGED
        slope = np.polyfit(series.t[tail], np.log(np.maximum(E[tail], 1e-300)), 1)[0]
        if slope <= 0.0:
            return CONVERGED
    return UNDECIDED


def measured_frequency(series: SyncErrorSeries) -> float:
    """Least-squares slope of the mean phase over the last 20% of the samples."""
    if len(series) < 5:
        raise ParameterError("need at least 5 samples to measure a frequency")
    tail = _tail(len(series))
    if tail.stop - tail.start < 3:
        tail = slice(len(series) - 3, len(series))
    t = series.t[tail]
    return float(np.polyfit(t - t[0], series.mean_phase[tail], 1)[0])


def growth_rate(series: SyncErrorSeries, e_linear: float = 0.1) -> float:
    """Exponential rate of E in its linear-growth window.

    The window runs from the minimum of E to the first later sample above
    ``e_linear``; the fit uses its second half, after faster modes died out.
    """
    E = series.E
    i0 = int(np.argmin(E))
    above = np.flatnonzero(E[i0:] > e_linear)
    j = i0 + int(above[0]) if above.size else len(E) - 1
    start = i0 + (j - i0) // 2
    if j - start < 2:
        raise ParameterError("linear-growth window has fewer than 3 samples")
    return float(np.polyfit(series.t[start : j + 1], np.log(E[start : j + 1]), 1)[0])
