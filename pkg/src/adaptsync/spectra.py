"""Mode spectra (mu_k, nu_k) of the structure Laplacians.

Four routes are provided and cross-checked in the tests:

* exact circulant spectra via the discrete Fourier transform,
* continuum limits ``N -> inf`` by composite Simpson quadrature,
* closed forms for the nonlocal ring with the sinusoidal rule,
* a cyclic Jacobi eigendecomposition for any symmetric L^h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NumericError, ParameterError, StructureError
from .model import CoupledLaplacians

EXACT_DFT = "exact-dft"
CONTINUUM = "continuum"
CLOSED_FORM_RING = "closed-form-ring"
SYMMETRIC_EIG = "symmetric-eig"

SIMPSON_PANELS = 4096
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class ModeSpectrum:
    """Per-mode eigenvalue pairs; ``k[i]`` is the mode index of ``mu[i]``, ``nu[i]``."""

    k: NDArray[np.int64]
    mu: NDArray[np.complex128]
    nu: NDArray[np.complex128]
    provenance: str

    def __post_init__(self):
        if not (len(self.k) == len(self.mu) == len(self.nu)):
            raise ParameterError("k, mu and nu must have equal length")

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.mu.imag) < 1e-10) and np.all(np.abs(self.nu.imag) < 1e-10))

    def sorted(self) -> "ModeSpectrum":
        order = np.argsort(self.k, kind="stable")
        return ModeSpectrum(self.k[order], self.mu[order], self.nu[order], self.provenance)


def _spectrum(k, mu, nu, provenance) -> ModeSpectrum:
    return ModeSpectrum(
        np.asarray(k, dtype=np.int64),
        np.asarray(mu, dtype=np.complex128),
        np.asarray(nu, dtype=np.complex128),
        provenance,
    )


def circulant_eigenvalues(first_row: ArrayLike) -> NDArray[np.complex128]:
    """Eigenvalues ``sum_j l_j exp(i 2 pi (j-1) k / N)`` of a circulant matrix, k = 0..N-1."""
    row = np.asarray(first_row)
    n = row.shape[0]
    # numpy's inverse transform uses the +i sign convention and a 1/N factor
    vals = np.fft.ifft(row) * n
    # summing a Laplacian row exactly gives mu_0 = 0 rather than FFT round-off
    vals[0] = row.sum()
    return vals


def circulant_spectrum(lh_row: ArrayLike, ldh_row: ArrayLike) -> ModeSpectrum:
    mu = circulant_eigenvalues(lh_row)
    nu = circulant_eigenvalues(ldh_row)
    return _spectrum(np.arange(len(mu)), mu, nu, EXACT_DFT)


def exact_spectrum(lap: CoupledLaplacians) -> ModeSpectrum:
    if not lap.is_circulant:
        raise StructureError("exact_spectrum needs circulant Laplacians; use symmetric_decomposition")
    return circulant_spectrum(lap.lh[0], lap.ldh[0])


# --- continuum limits -------------------------------------------------------


def simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int = SIMPSON_PANELS) -> float:
    """Composite Simpson rule with an even number of panels.

    Endpoints are sampled one ulp inside ``[a, b]`` so that piecewise
    integrands pick up their one-sided limits.
    """
    if panels < 2 or panels % 2:
        raise ParameterError(f"Simpson needs an even panel count >= 2, got {panels}")
    if b == a:
        return 0.0
    x = np.linspace(a, b, panels + 1)
    x[0] = np.nextafter(a, b)
    x[-1] = np.nextafter(b, a)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / panels
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _piecewise_simpson(f, breakpoints: Sequence[float], panels: int) -> float:
    edges = sorted({0.0, 0.5, *(b for b in breakpoints if 0.0 < b < 0.5)})
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = max(2, 2 * int(round(panels * (hi - lo))))  # panels per unit length 2*panels
        total += simpson(f, lo, hi, m)
    return total


def continuum_mu(
    k: int,
    a: Callable[[np.ndarray], np.ndarray],
    h0: Callable[[np.ndarray], np.ndarray],
    *,
    breakpoints: Sequence[float] = (),
    panels: int = SIMPSON_PANELS,
) -> float:
    """Large-N limit ``2 int_0^{1/2} a(x) h0(x) (cos(2 pi k x) - 1) dx``.

    ``breakpoints`` lists discontinuities of ``a`` so that each smooth piece
    is integrated separately; ``panels`` counts panels over ``[0, 1/2]``.
    """
    if k == 0:
        return 0.0
    return 2.0 * _piecewise_simpson(lambda x: a(x) * h0(x) * (np.cos(2 * np.pi * k * x) - 1.0), breakpoints, panels)


def continuum_nu(
    k: int,
    a: Callable[[np.ndarray], np.ndarray],
    dh0: Callable[[np.ndarray], np.ndarray],
    *,
    breakpoints: Sequence[float] = (),
    panels: int = SIMPSON_PANELS,
) -> float:
    """Same as :func:`continuum_mu` with the phase derivative of the rule."""
    return continuum_mu(k, a, dh0, breakpoints=breakpoints, panels=panels)


def ring_profile(p: float) -> Callable[[np.ndarray], np.ndarray]:
    """Weight profile of the nonlocal ring on the folded distance."""
    _check_p(p)
    return lambda x: (np.asarray(x) <= p).astype(float)


def h0_sinusoidal(x):
    """h(0, x) of the sinusoidal rule in the continuum (even-N branch)."""
    return -np.sin(2 * np.pi * np.asarray(x))


def dh0_sinusoidal(x):
    return -np.cos(2 * np.pi * np.asarray(x))


def folded_modes(n: int) -> NDArray[np.int64]:
    k = np.arange(n)
    return np.minimum(k, n - k)


def continuum_spectrum(
    n: int,
    a: Callable[[np.ndarray], np.ndarray],
    h0: Callable = h0_sinusoidal,
    dh0: Callable = dh0_sinusoidal,
    *,
    breakpoints: Sequence[float] = (),
) -> ModeSpectrum:
    """Continuum values assigned to modes k = 0..N-1 through the folded index min(k, N-k)."""
    kf = folded_modes(n)
    cache = {}
    for q in np.unique(kf):
        cache[q] = (
            continuum_mu(int(q), a, h0, breakpoints=breakpoints),
            continuum_nu(int(q), a, dh0, breakpoints=breakpoints),
        )
    mu = [cache[q][0] for q in kf]
    nu = [cache[q][1] for q in kf]
    return _spectrum(np.arange(n), mu, nu, CONTINUUM)


# --- closed forms for the ring ---------------------------------------------


def _check_p(p: float) -> None:
    if not 0.0 < p <= 0.5:
        raise ParameterError(f"relative coupling range p must lie in (0, 1/2], got {p}")


def ring_mu_closed(k: int, p: float) -> float:
    _check_p(p)
    if k == 0:
        return 0.0
    c, s = math.cos(2 * math.pi * p), math.sin(2 * math.pi * p)
    if k == 1:
        tail = 0.5 * (c * c - 1.0)
    else:
        ck, sk = math.cos(2 * math.pi * k * p), math.sin(2 * math.pi * k * p)
        tail = (k * s * sk + c * ck - 1.0) / (1.0 - k * k)
    return (1.0 - c) / math.pi + tail / math.pi


def ring_nu_closed(k: int, p: float) -> float:
    _check_p(p)
    if k == 0:
        return 0.0
    c, s = math.cos(2 * math.pi * p), math.sin(2 * math.pi * p)
    if k == 1:
        tail = p * math.pi + math.sin(4 * math.pi * p) / 4.0
    else:
        ck, sk = math.cos(2 * math.pi * k * p), math.sin(2 * math.pi * k * p)
        tail = (s * ck - k * c * sk) / (1.0 - k * k)
    return s / math.pi - tail / math.pi


def ring_mu_limit(p: float) -> float:
    """Value the ring mu_k approach for large k."""
    _check_p(p)
    return (1.0 - math.cos(2 * math.pi * p)) / math.pi


def ring_nu_limit(p: float) -> float:
    """Large-k limit of ``ring_nu_closed``: +sin(2 pi p)/pi, the sign the formula itself implies."""
    _check_p(p)
    return math.sin(2 * math.pi * p) / math.pi


def closed_form_ring_spectrum(n: int, p: float) -> ModeSpectrum:
    kf = folded_modes(n)
    mu = [ring_mu_closed(int(q), p) for q in kf]
    nu = [ring_nu_closed(int(q), p) for q in kf]
    return _spectrum(np.arange(n), mu, nu, CLOSED_FORM_RING)


def approximation_error(exact: ModeSpectrum, approx: ModeSpectrum) -> tuple[float, float]:
    """Root-mean-square deviation per mode, separately for mu and nu."""
    if exact.n != approx.n:
        raise ParameterError(f"spectra have different sizes ({exact.n} vs {approx.n})")
    e, a = exact.sorted(), approx.sorted()
    if not np.array_equal(e.k, a.k):
        raise ParameterError("spectra do not cover the same mode indices")
    e_mu = math.sqrt(float(np.sum(np.abs(e.mu - a.mu) ** 2)) / e.n)
    e_nu = math.sqrt(float(np.sum(np.abs(e.nu - a.nu) ** 2)) / e.n)
    return e_mu, e_nu


# --- symmetric eigendecomposition ------------------------------------------


def _round_robin(n: int):
    """Yield rounds of disjoint index pairs covering every pair once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        if pairs:
            yield np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])
        players = [players[0], players[-1], *players[1:-1]]


def jacobi_eigh(
    a: ArrayLike, *, max_sweeps: int = JACOBI_MAX_SWEEPS, tol: float = JACOBI_TOL
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix.

    Cyclic Jacobi in round-robin order, so each round applies ``N/2``
    disjoint rotations at once. Stops when the off-diagonal Frobenius norm
    drops below ``tol`` times the matrix norm.
    """
    A = np.array(a, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ParameterError("jacobi_eigh needs a square matrix")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(A).max())):
        raise StructureError("jacobi_eigh needs a symmetric matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0.0 or n == 1:
        return np.diag(A).copy(), V
    rounds = list(_round_robin(n))

    offmask = ~np.eye(n, dtype=bool)

    def off(M):
        # summed directly; ||M||^2 - ||diag||^2 cancels below ~1e-8 ||M||
        return float(np.linalg.norm(M[offmask]))

    for _ in range(max_sweeps):
        if off(A) <= tol * scale:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (A[q, q] - A[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p], A[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :], A[q, :] = c[:, None] * Ap - s[:, None] * Aq, s[:, None] * Ap + c[:, None] * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
    else:
        if off(A) > tol * scale:
            raise NumericError(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off(A):.3e})")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(frozen=True)
class EigenDecomposition:
    """Orthogonal ``q`` diagonalizing L^h and the diagonal of ``q.T @ L^Dh @ q``.

    ``modes`` gives the Fourier index of each column when the Laplacians are
    circulant and the assignment is unambiguous, otherwise ``None``.
    """

    q: NDArray[np.float64]
    mu: NDArray[np.float64]
    nu_diag: NDArray[np.float64]
    offdiag_residual: float
    modes: NDArray[np.int64] | None = None

    def to_spectrum(self) -> ModeSpectrum:
        k = self.modes if self.modes is not None else np.arange(len(self.mu))
        return _spectrum(k, self.mu, self.nu_diag, SYMMETRIC_EIG).sorted()


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _fourier_modes(q: np.ndarray) -> np.ndarray | None:
    n = q.shape[0]
    power = np.abs(np.fft.fft(q, axis=0)) ** 2
    folded = power + power[(-np.arange(n)) % n]
    half = n // 2
    dominant = np.argmax(folded[: half + 1], axis=0)
    modes = np.empty(n, dtype=np.int64)
    for f in range(half + 1):
        cols = np.flatnonzero(dominant == f)
        targets = [f] if f == 0 or 2 * f == n else [f, n - f]
        if len(cols) != len(targets):
            return None
        modes[cols] = targets
    return modes


def symmetric_decomposition(lap: CoupledLaplacians) -> EigenDecomposition:
    """Diagonalize symmetric L^h and project L^Dh onto its eigenbasis.

    Inside each cluster of (numerically) repeated mu the basis is rotated to
    diagonalize the corresponding block of L^Dh, which makes the result
    exact whenever the two Laplacians commute.
    """
    lh = np.asarray(lap.lh)
    if not np.allclose(lh, lh.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(lh).max())):
        raise StructureError("symmetric_decomposition needs a symmetric L^h")
    ldh = np.asarray(lap.ldh)
    mu, q = jacobi_eigh(lh)
    scale = max(1.0, float(np.abs(mu).max()))
    m = q.T @ ldh @ q
    if np.allclose(ldh, ldh.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(ldh).max())):
        for idx in _clusters(mu, 1e-9 * scale):
            if len(idx) > 1:
                _, v = jacobi_eigh(m[np.ix_(idx, idx)])
                q[:, idx] = q[:, idx] @ v
        m = q.T @ ldh @ q
    offdiag = m - np.diag(np.diag(m))
    modes = _fourier_modes(q) if lap.is_circulant else None
    return EigenDecomposition(
        q=q, mu=mu, nu_diag=np.diag(m).copy(), offdiag_residual=float(np.abs(offdiag).max()), modes=modes
    )
