"""Brute-force certification of the dimension reduction and the quadratic mode equation.

The full linearization around the synchronous state acts on
``(xi, chi)`` with ``xi`` the N phase perturbations and ``chi`` the
row-major N^2 weight perturbations:

    J = [[Dg(0) L^h,  g(0) B ],
         [-eps C,     -eps I ]]

Here ``B`` has block rows ``a_i / N`` (the Laplacian 1/N convention) and
``C`` maps ``xi`` to ``Dh_ij(0) (xi_i - xi_j)``. The reduced system is

    J_red = [[Dg(0) L^h,   g(0) I],
             [eps L^Dh,   -eps I ]]

Eigenvalues come from an in-module dense solver (balancing, Householder
Hessenberg reduction, Francis double-shift QR) so the certificate does
not share code with the analytic route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import CertificationError, NumericError, ParameterError, SizeError
from .model import CoupledLaplacians, ModelParams, PlasticityRule, Topology, build_laplacians
from .msf import quadratic_roots, structure_parameters
from .spectra import circulant_spectrum, symmetric_decomposition

N_CAP = 24
DENSE_CAP = 1000
MATCH_RADIUS = 1e-6
EXACT_TOL = 1e-8
ORDER_EPS2_FACTOR = 10.0
COMMUTE_TOL = 1e-12

_EPS = np.finfo(float).eps


# --- dense nonsymmetric eigensolver ----------------------------------------


def _balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity by powers of two equalizing row and column norms."""
    n = a.shape[0]
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / radix, 1.0, c + r
            while c < g:
                f *= radix
                c *= radix * radix
            g = r * radix
            while c > g:
                f /= radix
                c /= radix * radix
            if (c + r) / f < 0.95 * s:
                converged = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def _householder(x: np.ndarray) -> tuple[np.ndarray, float]:
    v = x.astype(float).copy()
    norm = math.sqrt(float(v @ v))
    if norm == 0.0:
        return v, 0.0
    v[0] += math.copysign(norm, v[0]) if v[0] != 0 else norm
    vv = float(v @ v)
    return v, (2.0 / vv if vv > 0 else 0.0)


def _hessenberg(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    for k in range(n - 2):
        v, beta = _householder(a[k + 1 :, k])
        if beta == 0.0:
            continue
        a[k + 1 :, k:] -= beta * np.outer(v, v @ a[k + 1 :, k:])
        a[:, k + 1 :] -= beta * np.outer(a[:, k + 1 :] @ v, v)
        a[k + 2 :, k] = 0.0
    return a


def _eig2(a, b, c, d) -> tuple[complex, complex]:
    """Eigenvalues of [[a, b], [c, d]]."""
    tr = a + d
    det = a * d - b * c
    r1, r2 = quadratic_roots(-tr, det)
    return r1, r2


def _francis_step(h: np.ndarray, exceptional: bool) -> None:
    """One implicit double-shift QR sweep on the unreduced Hessenberg block ``h`` (in place)."""
    m = h.shape[0]
    if exceptional:
        w = abs(h[m - 1, m - 2]) + abs(h[m - 2, m - 3])
        s, t = 1.5 * w, w * w
    else:
        s = h[m - 2, m - 2] + h[m - 1, m - 1]
        t = h[m - 2, m - 2] * h[m - 1, m - 1] - h[m - 2, m - 1] * h[m - 1, m - 2]
    x = h[0, 0] * h[0, 0] + h[0, 1] * h[1, 0] - s * h[0, 0] + t
    y = h[1, 0] * (h[0, 0] + h[1, 1] - s)
    z = h[1, 0] * h[2, 1]
    for k in range(m - 2):
        v, beta = _householder(np.array([x, y, z]))
        if beta != 0.0:
            q = max(0, k - 1)
            h[k : k + 3, q:] -= beta * np.outer(v, v @ h[k : k + 3, q:])
            r = min(k + 4, m)
            h[:r, k : k + 3] -= beta * np.outer(h[:r, k : k + 3] @ v, v)
        x = h[k + 1, k]
        y = h[k + 2, k]
        if k < m - 3:
            z = h[k + 3, k]
    v, beta = _householder(np.array([x, y]))
    if beta != 0.0:
        h[m - 2 :, m - 3 :] -= beta * np.outer(v, v @ h[m - 2 :, m - 3 :])
        h[:, m - 2 :] -= beta * np.outer(h[:, m - 2 :] @ v, v)


def _hqr(h: np.ndarray) -> NDArray[np.complex128]:
    n = h.shape[0]
    eig = np.empty(n, dtype=np.complex128)
    # Frobenius norm: deflating below eps ||H|| stays within the backward error of QR
    norm = max(float(np.linalg.norm(h)), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    total = 0
    cap = 30 * n
    while hi >= 0:
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = norm
            # local test, with a normwise backstop for clustered eigenvalues
            sub = abs(h[lo, lo - 1])
            if sub <= _EPS * s or sub <= _EPS * norm:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        if lo == hi - 1:
            eig[hi - 1], eig[hi] = _eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            hi -= 2
            its = 0
            continue
        if total >= cap:
            raise NumericError(f"QR iteration did not converge after {cap} iterations")
        its += 1
        total += 1
        _francis_step(h[lo : hi + 1, lo : hi + 1], exceptional=its % 10 == 0)
    return eig


def dense_eigenvalues(matrix: np.ndarray) -> NDArray[np.complex128]:
    """All eigenvalues of a real square matrix (order unspecified)."""
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"need a square matrix, got shape {a.shape}")
    m = a.shape[0]
    if m > DENSE_CAP:
        raise SizeError(f"matrix size {m} exceeds the dense cap {DENSE_CAP}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix has non-finite entries")
    if m == 0:
        return np.empty(0, dtype=np.complex128)
    if m == 1:
        return a[0].astype(np.complex128)
    return _hqr(_hessenberg(_balance(a)))


# --- Jacobians ---------------------------------------------------------------


def _dh0(topology: Topology, rule: PlasticityRule) -> np.ndarray:
    d = rule.dh_matrix(0.0).copy()
    np.fill_diagonal(d, 0.0)
    return d


def _check(params: ModelParams, topology: Topology, rule: PlasticityRule) -> None:
    if not params.n == topology.n == rule.n:
        raise ParameterError(f"sizes disagree: params {params.n}, topology {topology.n}, rule {rule.n}")


def assemble_full_jacobian(
    params: ModelParams, topology: Topology, rule: PlasticityRule, *, n_cap: int = N_CAP
) -> NDArray[np.float64]:
    """Dense N(N+1) x N(N+1) linearization in the (xi, vec(chi)) coordinates."""
    _check(params, topology, rule)
    n = params.n
    if n > n_cap:
        raise SizeError(f"N = {n} exceeds the full-Jacobian cap {n_cap}")
    lap = build_laplacians(topology, rule)
    a = topology.weights
    dh = _dh0(topology, rule)
    eps = params.epsilon
    size = n * (n + 1)
    J = np.zeros((size, size))
    J[:n, :n] = params.coupling_derivative * lap.lh
    rows = np.arange(n)
    for i in range(n):
        J[i, n + i * n : n + (i + 1) * n] = params.coupling_value * a[i] / n
    # -eps C: weight (i, j) responds to Dh_ij (xi_i - xi_j)
    for i in range(n):
        r = n + i * n + rows
        J[r, i] += -eps * dh[i]
        J[r, rows] -= -eps * dh[i]
    J[n:, n:] = -eps * np.eye(n * n)
    return J


def assemble_reduced_jacobian(params: ModelParams, topology: Topology, rule: PlasticityRule) -> NDArray[np.float64]:
    _check(params, topology, rule)
    lap = build_laplacians(topology, rule)
    return reduced_jacobian(lap.lh, lap.ldh, params.alpha, params.epsilon)


def reduced_jacobian(lh, ldh, alpha: float, epsilon: float) -> NDArray[np.float64]:
    n = np.shape(lh)[0]
    eye = np.eye(n)
    return np.block(
        [
            [-math.cos(alpha) * np.asarray(lh), -math.sin(alpha) * eye],
            [epsilon * np.asarray(ldh), -epsilon * eye],
        ]
    )


# --- matching and certification -------------------------------------------


def match_multisets(x, y) -> tuple[np.ndarray, float]:
    """Greedy nearest-neighbour pairing of ``x`` into ``y`` (equal sizes).

    Returns ``perm`` with ``x[i]`` paired to ``y[perm[i]]`` and the largest
    pair distance.
    """
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != y.shape:
        raise ParameterError(f"multisets differ in size ({x.size} vs {y.size})")
    dist = np.abs(x[:, None] - y[None, :])
    perm = np.full(x.size, -1)
    worst = 0.0
    # settle the closest pairs first
    order = np.argsort(dist, axis=None, kind="stable")
    used_x = np.zeros(x.size, bool)
    used_y = np.zeros(y.size, bool)
    left = x.size
    for flat in order:
        i, j = divmod(int(flat), y.size)
        if used_x[i] or used_y[j]:
            continue
        used_x[i] = used_y[j] = True
        perm[i] = j
        worst = max(worst, float(dist[i, j]))
        left -= 1
        if left == 0:
            break
    return perm, worst


def mode_pairs(lh, ldh, *, circulant: bool) -> tuple[np.ndarray, np.ndarray]:
    """(mu_i, nu_i) pairs feeding the quadratic mode equation."""
    lh = np.asarray(lh)
    ldh = np.asarray(ldh)
    if circulant:
        spec = circulant_spectrum(lh[0], ldh[0])
        return spec.mu, spec.nu
    if np.allclose(lh, lh.T, rtol=0.0, atol=1e-14):
        dec = symmetric_decomposition(CoupledLaplacians(lh, ldh, False, True))
        return dec.mu.astype(complex), dec.nu_diag.astype(complex)
    # general diagonalizable L^h; eigenvectors are not part of the oracle's own solver
    mu, q = np.linalg.eig(lh)
    nu = np.diag(np.linalg.solve(q, ldh @ q))
    return mu, nu


def quadratic_spectrum(mu, nu, alpha: float, epsilon: float) -> NDArray[np.complex128]:
    """The 2N roots of the per-mode quadratic."""
    a, b = structure_parameters(alpha, mu, nu)
    r1, r2 = quadratic_roots(epsilon - a, -epsilon * (a + b))
    return np.concatenate([np.atleast_1d(r1), np.atleast_1d(r2)])


@dataclass
class Certification:
    n: int
    alpha: float
    epsilon: float
    commuting: bool
    commutator_norm: float
    full: NDArray[np.complex128] | None
    reduced: NDArray[np.complex128]
    quadratic: NDArray[np.complex128]
    trivial_count: int | None
    full_reduced_gap: float | None
    reduced_quadratic_gap: float
    quadratic_bound: float
    clauses: dict[str, bool] = field(default_factory=dict)
    trivial_idx: np.ndarray | None = None
    full_to_reduced: np.ndarray | None = None
    reduced_to_quadratic: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())

    def first_failure(self) -> str | None:
        for name, ok in self.clauses.items():
            if not ok:
                return name
        return None

    def summary(self) -> str:
        lines = [
            f"N = {self.n}, alpha = {self.alpha:.17g}, epsilon = {self.epsilon:.17g}",
            f"commuting = {self.commuting} (max |[L^h, L^Dh]| = {self.commutator_norm:.3e})",
        ]
        if self.full is not None:
            lines.append(
                f"(i)   eigenvalues within {MATCH_RADIUS:g} of -eps: {self.trivial_count} "
                f"(need {self.n * self.n - self.n}) -> {'PASS' if self.clauses['i'] else 'FAIL'}"
            )
            lines.append(
                f"(ii)  full vs reduced, max pair distance {self.full_reduced_gap:.3e} "
                f"(tol {MATCH_RADIUS:g}) -> {'PASS' if self.clauses['ii'] else 'FAIL'}"
            )
        lines.append(
            f"(iii) reduced vs quadratic roots, max pair distance {self.reduced_quadratic_gap:.3e} "
            f"(tol {self.quadratic_bound:.3e}) -> {'PASS' if self.clauses['iii'] else 'FAIL'}"
        )
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def certify_propositions(
    params: ModelParams,
    topology: Topology,
    rule: PlasticityRule,
    *,
    include_full: bool = True,
    n_cap: int = N_CAP,
    raise_on_failure: bool = True,
) -> Certification:
    """Check the three spectral claims numerically.

    (i)   the full spectrum holds at least N^2 - N eigenvalues at -eps;
    (ii)  the other 2N match the reduced spectrum;
    (iii) the reduced spectrum matches the quadratic roots, to 1e-8 when
          the Laplacians commute and to 10 eps^2 otherwise.

    Raises:
        CertificationError: naming the first failing clause, unless
            ``raise_on_failure`` is false.
    """
    _check(params, topology, rule)
    n, eps, alpha = params.n, params.epsilon, params.alpha
    lap = build_laplacians(topology, rule)
    comm = float(np.abs(lap.lh @ lap.ldh - lap.ldh @ lap.lh).max())
    commuting = comm < COMMUTE_TOL

    reduced = dense_eigenvalues(reduced_jacobian(lap.lh, lap.ldh, alpha, eps))
    mu, nu = mode_pairs(lap.lh, lap.ldh, circulant=lap.is_circulant)
    quad = quadratic_spectrum(mu, nu, alpha, eps)
    r2q, gap3 = match_multisets(reduced, quad)
    bound = EXACT_TOL if commuting else ORDER_EPS2_FACTOR * eps * eps
    cert = Certification(
        n=n, alpha=alpha, epsilon=eps, commuting=commuting, commutator_norm=comm,
        full=None, reduced=reduced, quadratic=quad, trivial_count=None, full_reduced_gap=None,
        reduced_quadratic_gap=gap3, quadratic_bound=bound, reduced_to_quadratic=r2q,
    )
    if include_full:
        full = dense_eigenvalues(assemble_full_jacobian(params, topology, rule, n_cap=n_cap))
        cert.full = full
        near = np.abs(full + eps)
        cert.trivial_count = int(np.sum(near < MATCH_RADIUS))
        cert.clauses["i"] = cert.trivial_count >= n * n - n
        trivial = np.argsort(near, kind="stable")[: n * n - n]
        rest = np.setdiff1d(np.arange(full.size), trivial)
        f2r, gap2 = match_multisets(full[rest], reduced)
        cert.trivial_idx = trivial
        cert.full_to_reduced = np.full(full.size, -1)
        cert.full_to_reduced[rest] = f2r
        cert.full_reduced_gap = gap2
        cert.clauses["ii"] = gap2 < MATCH_RADIUS
    cert.clauses["iii"] = gap3 <= bound
    if raise_on_failure and not cert.passed:
        clause = cert.first_failure()
        raise CertificationError(clause, cert.summary())
    return cert
