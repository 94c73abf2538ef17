"""CSV and SVG output.

Every float is written with 17 significant digits so files round-trip
exactly and reruns are byte-identical. The SVG heatmap is rendered from
the grid CSV alone.
"""

from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .model import Topology
from .msf import MsfGrid, StabilityReport
from .oracle import Certification
from .simulate import SimState, SyncErrorSeries
from .spectra import ModeSpectrum


def fmt(x) -> str:
    return format(float(x), ".17g")


def _writer(path):
    f = open(path, "w", newline="")
    return f, csv.writer(f, lineterminator="\n")


def _rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    f, w = _writer(path)
    with f:
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


# --- matrices ----------------------------------------------------------------


def write_matrix_csv(path, matrix) -> None:
    """Full matrix, row-major, no header."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ParameterError(f"need a 2-d matrix, got shape {m.shape}")
    f, w = _writer(path)
    with f:
        for row in m:
            w.writerow([fmt(v) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].lstrip().startswith("#")]
    try:
        m = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParameterError(f"{path}: non-numeric entry ({exc})") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"{path}: expected a square matrix, got shape {m.shape}")
    return m


def read_topology_csv(path) -> Topology:
    return Topology.from_matrix(read_matrix_csv(path))


# --- analysis tables -----------------------------------------------------------


def write_spectrum_csv(path, spectra: Sequence[ModeSpectrum]) -> None:
    rows = []
    for s in spectra:
        for k, mu, nu in zip(s.k, s.mu, s.nu):
            rows.append((int(k), mu.real, mu.imag, nu.real, nu.imag, s.provenance))
    _rows(path, ("k", "mu_re", "mu_im", "nu_re", "nu_im", "provenance"), rows)


def write_grid_csv(path, grid: MsfGrid) -> None:
    rows = [(grid.mu[j], grid.nu[i], grid.lam[i, j]) for i in range(grid.nu.size) for j in range(grid.mu.size)]
    _rows(path, ("mu", "nu", "lambda"), rows)


def write_report_csv(path, report: StabilityReport) -> None:
    rows = zip(
        (int(k) for k in report.k), report.mu.real, report.nu.real, report.lam, report.c1, report.c2
    )
    _rows(path, ("k", "mu", "nu", "lambda", "c1", "c2"), rows)


def write_c2_curves_csv(path, rows) -> None:
    _rows(path, ("p", "k", "mu", "nu", "c2"), rows)


def write_cmin_csv(path, sigmas, xis, cmin) -> None:
    """``cmin[i, j]`` belongs to ``(sigmas[j], xis[i])``."""
    rows = [(float(s), float(x), cmin[i, j]) for i, x in enumerate(xis) for j, s in enumerate(sigmas)]
    _rows(path, ("sigma", "xi", "c_min"), rows)


def write_boundary_csv(path, points) -> None:
    _rows(path, ("sigma", "xi"), [(float(s), float(x)) for s, x in points])


def write_run_csv(path, series: SyncErrorSeries, seed: int | None, comments: Sequence[str] = ()) -> None:
    f, w = _writer(path)
    with f:
        f.write(f"# seed={seed}\n")
        for c in comments:
            f.write(f"# {c}\n")
        w.writerow(("t", "E"))
        for t, e in zip(series.t, series.E):
            w.writerow((fmt(t), fmt(e)))


def write_snapshot(path, state: SimState) -> None:
    """Header ``N,t``, then the phases, then the weights row-major, one value per line."""
    with open(path, "w") as f:
        f.write(f"{state.n},{fmt(state.t)}\n")
        for v in np.asarray(state.phases).ravel():
            f.write(fmt(v) + "\n")
        for v in np.asarray(state.weights).ravel():
            f.write(fmt(v) + "\n")


def read_snapshot(path) -> SimState:
    with open(path) as f:
        head = f.readline().strip().split(",")
        n, t = int(head[0]), float(head[1])
        vals = np.array([float(line) for line in f if line.strip()])
    if vals.size != n + n * n:
        raise ParameterError(f"{path}: expected {n + n * n} values, found {vals.size}")
    return SimState(vals[:n], vals[n:].reshape(n, n), t)


def write_oracle_csv(path, cert: Certification) -> None:
    """Paired eigenvalues; the ``clause`` column names the claim each row backs."""
    blank = ("", "")

    def c(z):
        return (fmt(z.real), fmt(z.imag))

    rows = []
    red_to_full = {}
    if cert.full is not None and cert.full_to_reduced is not None:
        red_to_full = {int(r): i for i, r in enumerate(cert.full_to_reduced) if r >= 0}
        for i in cert.trivial_idx:
            rows.append((*c(cert.full[i]), *blank, *blank, "i"))
    for r, z in enumerate(cert.reduced):
        full = c(cert.full[red_to_full[r]]) if r in red_to_full else blank
        q = cert.quadratic[cert.reduced_to_quadratic[r]]
        rows.append((*full, *c(z), *c(q), "ii+iii" if r in red_to_full else "iii"))
    f, w = _writer(path)
    with f:
        w.writerow(("full_re", "full_im", "reduced_re", "reduced_im", "quad_re", "quad_im", "clause"))
        w.writerows(rows)


# --- SVG -----------------------------------------------------------------------

_COLD = np.array([49, 54, 149], dtype=float)
_MID = np.array([247, 247, 247], dtype=float)
_HOT = np.array([165, 0, 38], dtype=float)


def _color(v: float, lo: float, hi: float) -> str:
    """Diverging linear map centred on zero (or on the midrange if z has one sign)."""
    if lo < 0.0 < hi:
        t = -v / lo if v < 0 else v / hi
    else:
        span = hi - lo or 1.0
        t = 2.0 * (v - lo) / span - 1.0
    t = min(1.0, max(-1.0, t))
    rgb = _MID + (t if t > 0 else -t) * ((_HOT if t > 0 else _COLD) - _MID)
    r, g, b = (int(round(c)) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple[str, str, str]]:
    """Inverse of the three-column grid writers: returns ``x, y, z[i, j] = f(x[j], y[i])``."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    header = tuple(rows[0][:3])
    data = np.array([[float(v) for v in r[:3]] for r in rows[1:]])
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    z = np.full((y.size, x.size), np.nan)
    z[np.searchsorted(y, data[:, 1]), np.searchsorted(x, data[:, 0])] = data[:, 2]
    return x, y, z, header


def contour_segments(x, y, z) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Zero level set of ``z[i, j] = f(x[j], y[i])`` as line segments (marching squares)."""
    segs = []
    for i in range(y.size - 1):
        for j in range(x.size - 1):
            corners = [(x[j], y[i], z[i, j]), (x[j + 1], y[i], z[i, j + 1]),
                       (x[j + 1], y[i + 1], z[i + 1, j + 1]), (x[j], y[i + 1], z[i + 1, j])]
            if any(np.isnan(c[2]) for c in corners):
                continue
            pts = []
            for (x0, y0, z0), (x1, y1, z1) in zip(corners, corners[1:] + corners[:1]):
                if (z0 < 0) != (z1 < 0):
                    t = z0 / (z0 - z1)
                    pts.append((float(x0 + t * (x1 - x0)), float(y0 + t * (y1 - y0))))
            # saddle cells give four crossings; pair them in edge order
            for k in range(0, len(pts) - 1, 2):
                segs.append((pts[k], pts[k + 1]))
    return segs


def svg_heatmap_from_csv(csv_path, svg_path, width: int = 480, height: int = 400) -> None:
    """Heatmap of a (x, y, value) CSV with its zero contour overlaid as dots."""
    x, y, z, header = read_grid_csv(csv_path)
    pad = 50
    pw, ph = width - 2 * pad, height - 2 * pad
    lo, hi = float(np.nanmin(z)), float(np.nanmax(z))
    cw, ch = pw / x.size, ph / y.size

    def px(v):
        return pad + (0.5 if x.size == 1 else (v - x[0]) / (x[-1] - x[0])) * (pw - cw) + cw / 2

    def py(v):
        return height - pad - (0.5 if y.size == 1 else (v - y[0]) / (y[-1] - y[0])) * (ph - ch) - ch / 2

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<g shape-rendering="crispEdges">',
    ]
    for i in range(y.size):
        for j in range(x.size):
            if np.isnan(z[i, j]):
                continue
            out.append(
                f'<rect x="{pad + j * cw:.3f}" y="{height - pad - (i + 1) * ch:.3f}" '
                f'width="{cw:.3f}" height="{ch:.3f}" fill="{_color(z[i, j], lo, hi)}"/>'
            )
    out.append("</g>")
    segs = contour_segments(x, y, z)
    if segs:
        d = " ".join(f"M{px(a):.3f},{py(b):.3f}L{px(c):.3f},{py(e):.3f}" for (a, b), (c, e) in segs)
        out.append(f'<path d="{d}" fill="none" stroke="black" stroke-width="1.5"/>')
    out += [
        f'<rect x="{pad}" y="{pad}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="14">{header[0]}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{header[1]}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="11">{x[0]:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" font-size="11" text-anchor="end">{x[-1]:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="11" text-anchor="end">{y[0]:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 10}" font-size="11" text-anchor="end">{y[-1]:.4g}</text>',
        f'<text x="{width / 2:.1f}" y="30" text-anchor="middle" font-size="13">'
        f"{header[2]} in [{lo:.3g}, {hi:.3g}]</text>",
        "</svg>",
    ]
    with open(svg_path, "w") as f:
        f.write("\n".join(out) + "\n")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
