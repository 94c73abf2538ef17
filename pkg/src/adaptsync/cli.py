"""Command-line front end.

    adaptsync [--config FILE] [--out DIR] [--svg] <subcommand> [options]

Subcommands: msf-grid, ring, gauss, simulate, oracle. Angles accept a
``pi`` suffix (``-0.4pi``), grids use ``start:end:count`` with both ends
included. A config file (INI syntax) may hold defaults in ``[DEFAULT]``
or in a section named after the subcommand; flags on the command line
win.

Exit codes: 0 success, 2 invalid parameters or size, 3 numeric failure,
4 certification failure.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import re
import sys

import numpy as np

from . import io
from .errors import (
    AdaptSyncError,
    CertificationError,
    ExistenceError,
    NumericError,
    ParameterError,
    SizeError,
    StructureError,
)
from .model import (
    ModelParams,
    Topology,
    build_ring_adjacency,
    build_laplacians,
    check_alpha,
    ring_range,
    sinusoidal_rule,
    sync_state,
)
from .msf import c_min_map, msf_grid, network_stability, ring_c2_curves, stability_boundary
from .oracle import N_CAP, certify_propositions
from .simulate import (
    CONVERGED,
    classify_run,
    integrate,
    measured_frequency,
    perturbed_sync_init,
)
from .spectra import closed_form_ring_spectrum, continuum_spectrum, exact_spectrum, ring_profile

log = logging.getLogger("adaptsync")

EXIT_OK = 0
EXIT_PARAM = 2
EXIT_NUMERIC = 3
EXIT_CERT = 4


# --- value parsers -------------------------------------------------------------

_ANGLE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*$")


def parse_angle(text: str) -> float:
    """'0.4pi', '-pi', '0.4*pi' or a plain number in radians."""
    s = str(text).strip().lower()
    m = _ANGLE.match(s)
    if m:
        coef = m.group(1)
        if coef in (None, "+", "-"):
            coef = "-1" if s.startswith("-") else "1"
        return float(coef) * math.pi
    if s.startswith("-") and s[1:].strip() == "pi":
        return -math.pi
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def parse_range(text: str) -> np.ndarray:
    """'start:end:count' (inclusive) or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:end:count, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"count must be >= 1 in {text!r}")
    if n == 1:
        return np.array([a])
    return np.linspace(a, b, n)


def parse_angle_list(text: str) -> list[float]:
    return [parse_angle(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    return v


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


# --- argument parser ---------------------------------------------------------------


def _common(p: argparse.ArgumentParser, defaults: dict) -> None:
    p.add_argument("--config", default=defaults["config"], help="INI file with default values (flags override)")
    p.add_argument("--out", default=defaults["out"], help="output directory (default: current)")
    p.add_argument("--svg", action="store_true", default=defaults["svg"], help="also render SVG heatmaps")
    p.add_argument("-v", "--verbose", action="store_true", default=defaults["verbose"])


_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d|pi\b)")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--alpha -0.4pi`` into ``--alpha=-0.4pi`` so argparse does not read a flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptsync", description="Stability of synchrony in adaptive oscillator networks.")
    _common(p, dict(config=None, out=".", svg=False, verbose=False))
    # the same options after the subcommand; suppressed defaults keep the top-level values
    shared = argparse.ArgumentParser(add_help=False)
    _common(shared, dict(config=argparse.SUPPRESS, out=argparse.SUPPRESS, svg=argparse.SUPPRESS,
                         verbose=argparse.SUPPRESS))
    sub = p.add_subparsers(dest="command", required=True)
    add = sub.add_parser

    def sub_add_parser(name, **kw):
        return add(name, parents=[shared], **kw)

    sub.add_parser = sub_add_parser

    g = sub.add_parser("msf-grid", help="master stability function on a real (mu, nu) grid")
    g.add_argument("--alpha", type=parse_angle, default="-0.8pi")
    g.add_argument("--eps", type=float, default=0.01)
    g.add_argument("--mu", type=parse_range, default="-1:3:200")
    g.add_argument("--nu", type=parse_range, default="-3:3:200")

    r = sub.add_parser("ring", help="spectra and stability verdict for the nonlocal ring")
    r.add_argument("--N", type=_int, default=200)
    r.add_argument("--alpha", type=parse_angle, default="0.4pi")
    r.add_argument("--p", type=float, default=0.45)
    r.add_argument("--eps", type=float, default=0.01)
    r.add_argument("--p-grid", type=parse_range, default="0.005:0.5:100")
    r.add_argument("--kmax", type=_int, default=10)

    ga = sub.add_parser("gauss", help="c_min map and stability boundaries for Gaussian weights")
    ga.add_argument("--N", type=_int, default=400)
    ga.add_argument("--alpha", type=parse_angle, default="-0.4pi")
    ga.add_argument("--sigma", type=parse_range, default="0.01:0.3:60")
    ga.add_argument("--xi", type=parse_range, default="0:0.5:100")
    ga.add_argument("--boundary", type=_bool, nargs="?", const=True, default=False,
                    help="also trace the c_min = 0 boundary for each angle in --alphas")
    ga.add_argument("--alphas", type=parse_angle_list, default=None,
                    help="comma-separated angles for --boundary (default: --alpha)")
    ga.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance in xi")

    s = sub.add_parser("simulate", help="direct RK4 simulation from a perturbed synchronous state")
    s.add_argument("--N", type=_int, default=None, help="ring size (default 100)")
    s.add_argument("--alpha", type=parse_angle, default="-0.4pi")
    s.add_argument("--p", type=float, default=0.45)
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--topology", help="adjacency CSV instead of the ring")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--amplitude", type=float, default=1e-2)
    s.add_argument("--T", type=float, default=5000.0)
    s.add_argument("--dt", type=float, default=0.01)
    s.add_argument("--sample-every", type=_int, default=100)
    s.add_argument("--snapshot", type=_bool, nargs="?", const=True, default=False,
                   help="write the final state to snapshot.txt")

    o = sub.add_parser("oracle", help="brute-force certification of the reduced and quadratic spectra")
    o.add_argument("--N", type=_int, default=None)
    o.add_argument("--p", type=float, default=0.2)
    o.add_argument("--alpha", type=parse_angle, default="0.3pi")
    o.add_argument("--eps", type=float, default=0.01)
    o.add_argument("--topology", help="adjacency CSV instead of the ring")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse twice: once to find the config and subcommand, once with config defaults."""
    first = parser.parse_args(argv)
    if not first.config:
        return first
    cp = configparser.ConfigParser(interpolation=None)
    try:
        if not cp.read(first.config):
            raise ParameterError(f"config file not found: {first.config}")
    except configparser.Error as exc:
        raise ParameterError(f"bad config file: {exc}") from None
    shared = dict(cp.defaults())
    own = {k: v for k, v in cp.items(first.command)} if cp.has_section(first.command) else {}
    sub = parser._subparsers._group_actions[0].choices[first.command]
    known_sub = {a.dest for a in sub._actions} - {"help"}
    known_top = {a.dest for a in parser._actions} - {"config", "command", "help"}
    top, local = {}, {}
    for key, val in {**shared, **own}.items():
        dest = key.replace("-", "_")
        if dest == "n":
            dest = "N"
        if dest in known_sub:
            local[dest] = val
        elif dest in known_top:
            top[dest] = _bool(val) if dest in ("svg", "verbose") else val
        elif key in own and key not in shared:
            # [DEFAULT] may carry keys for other subcommands; a section may not
            raise ParameterError(f"unknown config key {key!r} for {first.command}")
    # string defaults run through each action's type converter on reparse
    sub.set_defaults(**local)
    parser.set_defaults(**top)
    return parser.parse_args(argv)


# --- commands --------------------------------------------------------------------


def _path(args, name: str) -> str:
    return os.path.join(args.out, name)


def _ring(n: int, p: float) -> Topology:
    return build_ring_adjacency(n, ring_range(n, p))


def cmd_msf_grid(args) -> int:
    check_alpha(args.alpha)
    if not args.eps > 0.0:
        raise ParameterError(f"epsilon must be > 0, got {args.eps}")
    grid = msf_grid(args.alpha, args.eps, args.mu, args.nu)
    out = _path(args, "msf_grid.csv")
    io.write_grid_csv(out, grid)
    print(f"wrote {out} ({grid.nu.size} x {grid.mu.size}); {len(grid.contour)} zero-contour points")
    if args.svg:
        io.svg_heatmap_from_csv(out, _path(args, "msf_grid.svg"))
    return EXIT_OK


def cmd_ring(args) -> int:
    params = ModelParams(args.N, args.alpha, args.eps)
    top = _ring(args.N, args.p)
    for q in args.p_grid:
        if not 0.0 < q <= 0.5:
            raise ParameterError(f"p-grid values must lie in (0, 1/2], got {q}")
    rule = sinusoidal_rule(args.N)
    exact = exact_spectrum(build_laplacians(top, rule))
    closed = closed_form_ring_spectrum(args.N, args.p)
    cont = continuum_spectrum(args.N, ring_profile(args.p), breakpoints=(args.p,))
    io.write_spectrum_csv(_path(args, "ring_spectrum.csv"), [exact, closed, cont])
    report = network_stability(params.alpha, params.epsilon, exact)
    io.write_report_csv(_path(args, "ring_report.csv"), report)
    io.write_c2_curves_csv(_path(args, "ring_c2.csv"), ring_c2_curves(params.alpha, args.p_grid, args.kmax))
    print(f"N = {args.N}, P = {ring_range(args.N, args.p)}, alpha = {args.alpha:.6g}, eps = {args.eps:g}")
    print(f"verdict: {report.verdict}")
    print(f"margin: {report.margin:.6e}")
    print(f"critical mode: k = {report.critical_mode}")
    print(f"max Lambda: {report.max_lambda:.6e}")
    return EXIT_OK


def cmd_gauss(args) -> int:
    if args.N < 2:
        raise ParameterError(f"N must be >= 2, got {args.N}")
    check_alpha(args.alpha)
    if np.any(args.sigma <= 0):
        raise ParameterError("sigma values must be > 0")
    if np.any(args.xi < 0) or np.any(args.xi > 0.5):
        raise ParameterError("xi values must lie in [0, 1/2]")
    alphas = args.alphas if args.alphas else [args.alpha]
    for a in alphas:
        check_alpha(a)
    cmap = c_min_map(args.alpha, args.N, args.sigma, args.xi)
    out = _path(args, "gauss_cmin.csv")
    io.write_cmin_csv(out, args.sigma, args.xi, cmap)
    print(f"wrote {out} ({args.xi.size} x {args.sigma.size}); c_min in [{cmap.min():.4e}, {cmap.max():.4e}]")
    if args.svg:
        io.svg_heatmap_from_csv(out, _path(args, "gauss_cmin.svg"))
    if args.boundary:
        for a in alphas:
            pts = stability_boundary(a, args.sigma, args.xi, args.N, tol=args.tol)
            name = f"gauss_boundary_alpha{a / math.pi:+.4f}pi.csv"
            io.write_boundary_csv(_path(args, name), pts)
            print(f"wrote {_path(args, name)} ({len(pts)} points)")
    return EXIT_OK


def _topology_arg(args, n: int | None) -> Topology:
    top = io.read_topology_csv(args.topology)
    if n is not None and top.n != n:
        raise ParameterError(f"--N {n} disagrees with the {top.n}-node topology in {args.topology}")
    return top


def cmd_simulate(args) -> int:
    if args.topology:
        top = _topology_arg(args, args.N)
        n = top.n
    else:
        n = args.N if args.N is not None else 100
        top = _ring(n, args.p)
    params = ModelParams(n, args.alpha, args.eps)
    rule = sinusoidal_rule(n)
    sync = sync_state(params, top, rule)
    state0 = perturbed_sync_init(params, top, rule, args.amplitude, args.seed)
    out = _path(args, "run.csv")
    header = [f"N={n}", f"alpha={args.alpha:.17g}", f"eps={args.eps:.17g}", f"amplitude={args.amplitude:.17g}",
              f"dt={args.dt:.17g}", f"T={args.T:.17g}"]
    try:
        series, final = integrate(state0, params, top, rule, args.T, args.dt, args.sample_every)
    except NumericError as exc:
        if exc.partial is not None:
            io.write_run_csv(out, exc.partial, args.seed, header + ["status=numeric failure"])
        raise
    io.write_run_csv(out, series, args.seed, header)
    if args.snapshot:
        io.write_snapshot(_path(args, "snapshot.txt"), final)
    verdict = classify_run(series)
    print(f"classification: {verdict}")
    print(f"E(0) = {series.E[0]:.4e}, E(end) = {series.E[-1]:.4e}, t_end = {series.t[-1]:g}")
    print(f"predicted frequency: {sync.frequency:.10g}")
    if verdict == CONVERGED and len(series) >= 5:
        print(f"measured frequency: {measured_frequency(series):.10g}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.topology:
        top = _topology_arg(args, args.N)
        n = top.n
    else:
        n = args.N if args.N is not None else 10
        if n > N_CAP:
            raise SizeError(f"N = {n} exceeds the certification cap {N_CAP}")
        top = _ring(n, args.p)
    params = ModelParams(n, args.alpha, args.eps)
    cert = certify_propositions(params, top, sinusoidal_rule(n), raise_on_failure=False)
    summary = cert.summary()
    with open(_path(args, "oracle_report.txt"), "w") as f:
        f.write(summary + "\n")
    io.write_oracle_csv(_path(args, "oracle_pairs.csv"), cert)
    print(summary)
    if not cert.passed:
        clause = cert.first_failure()
        raise CertificationError(clause, "see oracle_report.txt")
    return EXIT_OK


COMMANDS = {
    "msf-grid": cmd_msf_grid,
    "ring": cmd_ring,
    "gauss": cmd_gauss,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        io.ensure_dir(args.out)
        return COMMANDS[args.command](args)
    except (ParameterError, StructureError, ExistenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except AdaptSyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
