import csv
import hashlib
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from adaptsync import io
from adaptsync.cli import main, parse_angle, parse_range
from adaptsync.model import build_ring_adjacency
from adaptsync.msf import msf_grid
from adaptsync.simulate import SimState, SyncErrorSeries


def _csv(path):
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def _sha(path):
    return hashlib.sha1(open(path, "rb").read()).hexdigest()


def _chord_csv(path):
    a = np.array(build_ring_adjacency(6, 1).weights)
    a[0, 3] = a[3, 0] = 1.0
    io.write_matrix_csv(path, a)
    return path


# --- value parsers ------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,value",
    [("0.4pi", 0.4 * math.pi), ("-0.8pi", -0.8 * math.pi), ("pi", math.pi), ("-pi", -math.pi),
     ("0.25*pi", 0.25 * math.pi), (" 1.5 ", 1.5), ("-2e-1pi", -0.2 * math.pi)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


def test_parse_range():
    np.testing.assert_allclose(parse_range("-1:3:5"), [-1, 0, 1, 2, 3])
    np.testing.assert_allclose(parse_range("0.5"), [0.5])
    np.testing.assert_allclose(parse_range("2:7:1"), [2.0])
    for bad in ("1:2", "a:b:3", "0:1:0"):
        with pytest.raises(Exception):
            parse_range(bad)


# --- round trips ------------------------------------------------------------------------


def test_matrix_roundtrip(tmp_path):
    m = np.random.default_rng(0).uniform(-1, 1, (5, 5)) / 3
    io.write_matrix_csv(tmp_path / "m.csv", m)
    assert np.array_equal(io.read_matrix_csv(tmp_path / "m.csv"), m)


def test_matrix_read_errors(tmp_path):
    (tmp_path / "r.csv").write_text("1,2,3\n4,5,6\n")
    with pytest.raises(Exception):
        io.read_matrix_csv(tmp_path / "r.csv")
    (tmp_path / "t.csv").write_text("1,x\n0,1\n")
    with pytest.raises(Exception):
        io.read_matrix_csv(tmp_path / "t.csv")


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    s = SimState(rng.uniform(-3, 3, 4), rng.uniform(-1, 1, (4, 4)), 12.375)
    io.write_snapshot(tmp_path / "s.txt", s)
    lines = (tmp_path / "s.txt").read_text().splitlines()
    assert lines[0] == "4,12.375" and len(lines) == 1 + 4 + 16
    back = io.read_snapshot(tmp_path / "s.txt")
    assert back.t == s.t
    assert np.array_equal(back.phases, s.phases) and np.array_equal(back.weights, s.weights)


def test_run_csv_records_seed(tmp_path):
    series = SyncErrorSeries(np.array([0.0, 1.0]), np.array([0.1, 0.05]), np.zeros(2), False)
    io.write_run_csv(tmp_path / "r.csv", series, 42, ["N=3"])
    text = (tmp_path / "r.csv").read_text().splitlines()
    assert text[:3] == ["# seed=42", "# N=3", "t,E"]
    header, rows = _csv(tmp_path / "r.csv")
    assert [float(v) for v in rows[1]] == [1.0, 0.05]


def test_grid_csv_and_svg(tmp_path):
    grid = msf_grid(-0.8 * math.pi, 0.01, np.linspace(-1, 3, 21), np.linspace(-3, 3, 31))
    io.write_grid_csv(tmp_path / "g.csv", grid)
    x, y, z, header = io.read_grid_csv(tmp_path / "g.csv")
    assert header == ("mu", "nu", "lambda")
    np.testing.assert_array_equal(z, grid.lam)
    io.svg_heatmap_from_csv(tmp_path / "g.csv", tmp_path / "g.svg")
    root = ET.parse(tmp_path / "g.svg").getroot()
    assert root.tag.endswith("svg") and root.get("version") == "1.1"
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f".//{ns}rect")) >= 21 * 31
    assert root.find(f"{ns}path") is not None  # zero contour


def test_contour_segments_circle():
    x = y = np.linspace(-1, 1, 41)
    z = x[None, :] ** 2 + y[:, None] ** 2 - 0.25
    segs = io.contour_segments(x, y, z)
    pts = np.array([p for s in segs for p in s])
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.5, atol=2e-3)


def test_svg_single_cell(tmp_path):
    (tmp_path / "one.csv").write_text("mu,nu,lambda\n1,2,-0.5\n")
    io.svg_heatmap_from_csv(tmp_path / "one.csv", tmp_path / "one.svg")
    ET.parse(tmp_path / "one.svg")


# --- msf-grid ----------------------------------------------------------------------------


def test_cli_msf_grid_example(tmp_path):
    argv = ["msf-grid", "--alpha", "-0.8pi", "--eps", "0.01", "--mu", "-1:3:200", "--nu", "-3:3:200",
            "--svg", "--out", str(tmp_path)]
    assert main(argv) == 0
    header, rows = _csv(tmp_path / "msf_grid.csv")
    assert header == ["mu", "nu", "lambda"] and len(rows) == 200 * 200
    ET.parse(tmp_path / "msf_grid.svg")
    # spot check against the library
    grid = msf_grid(-0.8 * math.pi, 0.01, parse_range("-1:3:200"), parse_range("-3:3:200"))
    assert float(rows[1234][2]) == grid.lam.ravel()[1234]


def test_cli_rerun_bit_identical(tmp_path):
    hashes = []
    for d in ("a", "b"):
        out = tmp_path / d
        out.mkdir()
        assert main(["msf-grid", "--mu", "-1:3:40", "--nu", "-3:3:30", "--svg", "--out", str(out)]) == 0
        assert main(["ring", "--N", "60", "--out", str(out)]) == 0
        hashes.append([_sha(out / f) for f in ("msf_grid.csv", "msf_grid.svg", "ring_spectrum.csv", "ring_report.csv")])
    assert hashes[0] == hashes[1]


def test_cli_degenerate_grid(tmp_path):
    assert main(["msf-grid", "--mu", "0.5", "--nu", "0.5:0.5:1", "--svg", "--out", str(tmp_path)]) == 0
    header, rows = _csv(tmp_path / "msf_grid.csv")
    assert len(rows) == 1


def test_cli_invalid_params_exit_2(tmp_path, capsys):
    assert main(["msf-grid", "--eps", "0", "--out", str(tmp_path)]) == 2
    assert main(["msf-grid", "--alpha", "1.5pi", "--out", str(tmp_path)]) == 2
    assert main(["msf-grid", "--mu", "1:2", "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2
    err = capsys.readouterr().err
    assert "error" in err.lower()


# --- ring -------------------------------------------------------------------------------


def _ring_out(capsys, tmp_path, *args):
    assert main(["ring", *args, "--out", str(tmp_path)]) == 0
    return dict(line.split(": ", 1) for line in capsys.readouterr().out.splitlines() if ": " in line)


def test_cli_ring_positive_alpha_long_range(tmp_path, capsys):
    out = _ring_out(capsys, tmp_path, "--N", "200", "--alpha", "0.4pi", "--p", "0.45", "--eps", "0.01")
    assert out["verdict"] == "unstable" and out["critical mode"] == "k = 1"
    header, rows = _csv(tmp_path / "ring_spectrum.csv")
    assert header == ["k", "mu_re", "mu_im", "nu_re", "nu_im", "provenance"]
    assert {r[5] for r in rows} == {"exact-dft", "closed-form-ring", "continuum"}
    header, rows = _csv(tmp_path / "ring_report.csv")
    assert header == ["k", "mu", "nu", "lambda", "c1", "c2"] and len(rows) == 200
    header, rows = _csv(tmp_path / "ring_c2.csv")
    assert header == ["p", "k", "mu", "nu", "c2"] and len(rows) == 100 * 10


def test_cli_ring_negative_alpha_short_range(tmp_path, capsys):
    out = _ring_out(capsys, tmp_path, "--N", "200", "--alpha", "-0.2pi", "--p", "0.1")
    assert out["verdict"] == "unstable"


def test_cli_ring_alpha_zero_half_range(tmp_path, capsys):
    out = _ring_out(capsys, tmp_path, "--N", "200", "--alpha", "0", "--p", "0.5")
    assert out["verdict"] == "stable"
    _, rows = _csv(tmp_path / "ring_report.csv")
    mu = np.array([float(r[1]) for r in rows[1:]])
    # at alpha = 0, c2 = mu, so the margin is the smallest nontrivial mu
    assert float(out["margin"]) == pytest.approx(mu.min(), rel=1e-6)
    assert mu.min() > 0


def test_cli_ring_bad_p(tmp_path):
    assert main(["ring", "--N", "20", "--p", "0.7", "--out", str(tmp_path)]) == 2


# --- gauss ---------------------------------------------------------------------------------


def test_cli_gauss_example(tmp_path):
    argv = ["gauss", "--N", "400", "--alpha", "-0.4pi", "--sigma", "0.01:0.3:60", "--xi", "0:0.5:100",
            "--svg", "--out", str(tmp_path)]
    assert main(argv) == 0
    header, rows = _csv(tmp_path / "gauss_cmin.csv")
    assert header == ["sigma", "xi", "c_min"] and len(rows) == 6000
    c = {(round(float(s), 6), round(float(x), 6)): float(v) for s, x, v in rows}
    assert c[(0.01, 0.0)] < 0
    ET.parse(tmp_path / "gauss_cmin.svg")


def test_cli_gauss_boundaries(tmp_path):
    argv = ["gauss", "--N", "200", "--sigma", "0.02:0.3:8", "--xi", "0:0.5:26", "--boundary",
            "--alphas", "-0.4pi,-0.2pi", "--out", str(tmp_path)]
    assert main(argv) == 0
    for a in ("-0.4000", "-0.2000"):
        header, rows = _csv(tmp_path / f"gauss_boundary_alpha{a}pi.csv")
        assert header == ["sigma", "xi"] and rows


def test_cli_gauss_single_sigma(tmp_path):
    assert main(["gauss", "--N", "100", "--sigma", "0.1", "--xi", "0:0.5:11", "--svg", "--out", str(tmp_path)]) == 0
    _, rows = _csv(tmp_path / "gauss_cmin.csv")
    assert len(rows) == 11 and len({r[0] for r in rows}) == 1


def test_cli_gauss_bad_grid(tmp_path):
    assert main(["gauss", "--N", "50", "--sigma", "0:0.2:3", "--out", str(tmp_path)]) == 2
    assert main(["gauss", "--N", "50", "--xi", "0:0.7:3", "--out", str(tmp_path)]) == 2


# --- simulate ---------------------------------------------------------------------------------


def _sim(tmp_path, capsys, *args):
    code = main(["simulate", *args, "--out", str(tmp_path)])
    return code, capsys.readouterr()


def test_cli_simulate_converged_example(tmp_path, capsys):
    code, out = _sim(tmp_path, capsys, "--N", "100", "--alpha", "-0.4pi", "--p", "0.45", "--seed", "7")
    assert code == 0 and "classification: converged" in out.out
    assert (tmp_path / "run.csv").read_text().startswith("# seed=7\n")


def test_cli_simulate_diverged_example(tmp_path, capsys):
    code, out = _sim(tmp_path, capsys, "--N", "100", "--alpha", "0.4pi", "--p", "0.45", "--seed", "7")
    assert code == 0 and "classification: diverged" in out.out


def test_cli_simulate_amplitude_zero(tmp_path, capsys):
    code, out = _sim(tmp_path, capsys, "--N", "20", "--p", "0.3", "--amplitude", "0", "--T", "200",
                     "--dt", "0.05", "--snapshot")
    assert code == 0 and "classification: converged" in out.out
    _, rows = _csv(tmp_path / "run.csv")
    assert max(float(r[1]) for r in rows) <= 1e-9
    snap = io.read_snapshot(tmp_path / "snapshot.txt")
    assert snap.n == 20 and snap.t == pytest.approx(200.0)


def test_cli_simulate_numeric_failure_keeps_partial(tmp_path, capsys):
    code, out = _sim(tmp_path, capsys, "--N", "8", "--p", "0.25", "--eps", "1000", "--dt", "1", "--T", "100",
                     "--sample-every", "1")
    assert code == 3
    assert "numeric" in out.err
    text = (tmp_path / "run.csv").read_text()
    assert "# status=numeric failure" in text
    _, rows = _csv(tmp_path / "run.csv")
    assert len(rows) >= 1


def test_cli_simulate_custom_topology(tmp_path, capsys):
    path = _chord_csv(tmp_path / "custom.csv")
    code, out = _sim(tmp_path, capsys, "--topology", str(path), "--alpha", "0.2pi", "--T", "100", "--dt", "0.05")
    assert code == 0
    code, _ = _sim(tmp_path, capsys, "--topology", str(path), "--N", "7")
    assert code == 2


def test_cli_simulate_existence_violation(tmp_path, capsys):
    a = np.array([[0, 1, 1], [1, 0, 0.5], [1, 0.5, 0]])
    io.write_matrix_csv(tmp_path / "bad.csv", a)
    code, out = _sim(tmp_path, capsys, "--topology", str(tmp_path / "bad.csv"))
    assert code == 2


# --- oracle ------------------------------------------------------------------------------------


def test_cli_oracle_example(tmp_path, capsys):
    assert main(["oracle", "--N", "10", "--p", "0.2", "--alpha", "0.3pi", "--eps", "0.01", "--out", str(tmp_path)]) == 0
    assert "result: PASS" in (tmp_path / "oracle_report.txt").read_text()
    header, rows = _csv(tmp_path / "oracle_pairs.csv")
    assert header[-1] == "clause" and len(rows) == 110
    assert sum(r[-1] == "i" for r in rows) == 90


def test_cli_oracle_size_cap(tmp_path, capsys):
    assert main(["oracle", "--N", "30", "--out", str(tmp_path)]) == 2
    assert "cap" in capsys.readouterr().err


def test_cli_oracle_noncommuting_custom(tmp_path, capsys):
    # faithful: expected to pass at the O(eps^2) clause; the measured gap is O(eps)
    path = _chord_csv(tmp_path / "custom.csv")
    code = main(["oracle", "--N", "6", "--topology", str(path), "--out", str(tmp_path)])
    assert code == 0, capsys.readouterr().err


def test_cli_oracle_failure_exit_4(tmp_path, capsys):
    path = _chord_csv(tmp_path / "custom.csv")
    code = main(["oracle", "--topology", str(path), "--eps", "0.05", "--out", str(tmp_path)])
    assert code == 4
    assert "clause (iii)" in capsys.readouterr().err
    assert "result: FAIL" in (tmp_path / "oracle_report.txt").read_text()


# --- config ----------------------------------------------------------------------------------------


def test_cli_config_defaults_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[DEFAULT]\neps = 0.02\nseed = 3\n\n[ring]\nN = 80\nalpha = -0.2pi\np = 0.1\n"
    )
    assert main(["ring", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("N = 80, P = 8, alpha = -0.628319, eps = 0.02")
    assert "verdict: unstable" in out
    # flags beat the file
    assert main(["ring", "--config", str(cfg), "--N", "40", "--alpha", "0", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("N = 40, P = 4, alpha = 0, eps = 0.02")


def test_cli_config_errors(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[ring]\nfrobnicate = 1\n")
    assert main(["ring", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["ring", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "adaptsync", "oracle", "--N", "30", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "cap" in r.stderr
    r = subprocess.run([sys.executable, "-m", "adaptsync", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "msf-grid" in r.stdout
