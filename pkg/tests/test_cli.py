import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ritzbounds.cli import ExperimentConfig, load_spectrum, main, parse_config, slowest_run
from ritzbounds.errors import ContractError, ParseError
from ritzbounds.eigsolve import IterTrace
from ritzbounds.problems import mm_read, mm_write, read_spectrum_csv
from ritzbounds.matrixkit import DenseSym
from ritzbounds.report import FLOOR, Panel, Series, render_svg

SMALL = """\
# small diagonal cluster run
problem.kind = diag-cluster
problem.n = 400
precond.kind = exact-inverse
s = 6
runs = 3
max_steps = 40
bounds = lm2e1,thm2e1,neighbor
"""


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


# --- configuration ------------------------------------------------------------------


def test_parse_defaults_and_echo_roundtrip():
    cfg = parse_config(SMALL)
    assert cfg.problem_n == 400 and cfg.runs == 3
    assert cfg.bounds == ("lm2e1", "thm2e1", "neighbor")
    assert cfg.track_i == () and cfg.tol == 1e-10
    assert parse_config("\n".join(cfg.echo())) == cfg
    assert parse_config("") == ExperimentConfig()


def test_parse_h_fraction():
    cfg = parse_config("problem.kind = lap-slit\nproblem.h = 1/70\n")
    assert cfg.problem_h == pytest.approx(1 / 70)


@pytest.mark.parametrize("text,line,msg", [
    ("s = 6\nfoo = 1\n", 2, "unknown key"),
    ("s = 6\n\ns = 4\n", 3, "duplicate"),
    ("runs = many\n", 1, "bad value"),
    ("# c\nbounds = thm2e1,thm9\n", 2, "unknown bound kind"),
    ("s 6\n", 1, "key = value"),
])
def test_parse_errors_carry_line(text, line, msg):
    with pytest.raises(ParseError, match=msg) as info:
        parse_config(text)
    assert info.value.line == line


def test_parse_semantic_errors():
    with pytest.raises(ParseError, match="tracked"):
        parse_config("s = 3\ntrack_i = 1,4\n")
    with pytest.raises(ParseError, match="problem.kind"):
        parse_config("problem.kind = lap-rect\n")
    with pytest.raises(ContractError):
        ExperimentConfig(runs=0)


def test_slowest_run_tie_goes_to_lowest_seed():
    ref = np.array([2.0, 1.0])
    a = IterTrace(0, 5, np.array([[1.5, 0.5]]), np.zeros((1, 2)), reference=ref)
    b = IterTrace(1, 3, np.array([[1.5, 0.5]]), np.zeros((1, 2)), reference=ref)
    c = IterTrace(2, 1, np.array([[1.9, 0.9]]), np.zeros((1, 2)), reference=ref)
    assert slowest_run([a, b, c]).seed == 3
    assert slowest_run([c]).seed == 1


# --- gen and eig --------------------------------------------------------------------


def test_gen_diag_cluster(tmp_path, capsys):
    assert main(["gen", "--problem", "diag-cluster", "--n", "6000",
                 "--out", str(tmp_path / "d")]) == 0
    M = mm_read(tmp_path / "d_M.mtx")
    assert M.n == 6000
    vals, _, comments = read_spectrum_csv(tmp_path / "d_spectrum.csv")
    assert_allclose(vals[[0, 6, 5999]], [10.06, 9.0, 1.0])
    assert "n = 6000" in comments


def test_gen_lap_slit(tmp_path):
    assert main(["gen", "--problem", "lap-slit", "--h", "70", "--out", str(tmp_path / "s")]) == 0
    assert mm_read(tmp_path / "s_A.mtx").n == 9534
    assert not (tmp_path / "s_spectrum.csv").exists()
    assert main(["gen", "--problem", "lap-slit", "--h", "1/10",
                 "--out", str(tmp_path / "t")]) == 0
    assert mm_read(tmp_path / "t_A.mtx").n == 19 * 9 - 9


def test_gen_lap_rect_closed_form(tmp_path):
    assert main(["gen", "--problem", "lap-rect", "--nx", "3", "--ny", "1",
                 "--out", str(tmp_path / "r")]) == 0
    vals, _, _ = read_spectrum_csv(tmp_path / "r_spectrum.csv")
    A = mm_read(tmp_path / "r_A.mtx").to_dense()
    assert_allclose(vals, np.linalg.eigvalsh(A), rtol=1e-12)


def test_eig_dense_and_lanczos_agree(tmp_path, capsys):
    main(["gen", "--problem", "lap-rect", "--nx", "12", "--ny", "9",
          "--out", str(tmp_path / "r")])
    n = 108
    mm_write(DenseSym(np.eye(n)), tmp_path / "I.mtx")
    args = ["eig", "--M", str(tmp_path / "I.mtx"), "--A", str(tmp_path / "r_A.mtx"), "--k", "4"]
    assert main(args + ["--out", str(tmp_path / "e1.csv")]) == 0
    assert main(args + ["--dense", "--out", str(tmp_path / "e2.csv")]) == 0
    s1, s2 = load_spectrum(tmp_path / "e1.csv"), load_spectrum(tmp_path / "e2.csv")
    lam, _, _ = read_spectrum_csv(tmp_path / "r_spectrum.csv")
    assert_allclose(s1.values[:4], 1.0 / lam[:4], rtol=1e-10)
    assert_allclose(s2.values[:4], 1.0 / lam[:4], rtol=1e-10)
    assert s2.far_end == pytest.approx(1.0 / lam[-1], rel=1e-10)
    assert s2.n == n
    assert "mu_1 = " in capsys.readouterr().out
    # M defaults to the identity
    assert main(["eig", "--A", str(tmp_path / "r_A.mtx"), "--k", "2",
                 "--out", str(tmp_path / "e3.csv")]) == 0
    assert_allclose(load_spectrum(tmp_path / "e3.csv").values[:2], 1.0 / lam[:2], rtol=1e-10)
    assert main(["eig", "--out", str(tmp_path / "e4.csv")]) == 1


def test_eig_non_spd_exit_2(tmp_path):
    mm_write(DenseSym(np.eye(2)), tmp_path / "M.mtx")
    mm_write(DenseSym(np.array([[1.0, 3.0], [3.0, 1.0]])), tmp_path / "A.mtx")
    code = main(["eig", "--M", str(tmp_path / "M.mtx"), "--A", str(tmp_path / "A.mtx"),
                 "--dense", "--k", "1", "--out", str(tmp_path / "e.csv")])
    assert code == 2


def test_usage_errors_exit_1(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["gen", "--problem", "nope", "--out", "x"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("s = 3\nwhatever = 2\n")
    assert main(["run", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["bounds", str(tmp_path)]) == 1


# --- run, bounds, report ------------------------------------------------------------


@pytest.fixture(scope="module")
def rundir(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = d / "small.cfg"
    cfg.write_text(SMALL)
    assert main(["run", str(cfg), "--outdir", str(d / "out")]) == 0
    return d


def test_run_outputs(rundir):
    out = rundir / "out"
    assert sorted(p.name for p in (out / "traces").iterdir()) == [
        "run_0000.csv", "run_0001.csv", "run_0002.csv"]
    rows = list(csv.reader(body(out / "runs.csv")))
    assert rows[0][:6] == ["run_id", "seed", "steps", "phase_step", "complete", "err_sum"]
    assert [r[1] for r in rows[1:]] == ["0", "1", "2"]
    head = (out / "summary.csv").read_text().splitlines()
    assert "# config: problem.n = 400" in head
    assert any(ln.startswith("# slowest_run = ") for ln in head)
    sp = load_spectrum(out / "spectrum.csv")
    assert sp.n == 400 and sp.far_end == pytest.approx(1.0)


def test_run_is_byte_deterministic(rundir, tmp_path):
    assert main(["run", str(rundir / "small.cfg"), "--outdir", str(tmp_path / "again"),
                 "--jobs", "2"]) == 0
    for name in ("runs.csv", "summary.csv", "spectrum.csv", "traces/run_0001.csv"):
        assert (tmp_path / "again" / name).read_bytes() == (rundir / "out" / name).read_bytes()


def test_bounds_and_report(rundir, capsys):
    out = rundir / "out"
    assert main(["bounds", str(out)]) == 0
    text = (out / "validation.txt").read_text()
    assert text.rstrip().endswith("verdict: PASS (3 runs)")
    assert "lm2e1 i=1: ok" in text
    assert "thm2e1 i=1: ok" in text and "heuristic" not in text.split("thm2e1 i=1")[0]
    assert body(out / "violations.csv") == ["run_id,kind,i,step,ratio,bound"]
    rows = list(csv.reader(body(out / "bounds.csv")))
    assert rows[0] == ["kind", "i", "j", "s", "kappa", "q", "step", "ratio_bound",
                       "error_bound"]
    k1 = [r for r in rows[1:] if r[0] == "lm2e1" and r[1] == "1"]
    assert float(k1[0][4]) == pytest.approx(8 / 9.06)
    assert main(["report", str(out), "--out", str(rundir / "all.svg")]) == 0
    svg = (out / "report.svg").read_text()
    assert svg.startswith("<?xml") and "stroke-dasharray" in svg
    assert (rundir / "all.svg").read_text() == svg


def test_bounds_exit_3_on_injected_violation(rundir, tmp_path):
    import shutil
    d = tmp_path / "bad"
    shutil.copytree(rundir / "out", d)
    path = d / "traces" / "run_0000.csv"
    lines = path.read_text().splitlines()
    rows = [ln.split(",") for ln in lines if not ln.startswith("#")]
    last_step = max(int(r[1]) for r in rows[1:])
    for k, ln in enumerate(lines):
        parts = ln.split(",")
        if not ln.startswith("#") and parts[1] == str(last_step) and parts[2] == "1":
            parts[3] = "9.5"
            parts[4] = repr(10.06 - 9.5)
            lines[k] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    assert main(["bounds", str(d), "--kinds", "lm2e1", "--i", "1"]) == 3
    v = list(csv.reader(body(d / "violations.csv")))
    assert v[1][:3] == ["0", "lm2e1", "1"]
    assert "VIOLATED" in (d / "validation.txt").read_text()


def test_zero_steps_not_applicable(tmp_path):
    cfg = tmp_path / "z.cfg"
    cfg.write_text("problem.n = 100\nruns = 1\nmax_steps = 0\n")
    assert main(["run", str(cfg), "--outdir", str(tmp_path / "z")]) == 0
    main(["bounds", str(tmp_path / "z"), "--kinds", "thm2e1"])
    text = (tmp_path / "z" / "validation.txt").read_text()
    assert "not applicable" in text
    assert text.rstrip().endswith("verdict: NOT APPLICABLE (1 runs)")


# --- SVG --------------------------------------------------------------------------


def test_svg_solid_only_and_clamp():
    p = Panel("t", [Series(np.arange(4), np.array([1.0, 1e-3, 0.0, 1e-20]), "solid", 0, "e")])
    svg = render_svg([p])
    assert "stroke-dasharray" not in svg
    assert f"errors &lt;= {FLOOR:g} drawn at {FLOOR:g}" in svg
    assert render_svg([p]) == svg


def test_svg_two_panels_width():
    p = Panel("a", [Series(np.arange(3), np.ones(3))])
    q = Panel("b", [Series(np.arange(3), np.ones(3), "dotted", 1)])
    svg = render_svg([p, q])
    assert 'width="1120"' in svg and 'stroke-dasharray="1.5,3"' in svg
