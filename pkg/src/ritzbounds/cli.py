"""Command-line experiment runner: ``gen``, ``eig``, ``run``, ``bounds``, ``report``.

A run directory produced by ``run`` holds::

    spectrum.csv        reference eigenvalues (descending) with far end and n
    runs.csv            one row per seeded run, final errors and gamma-tilde maxima
    summary.csv         per-index maximum final error and the slowest run
    traces/run_NNNN.csv per-step trace of each run

``bounds`` adds ``bounds.csv``, ``validation.txt`` and ``violations.csv``;
``report`` draws ``report.svg``.  Every CSV starts with ``#`` lines echoing the
resolved configuration.

Exit codes: 0 success, 1 usage, 2 numerical failure, 3 validation failure.
"""

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .analysis import KINDS, _start, bound_curve, check_single_step, track_gamma, validate
from .eigsolve import RunConfig, read_traces, run_iteration, write_traces
from .errors import ContractError, NumericalError, ParseError
from .matrixkit import cholesky, identity
from .oracle import Spectrum, dense_reference, pencil_reference
from .precond import assess_quality, make_preconditioner
from .problems import (ProblemSpec, build_problem, gen_diag_cluster, gen_laplacian_rect,
                       gen_laplacian_slit, mm_read, mm_write, read_spectrum_csv,
                       write_spectrum_csv)
from .report import Panel, Series, render_svg

__all__ = ["ExperimentConfig", "parse_config", "main", "cmd_gen", "cmd_eig", "cmd_run",
           "cmd_bounds", "cmd_report", "load_spectrum", "slowest_run"]

log = logging.getLogger("ritzbounds")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# configuration


def _int_list(text):
    text = text.strip()
    if not text or text == "none":
        return ()
    return tuple(int(t) for t in text.replace(" ", "").split(","))


def _kind_list(text):
    text = text.strip()
    if not text or text == "none":
        return ()
    kinds = tuple(t.strip() for t in text.split(","))
    bad = [k for k in kinds if k not in KINDS]
    if bad:
        raise ValueError(f"unknown bound kind(s) {', '.join(bad)}")
    return kinds


def _h_value(text):
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


_KEYS = {
    "problem.kind": ("problem_kind", str),
    "problem.n": ("problem_n", int),
    "problem.h": ("problem_h", _h_value),
    "precond.kind": ("precond_kind", str),
    "precond.droptol": ("precond_droptol", float),
    "precond.eta": ("precond_eta", float),
    "precond.seed": ("precond_seed", int),
    "s": ("s", int),
    "track_i": ("track_i", _int_list),
    "runs": ("runs", int),
    "seed_base": ("seed_base", int),
    "max_steps": ("max_steps", int),
    "tol": ("tol", float),
    "bounds": ("bounds", _kind_list),
    "outdir": ("outdir", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings (one field per configuration key)."""

    problem_kind: str = "diag-cluster"
    problem_n: int = 6000
    problem_h: float = 1.0 / 70
    precond_kind: str = "exact-inverse"
    precond_droptol: float = 1e-5
    precond_eta: float = 0.0
    precond_seed: int = 0
    s: int = 6
    track_i: tuple = ()
    runs: int = 100
    seed_base: int = 0
    max_steps: int = 200
    tol: float = 1e-10
    bounds: tuple = ("thm2e1", "neighbor")
    outdir: str = "out"

    def __post_init__(self):
        if self.problem_kind not in ("diag-cluster", "lap-slit"):
            raise ContractError(f"problem.kind must be diag-cluster or lap-slit "
                                f"(got {self.problem_kind!r})")
        if self.precond_kind not in ("exact-inverse", "ic-threshold", "perturbed-identity",
                                     "identity"):
            raise ContractError(f"unknown precond.kind {self.precond_kind!r}")
        if self.s < 1:
            raise ContractError("s must be positive")
        if self.runs < 1:
            raise ContractError("runs must be at least 1")
        if self.max_steps < 0:
            raise ContractError("max_steps must be non-negative")
        bad = [i for i in self.track_i if not 1 <= i <= self.s]
        if bad:
            raise ContractError(f"tracked indices must lie in 1..s (got {bad})")

    def problem(self):
        if self.problem_kind == "diag-cluster":
            return ProblemSpec("diag-cluster", {"n": self.problem_n})
        return ProblemSpec("lap-slit", {"h": self.problem_h})

    def precond_params(self):
        return {"droptol": self.precond_droptol, "eta": self.precond_eta,
                "seed": self.precond_seed}

    def echo(self):
        """``key = value`` lines in canonical form; parse_config reads them back."""
        out = []
        for key, (attr, _) in _KEYS.items():
            v = getattr(self, attr)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v) or "none"
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{key} = {v}")
        return out


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment.  Raises ParseError."""
    values, seen = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ParseError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        attr, conv = _KEYS[key]
        try:
            values[attr] = conv(value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key}: {exc}", lineno) from None
    try:
        return ExperimentConfig(**values)
    except ContractError as exc:
        raise ParseError(str(exc)) from None


def _comment(cfg, extra=()):
    return "\n".join([f"config: {line}" for line in cfg.echo()] + list(extra))


def _meta(comments):
    """``key = value`` pairs from comment lines (config echo lines excluded)."""
    out = {}
    for c in comments:
        if c.startswith("config:") or "=" not in c:
            continue
        k, v = (t.strip() for t in c.split("=", 1))
        out[k] = v
    return out


def _config_from_comments(comments):
    lines = [c[len("config:"):] for c in comments if c.startswith("config:")]
    return parse_config("\n".join(lines)) if lines else None


# ---------------------------------------------------------------------------
# shared state for runs


@lru_cache(maxsize=2)
def _setup(cfg):
    """Problem, reference spectrum, scaled preconditioner and quality for a config."""
    M, A = build_problem(cfg.problem())
    spectrum = pencil_reference(M, A, k=cfg.s + 2)
    T0 = make_preconditioner(cfg.precond_kind, A, **cfg.precond_params())
    quality = assess_quality(T0, A)
    T = T0.scaled(quality.omega)
    solve = None if A.is_identity else cholesky(A).solve
    return M, A, spectrum, T, quality, solve


def _one_run(cfg, r):
    M, A, spectrum, T, _, solve = _setup(cfg)
    rc = RunConfig(s=cfg.s, max_steps=cfg.max_steps, tol=cfg.tol, seed=cfg.seed_base + r,
                   run_id=r)
    trace = run_iteration(M, A, T, rc, reference=spectrum.values[: cfg.s + 1], solve=solve)
    if cfg.track_i and trace.entry is not None:
        track_gamma(trace, M, A, T, spectrum, i_list=cfg.track_i, solve=solve)
    trace.entry = trace.final = None  # keep pickling light
    return trace


def slowest_run(traces):
    """Run maximizing the final-step sum of errors; ties go to the lowest seed."""
    best = None
    for tr in traces:
        key = (float(np.sum(tr.errors()[-1])), -tr.seed)
        if best is None or key > best[0]:
            best = (key, tr)
    return best[1]


def _gamma_max(trace, i):
    g = trace.gamma.get(i)
    if g is None:
        return np.nan
    g = g[np.isfinite(g)]
    return float(g.max()) if g.size else np.nan


def load_spectrum(path):
    """Spectrum from a CSV written by ``eig`` or ``run`` (far end and n in comments)."""
    values, res, comments = read_spectrum_csv(path)
    meta = _meta(comments)
    far = float(meta["far_end"]) if "far_end" in meta else None
    n = int(meta["n"]) if "n" in meta else None
    return Spectrum(values, None, res, far, n)


def _write_spectrum(path, spectrum, comment):
    extra = [f"far_end = {spectrum.far_end!r}", f"n = {spectrum.n}",
             "orientation = descending"]
    write_spectrum_csv(path, spectrum.values, spectrum.residuals,
                       comment="\n".join(([comment] if comment else []) + extra))


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    """Write the matrices of a test problem and, when known, its closed-form spectrum."""
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    spectrum, header = None, ""
    if args.problem == "diag-cluster":
        M, A = gen_diag_cluster(args.n)
        spectrum = np.sort(M.diagonal())[::-1]
        header = f"problem = diag-cluster\nn = {M.n}\norientation = descending"
        mm_write(M, f"{out}_M.mtx", comment=f"diag-cluster n = {M.n}")
    elif args.problem == "lap-slit":
        A = gen_laplacian_slit(args.h)
        mm_write(A, f"{out}_A.mtx", comment=f"lap-slit h = {args.h}")
    else:
        A, spectrum = gen_laplacian_rect(args.nx, args.ny)
        header = (f"problem = lap-rect\nnx = {args.nx}\nny = {args.ny}\n"
                  f"orientation = ascending (eigenvalues of A)")
        mm_write(A, f"{out}_A.mtx", comment=f"lap-rect nx = {args.nx} ny = {args.ny}")
    if spectrum is not None:
        write_spectrum_csv(f"{out}_spectrum.csv", spectrum, comment=header)
    n = A.n if args.problem != "diag-cluster" else M.n
    print(f"wrote {out}_*.mtx (n = {n})")
    return EXIT_OK


def cmd_eig(args):
    """Leading eigenpairs of a pencil read from MatrixMarket files."""
    if args.M is None and args.A is None:
        raise ContractError("eig needs --M, --A or both")
    A = mm_read(args.A) if args.A else None
    M = mm_read(args.M) if args.M else identity(A.n)
    if args.dense:
        spectrum = dense_reference(M, A, vectors=False)
        spectrum = Spectrum(spectrum.values[: args.k], None, spectrum.residuals[: args.k],
                            spectrum.far_end, spectrum.n)
    else:
        spectrum = pencil_reference(M, A, k=args.k)
    comment = f"M = {args.M or 'identity'}" + (f"\nA = {args.A}" if args.A else "")
    _write_spectrum(args.out, spectrum, comment)
    for k, v in enumerate(spectrum.values[: args.k], start=1):
        print(f"mu_{k} = {v:.15g}")
    return EXIT_OK


def cmd_run(args):
    """Seeded runs for a configuration file; writes traces and the aggregation."""
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    outdir = Path(args.outdir or cfg.outdir)
    (outdir / "traces").mkdir(parents=True, exist_ok=True)
    M, A, spectrum, T, quality, _ = _setup(cfg)
    log.info("n = %d, gamma = %.4g, omega = %.4g", M.n, quality.gamma, quality.omega)
    pc = [f"precond.gamma = {quality.gamma!r}", f"precond.omega = {quality.omega!r}"]
    _write_spectrum(outdir / "spectrum.csv", spectrum, _comment(cfg))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            traces = list(pool.map(_one_run, [cfg] * cfg.runs, range(cfg.runs)))
    else:
        traces = [_one_run(cfg, r) for r in range(cfg.runs)]
    for tr in traces:
        extra = [f"run_id = {tr.run_id}", f"seed = {tr.seed}", f"complete = {int(tr.complete)}"]
        if tr.message:
            extra.append(f"message = {tr.message}")
        write_traces(outdir / "traces" / f"run_{tr.run_id:04d}.csv", [tr],
                     _comment(cfg, pc + extra))
    slow = slowest_run(traces)
    s = cfg.s
    with open(outdir / "runs.csv", "w", encoding="utf-8", newline="") as fh:
        for line in _comment(cfg, pc).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "seed", "steps", "phase_step", "complete", "err_sum"]
                   + [f"err_{i}" for i in range(1, s + 1)]
                   + [f"gamma_max_{i}" for i in range(1, s + 1)])
        for tr in traces:
            e = tr.errors()[-1]
            g = [_gamma_max(tr, i) for i in range(1, s + 1)]
            w.writerow([tr.run_id, tr.seed, tr.steps,
                        "" if tr.phase_step is None else tr.phase_step, int(tr.complete),
                        f"{e.sum():.17g}"] + [f"{x:.17g}" for x in e]
                       + ["" if not np.isfinite(x) else f"{x:.17g}" for x in g])
    final = np.array([tr.errors()[-1] for tr in traces])
    with open(outdir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        extra = pc + [f"slowest_run = {slow.run_id}", f"slowest_seed = {slow.seed}",
                      f"runs = {len(traces)}",
                      f"incomplete = {sum(not tr.complete for tr in traces)}"]
        for line in _comment(cfg, extra).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "max_final_error", "slowest_run_error"])
        for i in range(1, s + 1):
            w.writerow([i, f"{final[:, i - 1].max():.17g}",
                        f"{slow.errors()[-1][i - 1]:.17g}"])
    bad = [tr for tr in traces if not tr.complete]
    print(f"{len(traces)} runs, slowest run {slow.run_id} (seed {slow.seed}), "
          f"max steps {max(tr.steps for tr in traces)}, "
          f"phase entry in {sum(tr.phase_step is not None for tr in traces)} runs")
    for tr in bad:
        print(f"run {tr.run_id} incomplete: {tr.message}", file=sys.stderr)
    return EXIT_NUMERICAL if bad else EXIT_OK


def _read_run_dir(outdir):
    outdir = Path(outdir)
    need = [outdir / "spectrum.csv", outdir / "summary.csv", outdir / "traces"]
    missing = [str(p) for p in need if not p.exists()]
    if missing:
        raise ContractError("missing inputs: " + ", ".join(missing))
    spectrum = load_spectrum(outdir / "spectrum.csv")
    with open(outdir / "summary.csv", encoding="utf-8") as fh:
        comments = [ln[1:].strip() for ln in fh if ln.startswith("#")]
    meta = _meta(comments)
    cfg = _config_from_comments(comments)
    traces = []
    for path in sorted((outdir / "traces").glob("run_*.csv")):
        got, tcomments = read_traces(path, spectrum.values[: cfg.s] if cfg else None)
        tmeta = _meta(tcomments)
        for tr in got:
            tr.seed = int(tmeta.get("seed", tr.seed))
            tr.complete = tmeta.get("complete", "1") == "1"
        traces.extend(got)
    if not traces:
        raise ContractError(f"no traces in {outdir / 'traces'}")
    return cfg, meta, spectrum, traces


def _q_for(kind, trace, i, q_flag, gamma):
    if kind.startswith("lm2"):
        return 0.0, "exact-inverse bound (q = 0)"
    if q_flag is not None:
        return q_flag, "q given on command line"
    g = _gamma_max(trace, i)
    if np.isfinite(g):
        return g, "measured gamma-tilde maximum"
    if gamma == 0.0:
        return 0.0, "exact inverse, q = 0"
    return gamma, "heuristic: q = preconditioner gamma, gamma-tilde not tracked"


def cmd_bounds(args):
    """Bound curves for the slowest run and validation over all runs."""
    outdir = Path(args.dir)
    cfg, meta, spectrum, traces = _read_run_dir(outdir)
    kinds = _kind_list(args.kinds) if args.kinds else (cfg.bounds if cfg else ("thm2e1",))
    gamma = float(meta.get("precond.gamma", "nan"))
    s = traces[0].s
    i_list = _int_list(args.i) if args.i else tuple(range(1, s + 1))
    slow_id = int(meta.get("slowest_run", traces[0].run_id))
    slow = next(tr for tr in traces if tr.run_id == slow_id)
    report, violations, curve_rows, notes = [], [], [], []
    total = 0
    for kind in kinds:
        if kind == "thm2e3":
            if not np.isfinite(gamma):
                raise ContractError("thm2e3 needs the preconditioner gamma")
            checked, bad = 0, []
            for tr in traces:
                c, v = check_single_step(tr, spectrum, gamma, args.tol)
                checked += c
                bad.extend((tr.run_id, x) for x in v)
            total += checked
            for rid, (ell, j, r1, b) in bad:
                violations.append([rid, kind, s, ell, f"{r1:.17g}", f"{b:.17g}"])
            report.append(f"{kind} i={s}: checked {checked} steps, {len(bad)} violations "
                          f"(q = {gamma:.6g}, single step)")
            continue
        for i in i_list:
            checked, nbad, na, qs = 0, 0, [], []
            for tr in traces:
                q, source = _q_for(kind, tr, i, args.q, gamma)
                qs.append(q)
                rep = validate(tr, kind, spectrum, i, q=q, tol=args.tol)
                if not rep.applicable:
                    na.append(rep.note)
                    continue
                checked += rep.checked
                total += rep.checked
                nbad += len(rep.violations)
                for (_, ell, r, b) in rep.violations:
                    violations.append([tr.run_id, kind, i, ell, f"{r:.17g}", f"{b:.17g}"])
            verdict = "not applicable" if checked == 0 else (
                "ok" if nbad == 0 else "VIOLATED")
            qtxt = f"q max {max(qs):.6g}" if qs else ""
            line = (f"{kind} i={i}: {verdict}; checked {checked} steps, {nbad} violations, "
                    f"{qtxt} ({source})")
            if na:
                line += f"; not applicable in {len(na)} runs: {sorted(set(na))[0]}"
            report.append(line)
            # curve of the slowest run
            q, _ = _q_for(kind, slow, i, args.q, gamma)
            j = s
            l0 = _start(slow, spectrum, j)
            if l0 is None:
                notes.append(f"not applicable: {kind} i={i} (phase never entered)")
                continue
            theta0 = slow.values[l0, -1]
            if kind == "bpsde":
                theta0 = 1.0 / theta0
            curve = bound_curve(kind, spectrum, i, j, s, q, theta0, slow.steps - l0)
            if not curve.defined:
                notes.append(f"not applicable: {kind} i={i} ({curve.note})")
                continue
            curve_rows.extend(curve.rows())
    extra = [f"slowest_run = {slow_id}", f"origin_step = {_start(slow, spectrum, s)}",
             "step counts from the origin (first step with theta_s > mu_{s+1})"] + notes
    comment = _comment(cfg, extra) if cfg else "\n".join(extra)
    with open(outdir / "bounds.csv", "w", encoding="utf-8", newline="") as fh:
        for line in comment.splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "i", "j", "s", "kappa", "q", "step", "ratio_bound", "error_bound"])
        w.writerows(curve_rows)
    with open(outdir / "violations.csv", "w", encoding="utf-8", newline="") as fh:
        for line in (_comment(cfg) if cfg else "").splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "kind", "i", "step", "ratio", "bound"])
        w.writerows(violations)
    verdict = "FAIL" if violations else ("PASS" if total else "NOT APPLICABLE")
    text = "\n".join(report + notes + [f"verdict: {verdict} ({len(traces)} runs)"]) + "\n"
    (outdir / "validation.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if not violations else EXIT_VALIDATION


def _panel_for(outdir):
    cfg, meta, spectrum, traces = _read_run_dir(outdir)
    slow_id = int(meta.get("slowest_run", traces[0].run_id))
    slow = next(tr for tr in traces if tr.run_id == slow_id)
    steps = np.arange(slow.steps + 1)
    err = slow.errors()
    title = Path(outdir).name
    if cfg is not None:
        title = f"{cfg.problem_kind}, {cfg.precond_kind}"
        if cfg.precond_kind == "perturbed-identity":
            title += f" eta={cfg.precond_eta:g}"
        if cfg.precond_kind == "ic-threshold":
            title += f" tau={cfg.precond_droptol:g}"
    panel = Panel(title)
    for i in range(1, slow.s + 1):
        panel.series.append(Series(steps, err[:, i - 1], "solid", i - 1, f"run {slow_id} i={i}"))
    bpath = Path(outdir) / "bounds.csv"
    if bpath.exists():
        with open(bpath, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        meta_b = _meta([ln[1:].strip() for ln in lines if ln.startswith("#")])
        origin = meta_b.get("origin_step", "None")
        body = [ln for ln in lines if not ln.startswith("#")]
        curves = {}
        for row in list(csv.reader(body))[1:]:
            if row and row[8]:
                curves.setdefault((row[0], int(row[1])), []).append((int(row[6]), float(row[8])))
        if origin != "None":
            l0 = int(origin)
            for (kind, i), pts in sorted(curves.items()):
                if kind == "bpsde":
                    continue
                st = np.array([p[0] for p in pts]) + l0
                v = np.array([p[1] for p in pts])
                style = "dotted" if kind == "neighbor" else "dashed"
                panel.series.append(Series(st, v, style, i - 1, f"{kind} i={i}"))
        for ln in lines:
            if ln.startswith("# not applicable"):
                panel.notes.append(ln[2:].replace("not applicable: ", "n/a: "))
    return panel


def cmd_report(args):
    """One SVG per run directory, plus a combined figure when ``--out`` is given."""
    panels = []
    for d in args.dirs:
        panel = _panel_for(d)
        (Path(d) / "report.svg").write_text(render_svg([panel]), encoding="utf-8")
        panels.append(panel)
    if args.out:
        Path(args.out).write_text(render_svg(panels), encoding="utf-8")
    print(f"wrote {len(panels)} panel(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="ritzbounds", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write test-problem matrices")
    g.add_argument("--problem", required=True, choices=("diag-cluster", "lap-slit", "lap-rect"))
    g.add_argument("--n", type=int, default=6000)
    g.add_argument("--h", type=_h_value, default=70.0, help="mesh size or its reciprocal")
    g.add_argument("--nx", type=int, default=3)
    g.add_argument("--ny", type=int, default=1)
    g.add_argument("--out", required=True, help="output prefix")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("eig", help="reference eigenvalues of a pencil (M, A)")
    e.add_argument("--M", help="MatrixMarket file (default: identity)")
    e.add_argument("--A")
    e.add_argument("--k", type=int, default=8)
    e.add_argument("--dense", action="store_true", help="dense reduction (n <= 2000)")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eig)

    r = sub.add_parser("run", help="seeded runs from a configuration file")
    r.add_argument("config")
    r.add_argument("--outdir", help="override the configured output directory")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bounds", help="bound curves and validation for a run directory")
    b.add_argument("dir")
    b.add_argument("--kinds", help=f"comma list from {', '.join(KINDS)}")
    b.add_argument("--q", type=float, help="quality parameter instead of the measured one")
    b.add_argument("--i", help="comma list of indices (default 1..s)")
    b.add_argument("--tol", type=float, default=1e-9)
    b.set_defaults(func=cmd_bounds)

    rep = sub.add_parser("report", help="SVG plots for run directories")
    rep.add_argument("dirs", nargs="+")
    rep.add_argument("--out", help="combined SVG with one panel per directory")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParseError, ContractError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
