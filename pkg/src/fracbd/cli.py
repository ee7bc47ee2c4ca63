"""Command-line frontend.

Subcommands::

    moments       tabulate analytic mean/variance over a t-grid
    extinction    tabulate the extinction probability over a t-grid
    statedist     analytic state distribution at one time
    firstpassage  first-visit-to-zero density/CDF over a t-grid
    simulate      emit simulated sample paths as CSV (or step-plot SVG)
    estimate      Monte Carlo estimate of a time-t functional
    table1        reproduce the reference moment table and report pass/fail
    validate      run a named validation suite; nonzero exit on failure
    plot          reproduce the expectation-family and sample-path figures

Flags use the same keys as the optional ``--config`` file (``key=value`` lines,
flags win).  CSV output starts with a parameter-echo comment; JSON embeds the
same metadata; SVG carries it in ``<desc>``.  Numbers print at 6 significant
digits; comparisons always use full precision internally.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import __version__, analytic, validate
from ._svg import line_chart
from .analytic import LinearParams
from .laplace import invert, lt_first_visit_pdf, lt_tempered_family
from .markov import ModelSpec, TimeChange, Truncation, make_resolvent_accessor
from .mcstats import Estimate, estimate as mc_estimate
from .randgen import RngStream
from .simulate import paths_to_csv, sample_marginal, simulate_tc_lbdpc, simulate_tempered_lbdpc

_FLOAT_KEYS = ("alpha", "theta", "lam", "mu", "nu", "t", "t_max")
_INT_KEYS = ("m0", "paths", "seed")


def _add_model_flags(sp):
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--theta", type=float, default=0.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--nu", type=float, default=0.0)
    sp.add_argument("--m0", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=str, default="-", help="output path ('-' = stdout)")
    sp.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    sp.add_argument("--config", type=str, default=None,
                    help="key=value file with the same keys as the flags")


def _parse_grid(text: str) -> np.ndarray:
    """'lo:hi:n' or a comma list."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return np.array([float(x) for x in text.split(",")])


def _apply_config(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Config supplies values only where the flag was left at its default."""
    if not getattr(args, "config", None):
        return
    conf = {}
    with open(args.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            conf[k.strip().replace("-", "_")] = v.strip()
    for k, v in conf.items():
        if not hasattr(args, k):
            continue
        if getattr(args, k) != parser_defaults.get(k):
            continue  # flag given explicitly; flags override the file
        if k in _FLOAT_KEYS:
            setattr(args, k, float(v))
        elif k in _INT_KEYS:
            setattr(args, k, int(v))
        else:
            setattr(args, k, v)


def _params(args) -> LinearParams:
    return LinearParams(args.alpha, args.theta, args.lam, args.mu, args.nu)


def _echo(args, cmd: str) -> str:
    keys = ["alpha", "theta", "lam", "mu", "nu", "m0", "seed"]
    kv = " ".join(f"{k}={getattr(args, k)}" for k in keys if hasattr(args, k))
    return f"fracbd {__version__} | cmd={cmd} | {kv}"


def _emit(args, text: str) -> None:
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _grid_table(args, cmd, columns, rows) -> str:
    if args.format == "json":
        return json.dumps(
            {"meta": _echo(args, cmd), "columns": columns,
             "rows": [[_fmt(v) for v in r] for r in rows]}
        ) + "\n"
    buf = io.StringIO()
    buf.write(f"# {_echo(args, cmd)}\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def cmd_moments(args) -> int:
    p = _params(args)
    grid = _parse_grid(args.grid)
    cols = ["t", "mean", "variance"]
    rows = [[t, analytic.mean_lbdpc(p, t), analytic.var_lbdpc(p, t)] for t in grid]
    if args.compare_mc:
        cols += ["mc_mean", "mc_mean_stderr", "mc_var", "mc_var_stderr"]
        from .mcstats import variance_estimate

        for j, r in enumerate(rows):
            x = sample_marginal(p, args.m0, grid[j], args.paths, RngStream(args.seed, j)).astype(float)
            em = Estimate.from_samples(x)
            ev = variance_estimate(x)
            r += [em.value, em.stderr, ev.value, ev.stderr]
    if args.format == "svg":
        svg = line_chart(
            [("mean", list(grid), [r[1] for r in rows]),
             ("variance", list(grid), [r[2] for r in rows])],
            "moments", "t", "value", metadata=_echo(args, "moments"),
        )
        _emit(args, svg)
        return 0
    _emit(args, _grid_table(args, "moments", cols, rows))
    return 0


def cmd_extinction(args) -> int:
    p = _params(args)
    grid = _parse_grid(args.grid)
    cols = ["t", "extinction"]
    rows = [[t, analytic.extinction_lbdpc(p, t)] for t in grid]
    if args.compare_mc:
        cols += ["mc_extinction", "mc_stderr"]
        for j, r in enumerate(rows):
            x = sample_marginal(p, args.m0, grid[j], args.paths, RngStream(args.seed, j))
            e = Estimate.from_samples((x == 0).astype(float))
            r += [e.value, e.stderr]
    if args.format == "svg":
        svg = line_chart([("extinction", list(grid), [r[1] for r in rows])],
                         "extinction probability", "t", "probability",
                         metadata=_echo(args, "extinction"))
        _emit(args, svg)
        return 0
    _emit(args, _grid_table(args, "extinction", cols, rows))
    return 0


def cmd_statedist(args) -> int:
    p = _params(args)
    t = args.t
    rows = [[0, analytic.extinction_lbdpc(p, t)]]
    for n in range(1, args.nmax + 1):
        rows.append([n, analytic.state_prob_lbdpc(p, n, t)])
    _emit(args, _grid_table(args, "statedist", ["n", "probability"], rows))
    return 0


def cmd_firstpassage(args) -> int:
    p = _params(args)
    grid = _parse_grid(args.grid)
    base = make_resolvent_accessor(
        ModelSpec.linear_model(p.lam, p.mu, 0.0), Truncation(args.nmax)
    )
    if p.theta > 0.0:
        ev = lt_tempered_family(base, p.alpha, p.theta, p.nu, "first_visit", args.m0)
    else:
        ev = lt_first_visit_pdf(base, p.alpha, p.nu, args.m0)
    rows = []
    cdf = 0.0
    prev_t = 0.0
    for t in grid:
        if t <= 0.0:
            rows.append([t, 0.0, 0.0])
            continue
        pdf = invert(ev, float(t))
        cdf_ev = lambda z: ev(z) / z
        cdf = invert(cdf_ev, float(t))
        rows.append([t, pdf, min(max(cdf, 0.0), 1.0)])
        prev_t = t
    _emit(args, _grid_table(args, "firstpassage", ["t", "pdf", "cdf"], rows))
    return 0


def cmd_simulate(args) -> int:
    p = _params(args)
    paths = []
    for i in range(args.paths):
        rng = RngStream(args.seed, i)
        if p.theta > 0.0:
            paths.append(simulate_tempered_lbdpc(p, args.m0, args.t_max, rng))
        else:
            paths.append(simulate_tc_lbdpc(p, args.m0, args.t_max, rng))
    if args.format == "svg":
        series = []
        for i, path in enumerate(paths[: args.plot_paths]):
            ts = [0.0] + [ev.time for ev in path.events] + [args.t_max]
            ss = [path.initial] + [ev.state_after for ev in path.events]
            ss = ss + [ss[-1]]
            series.append((f"path {i}", ts, [float(s) for s in ss]))
        svg = line_chart(series, "sample paths", "t", "state", step=True,
                         metadata=_echo(args, "simulate"))
        _emit(args, svg)
        return 0
    buf = io.StringIO()
    buf.write(f"# {_echo(args, 'simulate')} t_max={args.t_max}\n")
    paths_to_csv(paths, buf)
    _emit(args, buf.getvalue())
    return 0


def cmd_estimate(args) -> int:
    p = _params(args)
    q = {"mean": "mean_at", "variance": "var_at", "extinction": "extinction_at",
         "statedist": "state_dist_at"}[args.quantity]
    res = mc_estimate(q, args.t, p, args.paths, RngStream(args.seed), m0=args.m0)
    if isinstance(res, list):
        rows = [[n, e.value, e.stderr] for n, e in enumerate(res)]
        _emit(args, _grid_table(args, "estimate", ["n", "probability", "stderr"], rows))
    else:
        rows = [[args.t, res.value, res.stderr, res.ci95[0], res.ci95[1]]]
        _emit(args, _grid_table(args, "estimate",
                                ["t", args.quantity, "stderr", "ci_lo", "ci_hi"], rows))
    return 0


def cmd_table1(args) -> int:
    recs = validate.suite_table1()
    buf = io.StringIO()
    buf.write(f"# {_echo(args, 'table1')}\n")
    buf.write("lam    mu    nu    mean      var        printed_mean printed_var status\n")
    ok = True
    for i, (lam, mu, nu, em, ev) in enumerate(validate.TABLE1):
        p = LinearParams(0.5, 0.0, lam, mu, nu)
        m, v = analytic.mean_lbdpc(p, 1.0), analytic.var_lbdpc(p, 1.0)
        good = recs[2 * i].passed and recs[2 * i + 1].passed
        ok &= good
        buf.write(
            f"{lam:<6.2f} {mu:<5.2f} {nu:<5.2f} {m:<9.4f} {v:<10.4f} "
            f"{em:<12.4f} {ev:<11.4f} {'ok' if good else 'FAIL'}\n"
        )
    buf.write(f"table1: {'PASS' if ok else 'FAIL'}\n")
    _emit(args, buf.getvalue())
    return 0 if ok else 1


def cmd_validate(args) -> int:
    recs = validate.run_suite(args.suite)
    ok = all(r.passed for r in recs)
    report = {
        "meta": _echo(args, f"validate {args.suite}"),
        "suite": args.suite,
        "pass": ok,
        "checks": [json.loads(r.to_json()) for r in recs],
    }
    _emit(args, json.dumps(report, indent=2) + "\n")
    return 0 if ok else 1


def cmd_plot(args) -> int:
    which = args.figure
    if which == "alpha-family":
        grid = _parse_grid(args.grid)
        series = []
        for a in (0.3, 0.5, 0.7, 0.9, 1.0):
            p = LinearParams(a, 0.0, 3.0, 1.0, 1.0)
            series.append((f"alpha={a}", list(grid),
                           [analytic.mean_lbdpc(p, t) for t in grid]))
        svg = line_chart(series, "mean population, rate family in alpha", "t",
                         "mean", metadata=_echo(args, "plot"))
    elif which == "nu-family":
        grid = _parse_grid(args.grid)
        series = []
        for nu in (0.5, 1.0, 2.0, 4.0):
            p = LinearParams(0.5, 0.0, 4.0, 1.0, nu)
            series.append((f"nu={nu}", list(grid),
                           [analytic.mean_lbdpc(p, t) for t in grid]))
        svg = line_chart(series, "mean population, family in nu", "t", "mean",
                         metadata=_echo(args, "plot"))
    elif which in ("paths-a", "paths-b"):
        combos = {
            "paths-a": [(1.0, 15.0, 11.0, 2.0), (0.5, 15.0, 11.0, 2.0)],
            "paths-b": [(0.3, 10.0, 12.0, 3.0), (0.8, 10.0, 12.0, 3.0)],
        }[which]
        series = []
        for j, (a, lam, mu, nu) in enumerate(combos):
            p = LinearParams(a, 0.0, lam, mu, nu)
            path = simulate_tc_lbdpc(p, args.m0, args.t_max, RngStream(args.seed, j))
            ts = [0.0] + [ev.time for ev in path.events] + [args.t_max]
            ss = [path.initial] + [ev.state_after for ev in path.events]
            series.append((f"alpha={a}", ts, [float(s) for s in ss + [ss[-1]]]))
        svg = line_chart(series, f"sample paths ({which})", "t", "state",
                         step=True, metadata=_echo(args, "plot"))
    else:
        raise SystemExit(f"unknown figure {which!r}")
    _emit(args, svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracbd",
        description="Time-changed birth-death processes with catastrophes.",
        epilog="CSV columns are stable per subcommand; see each subcommand's --help.",
    )
    ap.add_argument("--version", action="version", version=f"fracbd {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("moments", help="CSV of (t, mean, variance) on a grid")
    _add_model_flags(sp)
    sp.add_argument("--grid", type=str, default="0:5:101")
    sp.add_argument("--compare-mc", action="store_true")
    sp.add_argument("--paths", type=int, default=10_000)
    sp.set_defaults(fn=cmd_moments)

    sp = sub.add_parser("extinction", help="CSV of (t, extinction probability)")
    _add_model_flags(sp)
    sp.add_argument("--grid", type=str, default="0:5:101")
    sp.add_argument("--compare-mc", action="store_true")
    sp.add_argument("--paths", type=int, default=10_000)
    sp.set_defaults(fn=cmd_extinction)

    sp = sub.add_parser("statedist", help="CSV of (n, probability) at time --t")
    _add_model_flags(sp)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--nmax", type=int, default=15)
    sp.set_defaults(fn=cmd_statedist)

    sp = sub.add_parser("firstpassage", help="CSV of (t, pdf, cdf) of the first visit to 0")
    _add_model_flags(sp)
    sp.add_argument("--grid", type=str, default="0.05:5:100")
    sp.add_argument("--nmax", type=int, default=200)
    sp.set_defaults(fn=cmd_firstpassage)

    sp = sub.add_parser("simulate", help="CSV of simulated paths (path_id,k,Y_k,state,kind)")
    _add_model_flags(sp)
    sp.add_argument("--t-max", dest="t_max", type=float, default=3.0)
    sp.add_argument("--paths", type=int, default=3)
    sp.add_argument("--plot-paths", type=int, default=3)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("estimate", help="Monte Carlo estimate at time --t")
    _add_model_flags(sp)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--quantity", choices=("mean", "variance", "extinction", "statedist"),
                    default="mean")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.set_defaults(fn=cmd_estimate)

    sp = sub.add_parser("table1", help="reproduce the reference moment table")
    _add_model_flags(sp)
    sp.set_defaults(fn=cmd_table1)

    sp = sub.add_parser("validate", help="run a validation suite (JSON report)")
    _add_model_flags(sp)
    sp.add_argument("suite", choices=sorted(validate.SUITES) + ["all"])
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("plot", help="reproduce the expectation/path figures as SVG")
    _add_model_flags(sp)
    sp.add_argument("figure", choices=("alpha-family", "nu-family", "paths-a", "paths-b"))
    sp.add_argument("--grid", type=str, default="0:5:101")
    sp.add_argument("--t-max", dest="t_max", type=float, default=3.0)
    sp.set_defaults(fn=cmd_plot)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    defaults = {a.dest: a.default for g in ap._subparsers._group_actions
                for a in g.choices[args.command]._actions}
    _apply_config(args, defaults)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
