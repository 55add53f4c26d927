"""Command-line front end: ``smp {analytic,simulate,bursts,passage,compare}``.

Exit codes: 0 success, 2 invalid input, 3 tolerance failure in ``compare``.
``SMP_THREADS`` caps the number of simulation worker threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytics as an
from . import bursts as bu
from . import continuum as cn
from .compare import run_compare
from .config import ConfigError, RunConfig, load_config
from .distributions import LawError, TwoDelta
from .montecarlo import (default_workers, run_continuous, run_discrete, run_first_passage,
                         run_iid_draws, sample_paths)
from .report import CsvWriter, fmt, snapshot_label, write_json

log = logging.getLogger("smp")

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 2, 3


def _law_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"malformed law JSON: {exc}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="smp", description="Multiplicative processes with resets.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run config (path or shipped recipe name)")
        sp.add_argument("--model", choices=["discrete_uniform", "discrete_random",
                                            "continuous_uniform", "state_dependent"])
        sp.add_argument("--mu", type=float)
        sp.add_argument("--r", type=float)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--q", type=float)
        sp.add_argument("--alpha", type=float, nargs="+")
        sp.add_argument("--lambda0", type=float)
        sp.add_argument("--multiplier-law", type=_law_arg)
        sp.add_argument("--reset-law", type=_law_arg)
        sp.add_argument("--initial-law", type=_law_arg)
        sp.add_argument("--gamma", type=float, nargs="+")
        sp.add_argument("--t-max", type=float, help="horizon (steps or time)")
        sp.add_argument("--tau", type=int)
        sp.add_argument("--M", type=int, nargs="+")
        sp.add_argument("--ntraj", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--snapshots", type=float, nargs="+")
        sp.add_argument("-o", "--output-dir")

    for name, text in (("analytic", "exact results"), ("simulate", "Monte Carlo ensemble"),
                       ("bursts", "exact burst combinatorics"), ("passage", "first-passage statistics"),
                       ("compare", "simulation versus exact results")):
        common(sub.add_parser(name, help=text))
    return p


def config_from_args(args, check_specs=True) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
        d = cfg.to_dict()
    else:
        d = {"model": args.model or "discrete_uniform", "params": {}, "outputs": []}
    params = d["params"]
    for flag, key in (("mu", "mu"), ("r", "r"), ("lam", "lambda"), ("q", "q"), ("lambda0", "lambda0"),
                      ("multiplier_law", "multiplier_law"), ("reset_law", "reset_law"),
                      ("initial_law", "initial_law")):
        v = getattr(args, flag)
        if v is not None:
            params[key] = v
    if args.alpha is not None:
        params["alpha"] = args.alpha if len(args.alpha) > 1 else args.alpha[0]
    if args.model and args.config:
        d["model"] = args.model
    for flag, key in (("seed", "seed"), ("ntraj", "ntraj"), ("tau", "tau"), ("output_dir", "output_dir")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    if args.t_max is not None:
        d["horizon"] = int(args.t_max) if float(args.t_max).is_integer() else args.t_max
    if args.gamma is not None:
        d["gammas"] = args.gamma
    if args.M is not None:
        d["M"] = args.M
    if args.snapshots is not None:
        d["snapshots"] = [int(s) if float(s).is_integer() else s for s in args.snapshots]
    return RunConfig.from_dict(d, check_specs)


def _out(cfg, name):
    return Path(cfg.output_dir) / name


def _writer(cfg, name, header):
    return CsvWriter(_out(cfg, name), header, cfg.digest(), cfg.seed)


def _exact_stationary(cfg, spec, gamma):
    """Exact rational stationary moment when the inputs allow it."""
    if float(gamma).is_integer() and "mu" in cfg.params and not isinstance(cfg.params.get("r"), list):
        val = an.stationary_moment_exact(cfg.exact_param("mu"), cfg.exact_param("r"), int(gamma))
        return math.inf if val is None else val
    return an.moment(spec, gamma, math.inf).stationary


# --------------------------------------------------------------------------


def cmd_analytic(cfg: RunConfig):
    specs = cfg.build_specs()
    summary = {"config": cfg.to_dict(), "config_sha256": cfg.digest(), "models": []}
    if cfg.model == "discrete_uniform":
        spec = specs[0]
        t_max = int(cfg.horizon if cfg.horizon is not None else 100)
        with _writer(cfg, "moments.csv", ["t", "gamma", "exact_moment", "convergent", "stationary"]) as w:
            for g in cfg.gammas:
                stat = _exact_stationary(cfg, spec, g)
                conv = an.moment(spec, g, math.inf).convergent
                for t in range(t_max + 1):
                    w.row(t, float(g), an.moment(spec, g, t).value, conv, stat)
        with _writer(cfg, "occupation.csv", ["m", "t", "probability", "stationary", "time_average"]) as w:
            for m in range(t_max + 1):
                w.row(m, t_max, an.occupation_probability(spec, m, t_max),
                      an.occupation_probability(spec, m, math.inf), bu.time_average_occupation(m, t_max, spec.r))
        entry = {"mu": spec.mu, "r": spec.r,
                 "stationary_moments": {str(g): float(_exact_stationary(cfg, spec, g)) for g in cfg.gammas},
                 "timescales": {str(g): an.moment(spec, g, math.inf).timescale for g in cfg.gammas}}
        if spec.mu > 1:
            entry["critical_exponent"] = an.critical_exponent(spec.mu, spec.r)
        summary["models"].append(entry)
        if cfg.M or "passage" in cfg.outputs:
            _write_passage(cfg, spec, simulate=False)
    elif cfg.model == "discrete_random":
        t_max = int(cfg.horizon if cfg.horizon is not None else 100)
        with _writer(cfg, "moments.csv", ["r", "t", "gamma", "exact_moment", "convergent", "stationary"]) as w:
            for spec in specs:
                for g in cfg.gammas:
                    lim = an.general_moment(spec, g, math.inf)
                    for t in range(t_max + 1):
                        w.row(spec.r, t, float(g), an.general_moment(spec, g, t).value, lim.convergent, lim.stationary)
        for spec in specs:
            gm, gp = an.convergence_interval(spec.multiplier_law, spec.r)
            summary["models"].append({"r": spec.r, "gamma_minus": gm, "gamma_plus": gp})
        _write_interval(cfg, specs)
        if "stationary" in cfg.outputs:
            lo, hi = cfg.params.get("y_window", [-64.0, 64.0])
            with _writer(cfg, "stationary.csv", ["r", "y", "density"]) as w:
                for spec in specs:
                    grid = an.stationary_log_density_grid(spec, lo, hi, int(cfg.params.get("grid_points", 4096)))
                    for y, dens in zip(grid.y, grid.density):
                        w.row(spec.r, float(y), float(dens))
    elif cfg.model == "continuous_uniform":
        spec = specs[0]
        snaps = cfg.snapshots or [0, 2, 5]
        xs = np.logspace(0, 6, 241)
        for s in snaps:
            with _writer(cfg, f"density_t{snapshot_label(s)}.csv", ["x", "density", "stationary"]) as w:
                for x, f, fi in zip(xs, cn.transient_density(spec, xs, s), cn.stationary_density_uniform(spec, xs)):
                    w.row(float(x), float(f), float(fi))
        summary["models"].append({"lambda": spec.lam, "q": spec.q, "tail_exponent": 1 + spec.exponent})
    else:
        xs = np.logspace(0, 2, 201)
        with _writer(cfg, "stationary.csv", ["alpha", "x", "density"]) as w:
            for spec in specs:
                st = cn.StationaryGeneral(spec)
                for x, f in zip(xs, st(xs)):
                    w.row(spec.family[1], float(x), float(f))
                total, _ = cn.integrate_density(lambda x: float(st(x)))
                summary["models"].append({"lambda0": spec.family[0], "alpha": spec.family[1], "q": spec.family[2],
                                          "normalization": total, "no_leak": st.leak.no_leak,
                                          "leak_method": st.leak.method})
    write_json(_out(cfg, "summary.json"), summary)
    return EXIT_OK


def _write_interval(cfg, specs):
    a_grid = cfg.params.get("a_grid")
    law = specs[0].multiplier_law
    if not a_grid or not isinstance(law, TwoDelta):
        return
    with _writer(cfg, "interval.csv", ["a", "r", "gamma_minus", "gamma_plus",
                                       "gamma_minus_numeric", "gamma_plus_numeric"]) as w:
        for spec in specs:
            for a in a_grid:
                tl = TwoDelta(float(a), law.mu0)
                c = an.convergence_interval(tl, spec.r, "closed")
                n = an.convergence_interval(tl, spec.r, "numeric")
                w.row(float(a), spec.r, c[0], c[1], n[0], n[1])


def _write_passage(cfg, spec, simulate):
    Ms = cfg.M or [1, 5, 10, 20]
    header = ["M", "r", "mean_wait", "mean_draws", "ratio"]
    if simulate:
        header += ["sim_mean_wait", "sim_wait_se", "sim_mean_draws", "sim_draws_se", "sim_ratio"]
    with _writer(cfg, "passage.csv", header) as w:
        for M in Ms:
            st = an.passage_statistics(M, spec.r)
            row = [M, spec.r, st.mean_wait, st.mean_draws, st.ratio]
            if simulate:
                fp = run_first_passage(spec, M, cfg.ntraj, cfg.seed)
                dr = run_iid_draws(spec, M, cfg.ntraj, cfg.seed)
                row += [fp.mean, fp.std_error, dr.mean, dr.std_error, fp.mean / dr.mean if dr.mean else math.inf]
            w.row(*row)


def _write_histograms(cfg, summary, prefix="", exact_cdf=None):
    for t, h in sorted(summary.snapshots.items()):
        header = ["bin_lo", "bin_hi", "count", "density"]
        if exact_cdf is not None:
            header.append("exact_mass")
        with _writer(cfg, f"{prefix}histogram_t{snapshot_label(t)}.csv", header) as w:
            dens = h.density()
            mass = None
            if exact_cdf is not None:
                mass = np.diff(exact_cdf(np.exp(h.edges), t))
            for i in range(h.nbins):
                row = [float(h.edges[i]), float(h.edges[i + 1]), int(h.counts[i]), float(dens[i])]
                if mass is not None:
                    row.append(float(mass[i]))
                w.row(*row)
            tail = [None, None] if exact_cdf is not None else [None]
            w.row("underflow", "", h.underflow, *tail)
            w.row("overflow", "", h.overflow, *tail)


def _prefix(cfg, spec, many):
    """File-name prefix separating the members of a parameter sweep."""
    if not many:
        return ""
    if cfg.model == "state_dependent":
        return f"alpha{spec.family[1]:g}_"
    return f"r{spec.r:g}_"


def _simulate_discrete(cfg, spec, prefix, workers):
    t_max = int(cfg.horizon if cfg.horizon is not None else 50)
    snaps = [int(s) for s in cfg.snapshots] or [t_max]
    summary = run_discrete(spec, t_max, cfg.ntraj, snaps, cfg.gammas, cfg.seed, workers=workers)
    uniform = isinstance(spec, an.DiscreteUniformSpec)
    exact = an.moment if uniform else an.general_moment
    _write_histograms(cfg, summary, prefix)
    with _writer(cfg, f"{prefix}moments.csv", ["t", "gamma", "empirical_moment", "std_error", "exact_moment"]) as w:
        for em in summary.moments:
            for t, v, se in zip(em.times, em.values, em.std_errors):
                w.row(t, em.gamma, v, se, exact(spec, em.gamma, t).value)
    with _writer(cfg, f"{prefix}cumulative.csv", ["t", "empirical_mean", "exact_mean"]) as w:
        for t, v in zip(summary.cumulative["times"], summary.cumulative["values"]):
            w.row(t, v, an.cumulative_average_mean(spec, t) if uniform else None)
    if uniform and "paths" in cfg.outputs:
        paths = sample_paths(spec, t_max, int(cfg.params.get("n_paths", 1)), cfg.seed)
        with _writer(cfg, f"{prefix}paths.csv", ["t"] + [f"x_{i}" for i in range(paths.shape[1])]) as w:
            for t, row in enumerate(paths):
                w.row(t, *[float(math.exp(m * spec.log_mu)) for m in row])
    return summary


def _simulate_continuous(cfg, spec, prefix, workers):
    T = float(cfg.horizon if cfg.horizon is not None else 5.0)
    snaps = cfg.snapshots or [T]
    summary = run_continuous(spec, T, cfg.ntraj, snaps, cfg.gammas, cfg.seed, workers=workers)
    if isinstance(spec, cn.ContinuousUniformSpec):
        cdf = lambda x, t: cn.transient_cdf(spec, x, t)
    else:
        st = cn.StationaryGeneral(spec)
        cdf = lambda x, t: st.cdf(x)
    _write_histograms(cfg, summary, prefix, cdf)
    return summary


def cmd_simulate(cfg: RunConfig):
    specs = cfg.build_specs()
    workers = default_workers()
    discrete = cfg.model in ("discrete_uniform", "discrete_random")
    ensembles = []
    for spec in specs:
        prefix = _prefix(cfg, spec, len(specs) > 1)
        run = _simulate_discrete if discrete else _simulate_continuous
        ensembles.append(run(cfg, spec, prefix, workers).to_dict(include_runtime=True))
    if cfg.model == "discrete_uniform" and cfg.M:
        _write_passage(cfg, specs[0], simulate=True)
    write_json(_out(cfg, "summary.json"), {"config": cfg.to_dict(), "config_sha256": cfg.digest(),
                                           "ensembles": ensembles})
    return EXIT_OK


def _check_burst_args(cfg):
    if "r" not in cfg.params:
        raise ConfigError("params.r", "missing")
    try:
        r = cfg.exact_param("r")
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError("params.r", f"not a number: {cfg.params['r']!r}") from None
    if not 0 < r < 1:
        raise ConfigError("params.r", f"must lie in (0, 1), got {cfg.params['r']}")
    if cfg.tau is None and cfg.horizon is None:
        raise ConfigError("tau", "missing")


def cmd_bursts(cfg: RunConfig):
    tau = cfg.tau if cfg.tau is not None else int(cfg.horizon or 10)
    r = cfg.exact_param("r")
    with _writer(cfg, "bursts.csv", ["k", "probability", "numerator", "denominator"]) as w:
        for k in range(1, tau + 2):
            p = bu.burst_count_pmf(tau, k, r, exact=True)
            w.row(k, float(p), p.numerator, p.denominator)
    with _writer(cfg, "burst_table.csv", ["tau", "k", "m", "K", "M"]) as w:
        for k in range(1, tau + 2):
            for m in range(tau + 1):
                w.row(tau, k, m, bu.burst_duration_count(tau, k, m), bu.visit_count(tau, k, m))
    with _writer(cfg, "time_average.csv", ["m", "probability", "numerator", "denominator"]) as w:
        for m in range(tau + 1):
            p = bu.time_average_occupation(m, tau, r, exact=True)
            w.row(m, float(p), p.numerator, p.denominator)
    return EXIT_OK


def cmd_passage(cfg: RunConfig):
    spec = cfg.build_specs()[0]
    if not isinstance(spec, an.DiscreteUniformSpec):
        raise ConfigError("model", "passage needs the discrete_uniform model")
    _write_passage(cfg, spec, simulate=cfg.ntraj > 0)
    return EXIT_OK


def cmd_compare(cfg: RunConfig):
    summaries, checks = run_compare(cfg, workers=default_workers())
    with _writer(cfg, "compare.csv", ["quantity", "key", "simulated", "exact", "deviation", "tolerance", "status"]) as w:
        for c in checks:
            status = "info" if c.passed is None else ("pass" if c.passed else "fail")
            w.row(c.quantity, c.key, c.simulated, c.exact, c.deviation, c.tolerance, status)
    failed = [c for c in checks if c.passed is False]
    write_json(_out(cfg, "summary.json"), {
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "passed": not failed,
        "checks": [c.__dict__ for c in checks],
        "ensembles": [s.to_dict(include_runtime=True) for s in summaries if s is not None],
    })
    for c in checks:
        status = "info" if c.passed is None else ("PASS" if c.passed else "FAIL")
        print(f"{status:4s} {c.quantity:20s} {c.key:24s} sim={fmt(c.simulated)} exact={fmt(c.exact)} "
              f"tol={fmt(c.tolerance)}")
    return EXIT_TOLERANCE if failed else EXIT_OK


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate, "bursts": cmd_bursts,
            "passage": cmd_passage, "compare": cmd_compare}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        # burst combinatorics depend on r alone, so no full model is required
        cfg = config_from_args(args, check_specs=args.command != "bursts")
        if args.command == "bursts":
            _check_burst_args(cfg)
        log.info("config %s (workers=%d)", cfg.digest()[:12], default_workers())
        return COMMANDS[args.command](cfg)
    except (ConfigError, LawError, an.DomainError) as exc:
        print(f"smp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
