"""Command-line front end: simulate, fit, test, mc.

Exit codes: 0 ok, 1 I/O failure, 2 invalid input, 3 statistical procedure error.

Settings can come from a UTF-8 ``key = value`` file with one ``[section]``
per subcommand (``[simulate]``, ``[fit]``, ``[test]``, ``[mc]``); keys are
the long option names without dashes. Explicit flags override the file.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from localgc import __version__
from localgc.causality import Partition, gc_value
from localgc.errors import (
    DimensionError,
    DomainError,
    EmptyFile,
    LocalGCError,
    ParseError,
    RaggedRows,
    ZeroGradient,
)
from localgc.infer import (
    LEVELS,
    MULTIPLIERS,
    asymptotic_variance,
    chisq_sf,
    curvature_H,
    stat_dagger,
    stat_tilde_dagger,
    stat_wald,
    wald_inputs,
)
from localgc.mcharness import (
    SWEEP_U,
    TABLE_U,
    ExperimentConfig,
    default_threads,
    ordered_map,
    run_calibration,
    run_size_power,
    run_sweep,
)
from localgc.procsim import format_float, load_csv, model_spec, save_csv, simulate_tvvar
from localgc.spectra import FreqGrid, VarParams, default_grid
from localgc.whittle import KERNEL_KINDS, KernelSpec, default_bandwidth, local_whittle_fit

SCHEMA_VERSION = 1
EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_STAT = 0, 1, 2, 3

logger = logging.getLogger("localgc")


class UsageError(Exception):
    """Invalid option values detected after parsing."""


# ---------------------------------------------------------------------------
# option types (each enforces its domain before any computation)


def _typed(convert, check, message):
    def parse(text):
        try:
            value = convert(text)
        except (TypeError, ValueError):
            raise argparse.ArgumentTypeError(f"{message}, got {text!r}") from None
        if not check(value):
            raise argparse.ArgumentTypeError(f"{message}, got {text!r}")
        return value
    parse.__name__ = message
    return parse


length_T = _typed(int, lambda v: v >= 2, "T must be ≥ 2")
mc_length = _typed(int, lambda v: v >= 4, "T must be ≥ 4")
replicates = _typed(int, lambda v: v >= 1, "R must be ≥ 1")
nonneg_int = _typed(int, lambda v: v >= 0, "value must be an integer ≥ 0")
pos_int = _typed(int, lambda v: v >= 1, "value must be an integer ≥ 1")
seed_int = _typed(int, lambda v: 0 <= v < 2 ** 63, "seed must be an integer in [0, 2^63)")
grid_int = _typed(int, lambda v: v >= 2 and v % 2 == 0, "grid size must be an even integer ≥ 2")
bandwidth = _typed(float, lambda v: 0.0 < v <= 1.0, "bandwidth must lie in (0, 1]")
nonneg_float = _typed(float, lambda v: math.isfinite(v) and v >= 0.0, "c must be a finite number ≥ 0")


def _float_list(check, message):
    def parse(text):
        try:
            values = tuple(float(tok) for tok in str(text).split(",") if tok.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"{message}, got {text!r}") from None
        if not values or not all(check(v) for v in values):
            raise argparse.ArgumentTypeError(f"{message}, got {text!r}")
        return values
    parse.__name__ = message
    return parse


u_list = _float_list(lambda v: 0.0 < v < 1.0, "every u must lie in (0, 1)")
level_list = _float_list(lambda v: 0.0 < v < 1.0, "every level must lie in (0, 1)")


def u_range(text):
    """``start:stop:step`` inclusive of ``stop`` (within step/2)."""
    try:
        start, stop, step = (float(t) for t in str(text).split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"u-range must be start:stop:step, got {text!r}") from None
    if not (0.0 < start <= stop < 1.0) or step <= 0.0:
        raise argparse.ArgumentTypeError(f"u-range needs 0 < start <= stop < 1 and step > 0, got {text!r}")
    n = int(math.floor((stop - start) / step + 0.5)) + 1
    return tuple(round(start + k * step, 12) for k in range(n))


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", metavar="FILE",
                   help="settings file (key = value lines under [section] headers); flags override it")
    p.add_argument("--threads", type=pos_int, metavar="N",
                   help="worker processes, integer ≥ 1 (default: $LGC_THREADS, else logical cores)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress details to standard error")


def _add_estimation(p):
    p.add_argument("--kernel", choices=KERNEL_KINDS, default="epanechnikov",
                   help="smoothing kernel on [-1, 1], one of %(choices)s (default: %(default)s)")
    p.add_argument("--bandwidth", type=bandwidth, metavar="B",
                   help="kernel bandwidth b_T in (0, 1] (default: 4 T^(-2/3))")
    p.add_argument("--grid-size", type=grid_int, metavar="N",
                   help="frequency grid size, even integer ≥ 2 (default: max(512, 4T))")


def _add_u(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--u", type=u_list, metavar="U[,U...]",
                   help="comma-separated rescaled times, each in (0, 1) (default: 0.5)")
    g.add_argument("--u-range", type=u_range, metavar="START:STOP:STEP",
                   help="evenly spaced rescaled times, 0 < START <= STOP < 1, STEP > 0")


def _add_plots(p):
    p.add_argument("--emit-plot-data", metavar="FILE",
                   help="also write tidy long-format CSV with columns u, series, value")
    p.add_argument("--plot", action="store_true",
                   help="also render PNG figures next to the output file (flag, no value)")


FIT_HELP = """\
Output columns, in order: u, a11..app (row-major), s11..spp (upper triangle),
objective, converged, iterations, gc, then v_<name> for each parameter when
--variance is given, and error (empty unless that u failed)."""

TEST_HELP = """\
Output columns, in order: u, statistic_kind, statistic, reference, df,
p_value, reject_0.01, reject_0.05, reject_0.1, reject_0.15, gc, error."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localgc",
        description="Local Granger causality for time-varying VAR(1) panels.",
        epilog="Exit codes: 0 ok, 1 I/O failure, 2 invalid input, 3 statistical procedure error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", help="simulate a bivariate time-varying VAR(1) panel",
                       description="Simulate a panel and write it as CSV. Prints a one-line JSON summary.")
    _add_common(p)
    p.add_argument("--model", choices=("i", "ii", "power", "null"), default="i",
                   help="coefficient path, one of %(choices)s (default: %(default)s)")
    p.add_argument("--T", type=length_T, default=100, metavar="T",
                   help="number of observations, integer ≥ 2 (default: %(default)s)")
    p.add_argument("--seed", type=seed_int, default=1, help="RNG seed, integer in [0, 2^63) (default: %(default)s)")
    p.add_argument("--replicate", type=nonneg_int, default=0,
                   help="replicate index selecting an independent stream, integer ≥ 0 (default: %(default)s)")
    p.add_argument("--burn-in", type=nonneg_int, default=0,
                   help="discarded pre-sample steps at A(0), integer ≥ 0 (default: %(default)s)")
    p.add_argument("--out", metavar="FILE", help="output CSV path (required)")

    p = sub.add_parser("fit", help="local Whittle fits across rescaled times",
                       description="Fit the local VAR(1) spectrum at each u and report GC.",
                       epilog=FIT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--input", metavar="FILE", help="panel CSV (rows are observations; required)")
    _add_u(p)
    _add_estimation(p)
    p.add_argument("--warm-start", action="store_true",
                   help="start each fit from the previous u's estimate (flag, no value)")
    p.add_argument("--variance", action="store_true",
                   help="append the diagonal of the plug-in asymptotic covariance (flag, no value)")
    p.add_argument("--out", default="-", metavar="FILE", help="output CSV path, '-' for standard output (default)")
    _add_plots(p)

    p = sub.add_parser("test", help="test local non-causality at each u",
                       description="Compute S~dagger, S-dagger or the Wald statistic at each u.",
                       epilog=TEST_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--input", metavar="FILE", help="panel CSV (rows are observations; required)")
    _add_u(p)
    _add_estimation(p)
    p.add_argument("--stat", choices=("tilde", "dagger", "wald"), default="tilde",
                   help="statistic, one of %(choices)s (default: %(default)s)")
    p.add_argument("--c", type=nonneg_float, default=0.0,
                   help="null value of GC, real ≥ 0; the Wald statistic needs c > 0 (default: %(default)s)")
    p.add_argument("--auto-stat", action="store_true",
                   help="fall back from wald to tilde when the GC gradient vanishes (flag, no value)")
    p.add_argument("--multiplier", choices=MULTIPLIERS, default="corrected",
                   help="scaling of the tilde statistic, one of %(choices)s (default: %(default)s)")
    p.add_argument("--wald-df", type=pos_int, metavar="DF",
                   help="degrees of freedom of the Wald reference, integer ≥ 1 (default: parameter count)")
    p.add_argument("--draws", type=pos_int, default=100_000,
                   help="quadratic-form draws for the dagger p-value, integer ≥ 1 (default: %(default)s)")
    p.add_argument("--seed", type=seed_int, default=0,
                   help="seed of the quadratic-form sampler, integer in [0, 2^63) (default: %(default)s)")
    p.add_argument("--out", default="-", metavar="FILE", help="output CSV path, '-' for standard output (default)")
    _add_plots(p)

    p = sub.add_parser("mc", help="Monte Carlo experiments",
                       description="Run a size/power table, an estimator sweep or a null calibration.")
    _add_common(p)
    p.add_argument("--experiment", choices=("table1", "sweep", "calibration"), default="table1",
                   help="experiment, one of %(choices)s (default: %(default)s)")
    p.add_argument("--model", choices=("i", "ii", "power", "null"),
                   help="model, one of %(choices)s (default: power for table1, i for sweep, null for calibration)")
    p.add_argument("--T", type=mc_length, metavar="T",
                   help="sample size, integer ≥ 4 (default: 512 table1, 100 sweep, 2000 calibration)")
    p.add_argument("--R", type=replicates, default=100, metavar="R",
                   help="replicates, integer ≥ 1 (default: %(default)s)")
    p.add_argument("--seed", type=seed_int, default=1, help="RNG seed, integer in [0, 2^63) (default: %(default)s)")
    _add_u(p)
    p.add_argument("--levels", type=level_list, default=LEVELS, metavar="A[,A...]",
                   help="significance levels, each in (0, 1) (default: 0.01,0.05,0.1,0.15)")
    _add_estimation(p)
    p.add_argument("--multiplier", choices=MULTIPLIERS, default="corrected",
                   help="scaling of the tilde statistic, one of %(choices)s (default: %(default)s)")
    p.add_argument("--out", metavar="PREFIX",
                   help="output prefix; writes PREFIX.csv and PREFIX.json (required)")
    _add_plots(p)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


# enforced after the config overlay so the file can supply them
REQUIRED = {"simulate": ("out",), "fit": ("input",), "test": ("input",), "mc": ("out",)}


def _check_required(args):
    missing = [f"--{k.replace('_', '-')}" for k in REQUIRED[args.command] if getattr(args, k) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): {', '.join(missing)}")
    return args


def _apply_config(parser, argv):
    """Re-parse with values from ``--config`` installed as defaults."""
    args = parser.parse_args(argv)
    if not args.config:
        return _check_required(args)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(args.config, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {args.config}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config {args.config}: {exc}") from None
    sp = _subparser(parser, args.command)
    by_key = {}
    for action in sp._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_key[opt[2:]] = action
                by_key[opt[2:].replace("-", "_")] = action
    if not cp.has_section(args.command):
        return _check_required(args)
    defaults = {}
    for key, text in cp.items(args.command):
        action = by_key.get(key)
        if action is None or action.dest in ("config", "help"):
            raise UsageError(f"unknown key {key!r} in [{args.command}] of {args.config}")
        if isinstance(action, argparse._StoreTrueAction):
            try:
                defaults[action.dest] = cp.getboolean(args.command, key)
            except ValueError:
                raise UsageError(f"{key} must be a boolean, got {text!r}") from None
        else:
            if action.choices is not None and text not in action.choices:
                raise UsageError(f"{key} must be one of {sorted(action.choices)}, got {text!r}")
            defaults[action.dest] = text
    sp.set_defaults(**defaults)
    return _check_required(parser.parse_args(argv))


# ---------------------------------------------------------------------------
# output helpers


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, allow_nan=False)


def _write_rows(path, header, rows):
    if path == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows([_cell(v) for v in row] for row in rows)
        sys.stdout.flush()
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([_cell(v) for v in row] for row in rows)


def _write_plot_data(path, triples):
    _write_rows(path, ["u", "series", "value"], triples)


def _figure_path(out, suffix):
    if out == "-":
        return Path(f"localgc_{suffix}.png")
    base = Path(out)
    return base.with_name(f"{base.stem if base.suffix else base.name}_{suffix}.png")


def _progress_printer(label):
    state = {"next": 0}

    def report(done, total):
        pct = 100 * done // total
        if pct >= state["next"] or done == total:
            print(f"{label}: {done}/{total} ({pct}%)", file=sys.stderr, flush=True)
            state["next"] = (pct // 5 + 1) * 5
    return report


def _resolve_threads(args):
    return args.threads if args.threads else default_threads()


def _estimation_setup(args, T):
    b = args.bandwidth if args.bandwidth is not None else default_bandwidth(T)
    kernel = KernelSpec(args.kernel, b)
    grid = FreqGrid(args.grid_size) if args.grid_size else default_grid(T)
    return kernel, grid


def _u_values(args, default=(0.5,)):
    if getattr(args, "u_range", None):
        return args.u_range
    return args.u or default


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    spec = model_spec(args.model, seed=args.seed, burn_in=args.burn_in)
    panel = simulate_tvvar(spec, args.T, replicate=args.replicate)
    save_csv(panel, args.out)
    print(_dump_json({
        "schema_version": SCHEMA_VERSION, "command": "simulate", "model": args.model,
        "T": panel.length, "p": panel.dim, "seed": args.seed, "replicate": args.replicate,
        "burn_in": args.burn_in, "out": args.out,
    }))
    return EXIT_OK


def _safe_fit(job):
    panel, u, kernel, grid, init = job
    try:
        return local_whittle_fit(panel, u, kernel, grid, init=init)
    except LocalGCError as exc:
        return exc


def _fit_row(fit, part, grid, kernel, want_variance):
    gc = gc_value(fit.theta_hat, part, grid)
    row = [fit.at_u, *fit.theta_hat.theta.tolist(), fit.objective, fit.converged, fit.iterations, gc]
    if want_variance:
        v = asymptotic_variance(fit.theta_hat, kernel, grid)
        row += np.diag(v).tolist()
    return row + [""]


def cmd_fit(args) -> int:
    panel = load_csv(args.input)
    panel.check_estimable()
    p = panel.dim
    if p < 2:
        raise DimensionError("GC needs at least two channels")
    part = Partition(1, p - 1)
    kernel, grid = _estimation_setup(args, panel.length)
    us = _u_values(args)
    names = VarParams.theta_names(p)
    header = ["u", *names, "objective", "converged", "iterations", "gc"]
    if args.variance:
        header += [f"v_{n}" for n in names]
    header.append("error")
    width = len(header)

    fits = []
    if args.warm_start:
        init = None
        for u in us:
            try:
                fit = local_whittle_fit(panel, u, kernel, grid, init=init)
                init = fit.theta_hat if fit.converged else init
                fits.append(fit)
            except LocalGCError as exc:
                fits.append(exc)
    else:
        jobs = [(panel, u, kernel, grid, None) for u in us]
        fits = ordered_map(_safe_fit, jobs, _resolve_threads(args))

    rows, triples = [], []
    for u, fit in zip(us, fits):
        if isinstance(fit, Exception):
            rows.append([u] + [float("nan")] * (width - 2) + [f"{type(fit).__name__}: {fit}"])
            continue
        try:
            row = _fit_row(fit, part, grid, kernel, args.variance)
        except LocalGCError as exc:
            row = [u] + [float("nan")] * (width - 2) + [f"{type(exc).__name__}: {exc}"]
        rows.append(row)
        triples.append([u, "gc", row[len(names) + 4]])
    _write_rows(args.out, header, rows)
    if args.emit_plot_data:
        _write_plot_data(args.emit_plot_data, triples)
    if args.plot and triples:
        from localgc.plotting import plot_gc_curve
        plot_gc_curve([t[0] for t in triples], [t[2] for t in triples], _figure_path(args.out, "gc"))
    return EXIT_OK


def _run_test(args, fit, kernel, grid, T, part, levels):
    stat = args.stat
    if stat == "wald":
        grad, V = wald_inputs(fit, kernel, grid, part)
        try:
            return stat_wald(fit, args.c, grad, V, T, kernel, grid, part, df=args.wald_df, levels=levels)
        except ZeroGradient as exc:
            if not args.auto_stat:
                raise
            print(f"advisory: u={fit.at_u:g}: {exc}; switching to the tilde statistic",
                  file=sys.stderr)
            stat = "tilde"
    if stat == "tilde":
        return stat_tilde_dagger(fit, kernel, T, grid, c=args.c, part=part,
                                 multiplier=args.multiplier, levels=levels)
    V = asymptotic_variance(fit.theta_hat, kernel, grid)
    H = curvature_H(fit.theta_hat, part, grid)
    return stat_dagger(fit, kernel, T, grid, V, H, part, n_draws=args.draws,
                       rng=np.random.default_rng(args.seed), levels=levels)


def cmd_test(args) -> int:
    if args.stat == "wald" and not args.c > 0.0:
        raise UsageError("the Wald statistic needs --c > 0")
    panel = load_csv(args.input)
    panel.check_estimable()
    if args.stat == "tilde" and panel.dim != 2:
        raise DimensionError(f"the tilde statistic needs a bivariate panel, got p = {panel.dim}")
    part = Partition(1, panel.dim - 1)
    kernel, grid = _estimation_setup(args, panel.length)
    levels = LEVELS
    header = ["u", "statistic_kind", "statistic", "reference", "df", "p_value",
              *[f"reject_{lvl:g}" for lvl in levels], "gc", "error"]
    rows, triples = [], []
    for u in _u_values(args):
        try:
            fit = local_whittle_fit(panel, u, kernel, grid)
            res = _run_test(args, fit, kernel, grid, panel.length, part, levels)
        except (ZeroGradient, DimensionError, DomainError):
            raise
        except LocalGCError as exc:
            rows.append([u, "", float("nan"), "", "", float("nan"), *[""] * len(levels),
                         float("nan"), f"{type(exc).__name__}: {exc}"])
            continue
        rows.append([u, res.statistic_kind, res.statistic, res.reference, res.df, res.p_value,
                     *[res.reject_at[lvl] for lvl in levels], res.gc, ""])
        triples += [[u, "statistic", res.statistic], [u, "p_value", res.p_value]]
    _write_rows(args.out, header, rows)
    if args.emit_plot_data:
        _write_plot_data(args.emit_plot_data, triples)
    if args.plot and triples:
        from localgc.plotting import plot_gc_curve
        stats = [t for t in triples if t[1] == "statistic"]
        plot_gc_curve([t[0] for t in stats], [t[2] for t in stats], _figure_path(args.out, "statistic"),
                      label="statistic")
    return EXIT_OK


MC_DEFAULTS = {
    "table1": ("power", 512, TABLE_U),
    "sweep": ("i", 100, SWEEP_U),
    "calibration": ("null", 2000, (0.5,)),
}


def cmd_mc(args) -> int:
    model, T, us = MC_DEFAULTS[args.experiment]
    model = args.model or model
    T = args.T or T
    us = _u_values(args, default=us)
    if args.experiment == "calibration" and model != "null":
        raise UsageError("the calibration experiment runs under --model null")
    cfg = ExperimentConfig(
        model=model, T=T, replicates=args.R, u_list=us, levels=args.levels,
        kernel_kind=args.kernel, bandwidth=args.bandwidth, grid_size=args.grid_size,
        seed=args.seed, multiplier=args.multiplier, threads=_resolve_threads(args),
    )
    progress = _progress_printer(f"mc {args.experiment}")
    meta = {
        "schema_version": SCHEMA_VERSION, "command": "mc", "experiment": args.experiment,
        "model": model, "T": T, "R": args.R, "seed": args.seed, "u": list(cfg.u_list),
        "levels": list(cfg.levels), "kernel": cfg.kernel.kind, "bandwidth": cfg.kernel.bandwidth,
        "grid_size": cfg.grid.count, "multiplier": cfg.multiplier,
    }
    out = args.out
    csv_path, json_path = f"{out}.csv", f"{out}.json"
    triples = []

    if args.experiment == "table1":
        tab = run_size_power(cfg, progress)
        header = ["level", *[f"u={u:g}" for u in tab.u]]
        _write_rows(csv_path, header, [[lvl, *tab.rates[k].tolist()] for k, lvl in enumerate(tab.levels)])
        meta.update(rates=tab.rates, se=tab.se, not_converged=tab.not_converged, redraws=tab.redraws)
        for k, lvl in enumerate(tab.levels):
            triples += [[u, f"alpha={lvl:g}", r] for u, r in zip(tab.u, tab.rates[k])]
        if args.plot:
            from localgc.plotting import plot_size_power
            plot_size_power(tab, _figure_path(csv_path, "size_power"))
    elif args.experiment == "sweep":
        res = run_sweep(cfg, progress)
        rows = res.to_rows()
        header = ["u", "truth", "mean", "p5", "p95", "mae"]
        _write_rows(csv_path, header, [[r[h] for h in header] for r in rows])
        meta.update(rows=rows, not_converged=res.not_converged, redraws=res.redraws)
        for r in rows:
            triples += [[r["u"], s, r[s]] for s in ("truth", "mean", "p5", "p95")]
        if args.plot:
            from localgc.plotting import plot_sweep
            plot_sweep(res, _figure_path(csv_path, "sweep"))
    else:
        res = run_calibration(cfg, progress)
        _write_rows(csv_path, ["replicate", "statistic", "p_value"],
                    [[i, s, chisq_sf(s, 1)] for i, s in enumerate(res.statistics.tolist())])
        meta.update(ks_distance=res.ks_distance, frac_p_below_01=res.frac_p_below_01,
                    mean_statistic=float(np.mean(res.statistics)),
                    not_converged=res.not_converged, redraws=res.redraws)
        triples = [[cfg.u_list[0], "statistic", s] for s in res.statistics.tolist()]
        if args.plot:
            from localgc.plotting import plot_calibration
            plot_calibration(res.statistics, _figure_path(csv_path, "calibration"))

    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_json(meta) + "\n")
    if args.emit_plot_data:
        _write_plot_data(args.emit_plot_data, triples)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "test": cmd_test, "mc": cmd_mc}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for bad options
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"localgc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"localgc: error: {exc}", file=sys.stderr)
        return EXIT_IO

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"localgc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ParseError, RaggedRows, EmptyFile, DomainError, DimensionError) as exc:
        print(f"localgc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"localgc: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LocalGCError as exc:
        print(f"localgc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAT


if __name__ == "__main__":
    sys.exit(main())
