"""Command-line front end.

Usage
-----
::

    activesense run CONFIG [--algo both] [--T 400] [--p 2] [--reps 10] [--seed S] [--out-dir out]
    activesense sweep-snr CONFIG --snrs "0,-10,-20" [same options as run]
    activesense plot CSV [CSV ...] --out figure.svg [--kind gamma|spectrum]

Scenario config
---------------
A JSON object with the keys

``M`` (int, required)
    Number of antennas.
``theta_max_deg`` (float, default 90)
    Half-width of the scanned angular range; ``u = sin(theta) / sin(theta_max)``.
``segments`` (list of ``[theta_lo_deg, theta_hi_deg, level]``, default ``[]``)
    Uniform-power angular clusters; ``level`` is power per unit of ``u``.
``point_masses`` (list of ``[theta_deg, variance]``, default ``[]``)
    Discrete paths.
``snr_db`` (float or null, default null)
    When set, all levels are rescaled so that signal power over ``noise_var``
    matches this value.
``noise_var`` (float, default 1)
    Receiver noise variance.
``seed`` (int, default 0)
    Base seed; repetition ``i`` uses ``seed + i``. ``--seed`` overrides it.

Unknown keys are rejected. A run manifest written by ``run`` is also
accepted as CONFIG: its resolved config and run options become the
defaults, so re-running it reproduces every output byte for byte.

Outputs
-------
For each run, under ``--out-dir`` with ``TAG = {snr}db`` (``native`` when
``snr_db`` is null) and ``SEED`` the base seed:

``{algo}_{TAG}_{SEED}.csv``
    One row per repetition and snapshot:
    ``algorithm,rep,seed,t,beam,r,gamma``.
``summary_{TAG}_{SEED}.csv``
    Per-snapshot mean and population std of Gamma:
    ``t,mean_adaptive,std_adaptive,mean_exhaustive,std_exhaustive`` (columns
    of algorithms that were not run are omitted).
``spectrum_{TAG}_{SEED}.csv``
    Eigenvalues of the true covariance: ``index,eigenvalue,signal_eigenvalue``.
``manifest_{TAG}_{SEED}.json``
    Resolved config, run options, seeds, config hash and output files.

``sweep-snr`` writes the above for every SNR plus ``sweep_{SEED}.csv``
(``snr_db`` prepended to the summary columns) and ``sweep_manifest_{SEED}.json``.

Exit status is 0 on success, 2 for usage or config errors and 1 for
runtime failures.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .channel import ScenarioConfig, covariance_from_config
from .experiments import AdaptiveOptions, config_fingerprint, run_many
from .svgplot import line_chart

log = logging.getLogger("activesense")

ALGOS = ("adaptive", "exhaustive")
TRACE_HEADER = ("algorithm", "rep", "seed", "t", "beam", "r", "gamma")
SPECTRUM_HEADER = ("index", "eigenvalue", "signal_eigenvalue")
RUN_DEFAULTS = {"algo": "both", "T": 400, "p": 2, "reps": 10, "fim_refresh": 10,
                "restarts": 3, "feasible": "exact"}


class UsageError(Exception):
    """Bad input from the command line or a config file (exit status 2)."""


def _num(x):
    return repr(float(x))


def _write_text(path, text):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# config handling
# --------------------------------------------------------------------------

def load_config(path):
    """Read a scenario config or run manifest; returns ``(cfg, run_defaults)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"{path}: cannot read config ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    run = {}
    if isinstance(raw, dict) and "config" in raw and "run" in raw:
        run = dict(raw["run"])
        raw = raw["config"]
    try:
        cfg = ScenarioConfig.from_dict(raw)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    return cfg, run


def _resolve(args, run_defaults):
    opts = dict(RUN_DEFAULTS)
    opts.update({k: v for k, v in run_defaults.items() if k in RUN_DEFAULTS})
    for key in RUN_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return opts


def _validate(cfg, opts):
    M = cfg.M
    if opts["algo"] not in ("adaptive", "exhaustive", "both"):
        raise UsageError(f"--algo: expected adaptive, exhaustive or both, got {opts['algo']!r}")
    if opts["feasible"] not in ("exact", "grid", "embed"):
        raise UsageError(f"--feasible: expected exact, grid or embed, got {opts['feasible']!r}")
    if not 1 <= opts["p"] <= M:
        raise UsageError(f"--p: must lie in [1, M] = [1, {M}], got {opts['p']}")
    if opts["reps"] < 1:
        raise UsageError(f"--reps: must be at least 1, got {opts['reps']}")
    if opts["fim_refresh"] < 1:
        raise UsageError(f"--fim-refresh: must be at least 1, got {opts['fim_refresh']}")
    if opts["restarts"] < 1:
        raise UsageError(f"--restarts: must be at least 1, got {opts['restarts']}")
    if opts["algo"] != "exhaustive" and opts["T"] < 2 * M - 1:
        raise UsageError(
            f"--T: the adaptive algorithm spends its first 2M - 1 = {2 * M - 1} snapshots "
            f"on random beams, so T must be at least {2 * M - 1} for M = {M}; got {opts['T']}")
    if opts["T"] < 1:
        raise UsageError(f"--T: must be positive, got {opts['T']}")


def _snr_tag(cfg):
    return "native" if cfg.snr_db is None else f"{cfg.snr_db:g}db"


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------

def _summary_columns(algos, traces):
    cols = {}
    for algo in algos:
        G = np.array([tr.gamma for tr in traces[algo]])
        cols[f"mean_{algo}"] = G.mean(axis=0)
        cols[f"std_{algo}"] = G.std(axis=0)
    return cols


def _execute(cfg, opts, seed, out_dir, workers):
    """Run one scenario; returns the list of written files and summary columns."""
    algos = ALGOS if opts["algo"] == "both" else (opts["algo"],)
    seeds = [seed + i for i in range(opts["reps"])]
    options = AdaptiveOptions(fim_refresh=opts["fim_refresh"], restarts=opts["restarts"],
                              feasible=opts["feasible"])
    tasks = [(algo, cfg, opts["T"], opts["p"], s, options if algo == "adaptive" else None)
             for algo in algos for s in seeds]
    results = run_many(tasks, workers)
    traces = {algo: results[i * len(seeds):(i + 1) * len(seeds)] for i, algo in enumerate(algos)}

    tag = _snr_tag(cfg)
    written = []
    for algo in algos:
        rows = []
        for rep, tr in enumerate(traces[algo]):
            for t, beam, r, g in zip(tr.t, tr.beam, tr.r, tr.gamma):
                rows.append((algo, rep, tr.seed, t, beam, _num(r), _num(g)))
        name = f"{algo}_{tag}_{seed}.csv"
        _write_text(os.path.join(out_dir, name), _csv_text(TRACE_HEADER, rows))
        written.append(name)

    cols = _summary_columns(algos, traces)
    t_axis = np.arange(1, opts["T"] + 1)
    header = ("t",) + tuple(cols)
    summary = [(int(t),) + tuple(_num(cols[c][i]) for c in cols) for i, t in enumerate(t_axis)]
    name = f"summary_{tag}_{seed}.csv"
    _write_text(os.path.join(out_dir, name), _csv_text(header, summary))
    written.append(name)

    cov = covariance_from_config(cfg)
    vals = np.linalg.eigvalsh(cov.C)[::-1]
    rows = [(i + 1, _num(v), _num(v - cfg.noise_var)) for i, v in enumerate(vals)]
    name = f"spectrum_{tag}_{seed}.csv"
    _write_text(os.path.join(out_dir, name), _csv_text(SPECTRUM_HEADER, rows))
    written.append(name)

    warn = {algo: sum(tr.warnings for tr in traces[algo]) for algo in algos}
    manifest = {
        "package_version": __version__,
        "config": cfg.to_dict(),
        "config_hash": config_fingerprint(cfg),
        "run": {**opts, "seed": seed},
        "seeds": seeds,
        "outputs": written,
        "solver_warnings": warn,
    }
    name = f"manifest_{tag}_{seed}.json"
    _write_text(os.path.join(out_dir, name), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(name)
    for algo in algos:
        log.info("%s: mean Gamma at t=%d is %.4f", algo, opts["T"], cols[f"mean_{algo}"][-1])
    return written, header, summary


def _prepare(args):
    cfg, run_defaults = load_config(args.config)
    opts = _resolve(args, run_defaults)
    if args.seed is not None:
        seed = args.seed
    elif "seed" in run_defaults:
        seed = int(run_defaults["seed"])
    else:
        seed = cfg.seed
    if seed < 0:
        raise UsageError(f"--seed: must be nonnegative, got {seed}")
    out_dir = args.out_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"--out-dir: cannot create {out_dir} ({exc.strerror})") from None
    if not os.access(out_dir, os.W_OK):
        raise UsageError(f"--out-dir: {out_dir} is not writable")
    return cfg, opts, seed, out_dir


def cmd_run(args):
    cfg, opts, seed, out_dir = _prepare(args)
    _validate(cfg, opts)
    written, _, _ = _execute(cfg, opts, seed, out_dir, args.workers)
    for name in written:
        print(os.path.join(out_dir, name))
    return 0


def parse_snrs(text):
    parts = [p.strip() for p in (text or "").split(",") if p.strip()]
    if not parts:
        raise UsageError("--snrs: expected a comma-separated list of SNR values in dB, got none")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"--snrs: not a number list: {text!r}") from None


def cmd_sweep_snr(args):
    snrs = parse_snrs(args.snrs)
    cfg, opts, seed, out_dir = _prepare(args)
    for snr in snrs:
        _validate(cfg.with_snr(snr), opts)
    combined, header, written = [], None, []
    for snr in snrs:
        scfg = cfg.with_snr(snr)
        files, header, rows = _execute(scfg, opts, seed, out_dir, args.workers)
        written.extend(files)
        combined.extend((f"{snr:g}",) + tuple(r) for r in rows)
    name = f"sweep_{seed}.csv"
    _write_text(os.path.join(out_dir, name), _csv_text(("snr_db",) + header, combined))
    written.append(name)
    manifest = {
        "package_version": __version__,
        "config": cfg.to_dict(),
        "config_hash": config_fingerprint(cfg),
        "run": {**opts, "seed": seed},
        "snrs_db": snrs,
        "outputs": written,
    }
    mname = f"sweep_manifest_{seed}.json"
    _write_text(os.path.join(out_dir, mname), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for f in written + [mname]:
        print(os.path.join(out_dir, f))
    return 0


# --------------------------------------------------------------------------
# plotting
# --------------------------------------------------------------------------

def read_csv(path):
    """Parse a numeric-ish CSV; returns ``(header, rows)`` with line-numbered errors."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"{path}: cannot read ({exc.strerror})") from None
    except (csv.Error, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: malformed CSV ({exc})") from None
    if not lines or not any(lines[0]):
        raise UsageError(f"{path}: empty CSV (no header row)")
    header = [h.strip() for h in lines[0]]
    rows = []
    for lineno, row in enumerate(lines[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise UsageError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
        rows.append(row)
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return header, rows


def _column(path, header, rows, name, numeric=True):
    if name not in header:
        raise UsageError(f"{path}:1: missing column {name!r}")
    j = header.index(name)
    out = []
    for lineno, row in enumerate(rows, start=2):
        if not numeric:
            out.append(row[j])
            continue
        try:
            out.append(float(row[j]))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: column {name!r} is not a number: {row[j]!r}") from None
    return out


def _gamma_series(path):
    header, rows = read_csv(path)
    stem = os.path.splitext(os.path.basename(path))[0]
    if header[:1] == ["algorithm"]:
        algos = _column(path, header, rows, "algorithm", numeric=False)
        ts = _column(path, header, rows, "t")
        gs = _column(path, header, rows, "gamma")
        acc = {}
        for a, t, g in zip(algos, ts, gs):
            acc.setdefault(a, {}).setdefault(t, []).append(g)
        return [(a.capitalize(), sorted(d), [float(np.mean(d[t])) for t in sorted(d)], stem)
                for a, d in acc.items()]
    if "t" in header and any(h.startswith("mean_") for h in header):
        if "snr_db" in header:
            raise UsageError(f"{path}:1: sweep tables hold several SNRs; plot the per-SNR summary files")
        ts = _column(path, header, rows, "t")
        return [(h[5:].capitalize(), ts, _column(path, header, rows, h), stem)
                for h in header if h.startswith("mean_")]
    raise UsageError(f"{path}:1: unrecognized header for a gamma plot: {','.join(header)}")


def _spectrum_series(path):
    header, rows = read_csv(path)
    if header[:1] != ["index"]:
        raise UsageError(f"{path}:1: unrecognized header for a spectrum plot: {','.join(header)}")
    stem = os.path.splitext(os.path.basename(path))[0]
    idx = _column(path, header, rows, "index")
    vals = _column(path, header, rows, "signal_eigenvalue")
    return [(stem, idx, vals, stem)]


def cmd_plot(args):
    series = []
    reader = _gamma_series if args.kind == "gamma" else _spectrum_series
    for path in args.csv:
        series.extend(reader(path))
    labels = [s[0] for s in series]
    named = []
    for label, xs, ys, stem in series:
        if labels.count(label) > 1 and args.kind == "gamma":
            label = f"{label} ({stem})"
        named.append((label, xs, ys))
    if args.kind == "gamma":
        svg = line_chart(named, title=args.title or "Subspace efficiency",
                         xlabel="Time (number of sequential training samples)",
                         ylabel="Gamma", ylim=(0.0, 1.05))
    else:
        svg = line_chart(named, title=args.title or "Eigenvalues of the signal covariance",
                         xlabel="Index", ylabel="Eigenvalue", markers=True)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    if not os.path.isdir(out_dir):
        raise UsageError(f"--out: directory {out_dir} does not exist")
    _write_text(args.out, svg)
    print(args.out)
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _add_run_options(p):
    p.add_argument("config", help="scenario JSON or a run manifest")
    p.add_argument("--algo", choices=("adaptive", "exhaustive", "both"), default=None,
                   help="algorithms to run (default both)")
    p.add_argument("--T", type=int, default=None, help="snapshots per trial (default 400)")
    p.add_argument("--p", type=int, default=None, help="subspace dimension (default 2)")
    p.add_argument("--reps", type=int, default=None, help="repetitions (default 10)")
    p.add_argument("--seed", type=int, default=None, help="base seed (default: config seed)")
    p.add_argument("--out-dir", default="out", help="output directory (default ./out)")
    p.add_argument("--fim-refresh", dest="fim_refresh", type=int, default=None,
                   help="snapshots between full Fisher recomputations (default 10)")
    p.add_argument("--restarts", type=int, default=None,
                   help="CCCP starting points per beam design (default 3)")
    p.add_argument("--feasible", choices=("exact", "grid", "embed"), default=None,
                   help="autocorrelation set used by the beam optimizer (default exact)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: CPU count, capped by ASL_THREADS)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="activesense",
        description="Adaptive beamforming for channel-subspace estimation: simulations and plots.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the adaptive and/or exhaustive algorithm")
    _add_run_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-snr", help="repeat a run over several SNR values")
    _add_run_options(p)
    p.add_argument("--snrs", required=True, help='comma-separated SNRs in dB, e.g. "0,-10,-20"')
    p.set_defaults(func=cmd_sweep_snr)

    p = sub.add_parser("plot", help="render CSV results as an SVG chart")
    p.add_argument("csv", nargs="+", help="CSV files written by run or sweep-snr")
    p.add_argument("--out", required=True, help="SVG path to write")
    p.add_argument("--kind", choices=("gamma", "spectrum"), default="gamma")
    p.add_argument("--title", default=None)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"activesense {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"activesense {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
