"""Command-line driver.

Subcommands:
  run <config.toml|json>   -- execute a run configuration (or a manifest)
  preset <name>            -- run one of the built-in benchmarks
  fit rate|period <csv>    -- extract a damping rate / oscillation period
  snapshot <file>          -- inspect or convert a phase-space snapshot

Outputs land in --outdir (or $LEGVP_OUTDIR, default ./out/<label>).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FitError, SolverError
from .fitting import fit_damping_rate, fit_period
from .presets import PRESET_NAMES, apply_overrides, execute, load_config, preset
from .state import read_snapshot_binary, write_snapshot_csv

__all__ = ["main", "entry"]


def _outdir(args, label: str) -> Path:
    if args.outdir:
        return Path(args.outdir)
    env = os.environ.get("LEGVP_OUTDIR")
    if env:
        return Path(env)
    return Path("out") / label


def _run_and_report(cfg, outdir) -> int:
    summary = execute(cfg, outdir)
    result = summary["result"]
    print(f"diagnostics: {summary['csv']}")
    print(f"manifest:    {summary['manifest']}")
    for path in summary["snapshots"]:
        print(f"snapshot:    {path}")
    stats = result.stats
    print(f"steps: {stats['steps_done']}  newton: {stats['newton_total']} "
          f"(max {stats['newton_max']}/step)  gmres: {stats['gmres_total']}")
    if not result.completed:
        print(f"error (solver): {result.failure}", file=sys.stderr)
        return 2
    return 0


def _load_series(path: str, column: str):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if column not in header:
        raise FitError(f"column '{column}' not in {path} (have {header})")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise FitError(f"{path} contains no data rows")
    return data[:, 0], data[:, header.index(column)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="legvp",
                                     description="Legendre-Fourier Vlasov-Poisson solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run configuration file")
    p_run.add_argument("config")
    p_run.add_argument("--outdir")
    p_run.add_argument("--override", nargs="*", default=[], metavar="KEY=VALUE")

    p_pre = sub.add_parser("preset", help="run a built-in benchmark")
    p_pre.add_argument("name", choices=PRESET_NAMES)
    p_pre.add_argument("--outdir")
    p_pre.add_argument("--override", nargs="*", default=[], metavar="KEY=VALUE")

    p_fit = sub.add_parser("fit", help="fit a rate or period to a diagnostics CSV")
    p_fit.add_argument("kind", choices=("rate", "period"))
    p_fit.add_argument("csv")
    p_fit.add_argument("--column", default="absE_k1")
    p_fit.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    p_fit.add_argument("--rectified", action="store_true",
                       help="treat the series as |oscillation| and report the full period")

    p_snap = sub.add_parser("snapshot", help="inspect or convert a snapshot file")
    p_snap.add_argument("file")
    p_snap.add_argument("--export", help="write the grid as CSV to this path")

    args = parser.parse_args(argv)

    if args.command == "run":
        cfg = load_config(args.config)
        if args.override:
            cfg = apply_overrides(cfg, args.override)
        return _run_and_report(cfg, _outdir(args, cfg.label))

    if args.command == "preset":
        cfg = preset(args.name)
        if args.override:
            cfg = apply_overrides(cfg, args.override)
        return _run_and_report(cfg, _outdir(args, cfg.label))

    if args.command == "fit":
        t, y = _load_series(args.csv, args.column)
        window = tuple(args.window) if args.window else None
        if args.kind == "rate":
            value = fit_damping_rate(t, y, window)
            print(f"rate = {value:.6f}")
        else:
            value = fit_period(t, y, window, rectified=args.rectified)
            print(f"period = {value:.6f}")
        return 0

    if args.command == "snapshot":
        path = args.file
        if path.endswith(".csv"):
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            print(f"csv snapshot: {data.shape[0]} points, "
                  f"f in [{data[:, 2].min():.3e}, {data[:, 2].max():.3e}]")
        else:
            x, v, f, meta = read_snapshot_binary(path)
            print(f"binary snapshot: n_x={meta['n_x']} n_v={meta['n_v']} "
                  f"L={meta['L']} v=[{meta['v_a']}, {meta['v_b']}]"
                  + (f" t={meta['t']}" if "t" in meta else ""))
            print(f"f in [{f.min():.6e}, {f.max():.6e}]")
            if args.export:
                write_snapshot_csv(args.export, x, v, f)
                print(f"wrote {args.export}")
        return 0

    parser.error("unknown command")
    return 2


def entry() -> None:
    """Console-script entry point with stage-tagged error reporting."""
    try:
        sys.exit(main())
    except ConfigurationError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        sys.exit(2)
    except FitError as exc:
        print(f"error (fit): {exc}", file=sys.stderr)
        sys.exit(3)
    except SolverError as exc:
        print(f"error (solver): {exc}", file=sys.stderr)
        sys.exit(4)
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        sys.exit(5)


if __name__ == "__main__":
    entry()
