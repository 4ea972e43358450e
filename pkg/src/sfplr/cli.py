"""Command-line interface: ``sfplr test`` and ``sfplr simulate``.

Exit codes: 0 on success (whatever the test decides), 2 for usage errors,
3 for unreadable or invalid input, 4 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import __version__
from .estimation import ConfigError, FitConfig, InvalidTruncationError, SingularDesignError
from .fda import DimensionError
from .io import DatasetError, DatasetFiles, ReportFile, load_dataset, write_dataset, write_report
from .linearity import CannotProjectError, TestConfig, run_test
from .simulation import SCENARIOS, gen_scenario, local_alternative_dataset, rejection_rate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4

_STATS = {"ks": ("ks",), "cvm": ("cvm",), "both": ("ks", "cvm")}


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_common(p: argparse.ArgumentParser, B_default: int):
    p.add_argument("--K", type=_positive_int, default=7, help="number of random directions")
    p.add_argument("--B", type=_positive_int, default=B_default, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--c", type=float, default=3.0, help="bandwidth constant, b = c n^(-1/5)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--stat", choices=sorted(_STATS), default="both")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (falls back to SFPLR_THREADS, then 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfplr", description="Linearity tests for semi-functional partially linear models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test linearity of the functional component on a dataset")
    t.add_argument("--curves", required=True, type=Path, help="curves CSV")
    t.add_argument("--scalars", type=Path, help="scalars CSV with a header row")
    t.add_argument("--response", help="name of the response column in the scalars file")
    t.add_argument("--response-file", type=Path, help="single-column response file (no scalar covariates)")
    t.add_argument("--no-grid-row", action="store_true", help="curves file has no grid row; use an even grid on [0, 1]")
    t.add_argument("--out", type=Path, help="write the JSON report here")
    _add_common(t, 10000)

    s = sub.add_parser("simulate", help="Monte Carlo rejection rates for a simulation scenario")
    s.add_argument("--scenario", type=int, required=True, choices=sorted(SCENARIOS))
    dev = s.add_mutually_exclusive_group(required=True)
    dev.add_argument("--deviation", type=int, choices=(0, 1, 2))
    dev.add_argument("--local", action="store_true", help="use the local alternative family")
    s.add_argument("--n", type=_positive_int, default=100)
    s.add_argument("--M", type=_positive_int, default=200)
    s.add_argument("--out", type=Path, help="write the JSON result here")
    s.add_argument("--pvalues-csv", type=Path, help="per-replicate merged p-values (defaults next to --out)")
    s.add_argument("--dump-dataset", type=Path,
                   help="write the first replicate's dataset as <prefix>_curves.csv and <prefix>_scalars.csv")
    _add_common(s, 500)
    return parser


def _config(args) -> TestConfig:
    return TestConfig(
        num_directions=args.K,
        bootstrap_reps=args.B,
        alpha=args.alpha,
        seed=args.seed,
        statistics=_STATS[args.stat],
        fit=FitConfig(bandwidth_constant=args.c),
        threads=args.threads,
    )


def _fmt(p) -> str:
    return "n/a" if p is None else f"{p:.4f}"


def cmd_test(args) -> int:
    cfg = _config(args)
    if args.response_file is None and (args.scalars is None or args.response is None):
        raise DatasetError("give --scalars with --response, or --response-file")
    files = DatasetFiles(
        curves_path=args.curves,
        scalars_path=args.scalars,
        response_column=args.response if args.scalars is not None else None,
        response_path=args.response_file,
        grid_row=not args.no_grid_row,
    )
    ds = load_dataset(files)
    start = time.perf_counter()
    report = run_test(ds, cfg)
    runtime = time.perf_counter() - start
    if args.out is not None:
        write_report(ReportFile(report, __version__, runtime), args.out)
    decision = {
        s: ("reject" if report.rejects(s) else "retain")
        for s in cfg.statistics
    }
    parts = [f"n={ds.n} p={ds.p} k={report.fit_summary['k_selected']}"]
    if "ks" in cfg.statistics:
        parts.append(f"KS p={_fmt(report.merged_p_ks)} ({decision['ks']})")
    if "cvm" in cfg.statistics:
        parts.append(f"CvM p={_fmt(report.merged_p_cvm)} ({decision['cvm']})")
    print(f"{'  '.join(parts)}  at alpha={cfg.alpha:g}")
    return EXIT_OK


def _write_pvalues(path: Path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "merged_p_ks", "merged_p_cvm"])
        for m, (pk, pc) in enumerate(zip(result.pvalues_ks, result.pvalues_cvm)):
            w.writerow([m, repr(pk), repr(pc)])


def cmd_simulate(args) -> int:
    cfg = _config(args)
    d = "local" if args.local else args.deviation
    if args.dump_dataset is not None:
        from ._random import DATA, derive_seed

        seed0 = derive_seed(args.seed, DATA, 0)
        ds = local_alternative_dataset(args.scenario, args.n, seed0) if args.local else gen_scenario(args.scenario, d, args.n, seed0)
        prefix = str(args.dump_dataset)
        write_dataset(ds, prefix + "_curves.csv", prefix + "_scalars.csv")
    result = rejection_rate(args.scenario, d, args.n, args.M, cfg, rng_seed=args.seed, threads=args.threads)
    payload = {"tool_version": __version__, "config": cfg.to_dict(), **result.to_dict()}
    if args.out is not None:
        args.out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    csv_path = args.pvalues_csv
    if csv_path is None and args.out is not None:
        csv_path = args.out.with_suffix(".pvalues.csv")
    if csv_path is not None:
        _write_pvalues(csv_path, result)
    print(
        f"scenario {result.scenario} deviation {result.deviation} n={result.n} M={result.M}: "
        f"rejection rate KS {result.rejection_rate_ks:.3f}  CvM {result.rejection_rate_cvm:.3f}"
        f"  ({result.elapsed:.1f}s)"
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    handler = cmd_test if args.command == "test" else cmd_simulate
    try:
        return handler(args)
    except (DatasetError, DimensionError, OSError) as exc:
        print(f"sfplr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularDesignError, InvalidTruncationError, CannotProjectError) as exc:
        print(f"sfplr: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"sfplr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
