#!/usr/bin/env python3
import argparse
import logging
import sys

from config import PATH_TO_LOGS
from logging_config import setup_logging
from pipeline import RunConfig, run_analysis, run_dwt_dump, run_network, run_synth
from wavelet import FILTER_NAMES

logger = logging.getLogger(__name__)

ANALYZE_FIELDS = (
    "input_path",
    "input_format",
    "r_grid",
    "min_level",
    "max_level",
    "filter",
    "boundary",
    "eps_floor",
    "reversal_average",
    "output_dir",
    "workers",
)
NETWORK_FIELDS = (
    "spectra_dir",
    "breakpoints",
    "top_k",
    "xi_points",
    "xi_min",
    "xi_max",
    "xi",
    "output_dir",
)


def resolve_config(args, names: tuple[str, ...]) -> RunConfig:
    """Config file first, then any flag given on the command line"""
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if getattr(args, "fd_breakpoints", False):
        config.breakpoints = None
    return config


def cmd_analyze(args) -> int:
    report = run_analysis(resolve_config(args, ANALYZE_FIELDS))
    print(
        f"Spectra: {len(report.spectra)}, failures: {len(report.failures)}, "
        + f"config_hash: {report.run_hash}"
    )
    return 0


def cmd_network(args) -> int:
    report = run_network(resolve_config(args, NETWORK_FIELDS))
    print(
        f"Series: {len(report.ids)}, clusters: {report.n_clusters}, "
        + f"config_hash: {report.run_hash}"
    )
    return 0


def cmd_synth(args) -> int:
    path = run_synth(
        kind=args.kind,
        path=args.out,
        count=args.count,
        seed=args.seed,
        a=args.a,
        levels=args.levels,
        length=args.length,
    )
    print(f"Bundle written: {path}")
    return 0


def cmd_dwt_dump(args) -> int:
    path = run_dwt_dump(
        input_path=args.input_path,
        series_id=args.id,
        path=args.out,
        input_format=args.input_format,
        wfilter=args.filter,
        levels=args.levels,
        boundary=args.boundary,
    )
    print(f"Coefficients written: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        description="wbmfdfa: wavelet MFDFA spectra, singularity-width networks, synthetic oracles"
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="Verbose logs")
    sub = ap.add_subparsers(dest="cmd", required=True)

    # analyze
    ap_a = sub.add_parser("analyze", help="Spectrum per series + summary CSV")
    ap_a.add_argument("--config", default=None, help="RunConfig JSON; flags override it")
    ap_a.add_argument("--input", dest="input_path", default=None)
    ap_a.add_argument(
        "--format", dest="input_format", default=None,
        choices=["wide_csv", "long_csv", "raw_signal"],
    )
    ap_a.add_argument("--r-grid", dest="r_grid", type=float, nargs="+", default=None)
    ap_a.add_argument("--min-level", dest="min_level", type=int, default=None)
    ap_a.add_argument("--max-level", dest="max_level", type=int, default=None)
    ap_a.add_argument("--filter", default=None, choices=list(FILTER_NAMES))
    ap_a.add_argument("--boundary", default=None, choices=["periodic", "symmetric"])
    ap_a.add_argument("--eps-floor", dest="eps_floor", type=float, default=None)
    ap_a.add_argument(
        "--reversal-average", dest="reversal_average", default=None,
        choices=["fluctuation", "variance"],
    )
    ap_a.add_argument("--output-dir", dest="output_dir", default=None)
    ap_a.add_argument("--workers", type=int, default=None)
    ap_a.set_defaults(func=cmd_analyze)

    # network
    ap_n = sub.add_parser("network", help="Matrix, dendrogram, histogram and xi sweep")
    ap_n.add_argument("--config", default=None, help="RunConfig JSON; flags override it")
    ap_n.add_argument("--spectra-dir", dest="spectra_dir", default=None)
    ap_n.add_argument("--breakpoints", type=float, nargs="*", default=None)
    ap_n.add_argument(
        "--fd-breakpoints", dest="fd_breakpoints", action="store_true",
        help="Freedman-Diaconis bins instead of fixed breakpoints",
    )
    ap_n.add_argument("--top-k", dest="top_k", type=int, default=None)
    ap_n.add_argument("--xi-points", dest="xi_points", type=int, default=None)
    ap_n.add_argument("--xi-min", dest="xi_min", type=float, default=None)
    ap_n.add_argument("--xi-max", dest="xi_max", type=float, default=None)
    ap_n.add_argument("--xi", type=float, default=None, help="Also export the edge list at xi")
    ap_n.add_argument("--output-dir", dest="output_dir", default=None)
    ap_n.set_defaults(func=cmd_network)

    # synth
    ap_s = sub.add_parser("synth", help="Write a synthetic raw_signal bundle")
    ap_s.add_argument("--kind", default="cascade", choices=["cascade", "walk", "shuffled_cascade"])
    ap_s.add_argument("--count", type=int, default=1)
    ap_s.add_argument("--seed", type=int, default=0)
    ap_s.add_argument("--a", type=float, default=0.75, help="Cascade multiplier in (0.5, 1)")
    ap_s.add_argument("--levels", type=int, default=12, help="Cascade length 2^levels")
    ap_s.add_argument("--length", type=int, default=None, help="Walk length")
    ap_s.add_argument("--out", required=True)
    ap_s.set_defaults(func=cmd_synth)

    # dwt-dump
    ap_d = sub.add_parser("dwt-dump", help="Wavelet coefficients of one series profile")
    ap_d.add_argument("--input", dest="input_path", required=True)
    ap_d.add_argument(
        "--format", dest="input_format", default="wide_csv",
        choices=["wide_csv", "long_csv", "raw_signal"],
    )
    ap_d.add_argument("--id", required=True)
    ap_d.add_argument("--filter", default="Db4", choices=list(FILTER_NAMES))
    ap_d.add_argument("--levels", type=int, default=1)
    ap_d.add_argument("--boundary", default="periodic", choices=["periodic", "symmetric"])
    ap_d.add_argument("--out", required=True)
    ap_d.set_defaults(func=cmd_dwt_dump)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(PATH_TO_LOGS, verbose=args.verbose)
    try:
        return args.func(args)
    except Exception as e:
        logger.error(f"{args.cmd} failed: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
