"""Command-line interface.

Subcommands: ``simulate``, ``test``, ``mc-study``, ``spectrum``, ``filters``.
All randomness flows from ``--seed`` (fixed default, so runs are
deterministic); ``SFIELD_LOG`` controls diagnostic verbosity.

Exit codes: 0 success, 2 parse failure (bad CSV or config file), 3
configuration failure (inconsistent tuning), 4 numerical/input failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import io
from .errors import (
    ConfigurationError,
    InvalidInputError,
    MomentFitError,
    ParseError,
)
from .estimators import decompose, run_normality_test
from .sfpca import compute_scores
from .simulate import (
    McStudyConfig,
    generate_operators,
    parse_distribution,
    run_mc_study,
    simulate_sar,
)
from .spectral import estimate_spectral_density, window_rule_of_thumb

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

DEFAULT_SEED = 0

log = logging.getLogger("spafda")


def _dims(text: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _window(text: str):
    if text == "auto":
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or comma-separated numbers, got {text!r}")


def _maybe_int(text: str):
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}")


def _add_tuning_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--q", type=_window, default=None, metavar="Q1,Q2|auto",
                        help="lag-window sizes (default: square-root rule)")
    parser.add_argument("--grid-t", type=int, default=None, metavar="T",
                        help="frequency-grid points per axis (odd, default 41)")
    parser.add_argument("--l", type=_maybe_int, default=None, metavar="L|auto",
                        help="filter truncation lag (default: weight threshold rule)")
    parser.add_argument("--p", type=_maybe_int, default=None, metavar="P|auto",
                        help="number of score levels (default: variance threshold rule)")
    parser.add_argument("--var-threshold", type=float, default=0.85)
    parser.add_argument("--weight-threshold", type=float, default=0.95)


def _add_input_flags(parser: argparse.ArgumentParser):
    parser.add_argument("input", help="sample CSV (see README for the format)")
    parser.add_argument("--dims", type=_dims, default=None,
                        help="grid dims, overriding the CSV header")
    parser.add_argument("--basis", choices=["fourier", "bspline"], default=None)
    parser.add_argument("--k", type=int, default=None, help="basis dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spafda",
        description="Normality testing for functional data on spatial grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an autoregressive functional field")
    sim.add_argument("--dims", type=_dims, required=True)
    sim.add_argument("--k", type=int, default=15)
    sim.add_argument("--dist", default="gaussian",
                     help="innovation distribution: gaussian or su(tau,kappa)")
    sim.add_argument("--burnin", type=int, default=50)
    sim.add_argument("--norm-a", type=float, default=0.6)
    sim.add_argument("--norm-b", type=float, default=0.35)
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--out", required=True)

    test = sub.add_parser("test", help="run the normality test on a sample CSV")
    _add_input_flags(test)
    _add_tuning_flags(test)
    test.add_argument("--l-prime", type=_maybe_int, default=None, metavar="L|auto",
                      help="autocovariance truncation for the long-run variances")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument("--strict-boundary", action="store_true")
    test.add_argument("--out", default=None,
                      help="write the report (.csv or .jsonl by extension)")

    mc = sub.add_parser("mc-study", help="run a Monte Carlo size/power study")
    mc.add_argument("config", help="JSON study config (see README)")
    mc.add_argument("--out", required=True)
    mc.add_argument("--threads", type=int, default=1)
    mc.add_argument("--seed", type=int, default=None,
                    help="override the seed in the config file")

    spectrum = sub.add_parser("spectrum", help="dump spectral eigenvalue curves as CSV")
    _add_input_flags(spectrum)
    spectrum.add_argument("--q", type=_window, default=None)
    spectrum.add_argument("--grid-t", type=int, default=None)
    spectrum.add_argument("--out", required=True)

    filters = sub.add_parser("filters", help="dump the filter bank (and scores) as CSV")
    _add_input_flags(filters)
    _add_tuning_flags(filters)
    filters.add_argument("--strict-boundary", action="store_true")
    filters.add_argument("--out", required=True)
    filters.add_argument("--scores-out", default=None)

    return parser


def _read_sample(args):
    return io.read_sample_csv(args.input, dims=args.dims, basis_kind=args.basis, k=args.k)


def _cmd_simulate(args) -> int:
    innovations = parse_distribution(args.dist, args.k)
    operators = generate_operators(args.seed, k=args.k, norms=(args.norm_a, args.norm_b))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
    sample = simulate_sar(args.dims, operators, innovations, burnin=args.burnin, seed=rng)
    io.write_sample_csv(sample, args.out)
    log.info("wrote %s locations to %s", sample.n_locations, args.out)
    return EXIT_OK


def _cmd_test(args) -> int:
    sample = _read_sample(args)
    report = run_normality_test(
        sample,
        window=args.q,
        grid_points=args.grid_t,
        n_levels=args.p,
        var_threshold=args.var_threshold,
        filter_lag=args.l,
        weight_threshold=args.weight_threshold,
        cov_lag=args.l_prime,
        strict_boundary=args.strict_boundary,
    )
    print(report.format_table())
    decision = "reject" if report.p_value < args.alpha else "do not reject"
    print(f"decision at alpha={args.alpha:g}: {decision} normality")
    print(report.machine_line())
    if args.out:
        if args.out.endswith(".jsonl"):
            io.report_to_jsonl(report, args.out)
        else:
            io.report_to_csv(report, args.out)
    return EXIT_OK


def _cmd_mc_study(args) -> int:
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.config}: {exc}") from None
    if args.seed is not None:
        data["seed"] = args.seed
    config = McStudyConfig.from_dict(data)
    rows = run_mc_study(config, n_jobs=args.threads)
    io.mc_rows_to_csv(rows, args.out)
    for row in rows:
        print(
            f"{row['dims']:>9} {row['distribution']:>12} p={row['p']} "
            f"rate={row['rate']:.4f} se={row['mc_se']:.4f} failures={row['failures']}"
        )
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    sample = _read_sample(args)
    from .field import center

    spec = estimate_spectral_density(
        center(sample),
        args.q if args.q is not None else window_rule_of_thumb(sample.dims),
    )
    io.spectrum_to_csv(spec, args.out)
    return EXIT_OK


def _cmd_filters(args) -> int:
    sample = _read_sample(args)
    decomp = decompose(
        sample,
        window=args.q,
        grid_points=args.grid_t,
        n_levels=args.p,
        var_threshold=args.var_threshold,
        filter_lag=args.l,
        weight_threshold=args.weight_threshold,
    )
    io.filters_to_csv(decomp.filter_bank, sample.basis, args.out)
    if args.scores_out:
        field = compute_scores(decomp.sample, decomp.filter_bank, args.strict_boundary)
        io.scores_to_csv(field, args.scores_out)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "test": _cmd_test,
    "mc-study": _cmd_mc_study,
    "spectrum": _cmd_spectrum,
    "filters": _cmd_filters,
}


def main(argv=None) -> int:
    level = os.environ.get("SFIELD_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigurationError, MomentFitError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInputError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
