"""Command-line front-end.

Subcommands: `test` runs one of the five tests on a CSV dataset, `fit` runs
the conditional-logistic Newton fit, `equivalence` runs Monte Carlo panels
comparing the score and Hotelling statistics, and `sample-k` draws from the
limit law directly.  Exit codes: 0 success, 2 input or contract error,
3 non-convergence, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .classic import discordant_counts, hotelling_paired, mcnemar
from .clr import fit_mle, fit_mle_strata, lr_test, score_test, wald_test
from .data import DataError, load_dataset, pair_differences
from .equivalence import (
    NOISE_FAMILIES,
    LocalAlternativeSpec,
    histogram,
    run_equivalence_experiment,
    sample_k,
)
from .numerics import SingularMatrixError, spd_factor

_TEST_NAMES = ("mcnemar", "hotelling", "clr-score", "clr-wald", "clr-lr")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_NOCONVERGE = 3


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchstat",
        description="Tests and conditional logistic regression for matched data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a test on a CSV dataset of pairs")
    p_test.add_argument("which", choices=_TEST_NAMES)
    p_test.add_argument("--data", required=True, help="CSV file: stratum,y,x1..xp")
    p_test.add_argument(
        "--pvalue",
        choices=("chisq", "exact-f"),
        default="chisq",
        help="Hotelling reference distribution (default chisq)",
    )
    p_test.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p_fit = sub.add_parser("fit", help="fit conditional logistic regression")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument(
        "--strata",
        choices=("pairs", "general"),
        default="pairs",
        help="pairs: 1:1 discordant pairs; general: any k-of-m strata",
    )
    p_fit.add_argument("--max-iter", type=_positive_int, default=50)

    p_eq = sub.add_parser(
        "equivalence", help="Monte Carlo panels of n(score - hotelling) vs direct K draws"
    )
    p_eq.add_argument("--p", type=_positive_int, required=True, help="predictor dimension")
    p_eq.add_argument(
        "--delta",
        required=True,
        help="comma-separated panel deviations; vector components joined by ':'",
    )
    p_eq.add_argument(
        "--sigma",
        default="identity",
        help="'identity', 'diag:a,b,...', or a CSV matrix file",
    )
    p_eq.add_argument("--n", type=_positive_int, required=True, help="pairs per replicate")
    p_eq.add_argument("--reps", type=_positive_int, required=True)
    p_eq.add_argument("--seed", type=int, required=True)
    p_eq.add_argument("--family", choices=NOISE_FAMILIES, default="gaussian")
    p_eq.add_argument("--bins", type=_positive_int, default=100, help="histogram bins")
    p_eq.add_argument("--out", required=True, help="output directory")

    p_k = sub.add_parser("sample-k", help="draw from the limit variable K")
    p_k.add_argument("--p", type=_positive_int, required=True)
    p_k.add_argument("--delta", required=True, help="vector components joined by ':'")
    p_k.add_argument("--sigma", default="identity")
    p_k.add_argument("--reps", type=_positive_int, required=True)
    p_k.add_argument("--seed", type=int, required=True)
    p_k.add_argument("--out", help="output file (default stdout)")

    return parser


def _parse_vector(text: str, p: int, flag: str) -> np.ndarray:
    parts = [s for s in text.split(":") if s != ""]
    try:
        values = [float(s) for s in parts]
    except ValueError:
        raise DataError(f"{flag}: could not parse {text!r} as numbers") from None
    if len(values) == 1 and p > 1:
        values = values * p
    if len(values) != p:
        raise DataError(f"{flag}: expected {p} components, got {len(values)}")
    return np.array(values)


def _parse_sigma(text: str, p: int) -> np.ndarray:
    if text == "identity":
        return np.eye(p)
    if text.startswith("diag:"):
        values = _parse_vector(text[len("diag:"):].replace(",", ":"), p, "--sigma")
        return np.diag(values)
    matrix = np.loadtxt(text, delimiter=",", ndmin=2)
    if matrix.shape != (p, p):
        raise DataError(f"--sigma: matrix in {text} is not {p}x{p}")
    return matrix


def _print_result_table(d: dict) -> None:
    width = max(len(key) for key in d)
    for key, value in d.items():
        print(f"{key:<{width}}  {value}")


def _cmd_test(args) -> int:
    dataset = load_dataset(args.data)
    if args.which == "mcnemar":
        result = mcnemar(discordant_counts(dataset))
    else:
        z = pair_differences(dataset)
        if args.which == "hotelling":
            mode = "exact_f" if args.pvalue == "exact-f" else "chisq"
            result = hotelling_paired(z, pvalue_mode=mode)
        elif args.which == "clr-score":
            result = score_test(z)
        else:
            fit = fit_mle(z)
            if not fit.converged:
                print(f"error: {fit.diagnostic or 'did not converge'}", file=sys.stderr)
                return EXIT_NOCONVERGE
            result = wald_test(fit) if args.which == "clr-wald" else lr_test(fit, z)
    if args.json:
        print(json.dumps(result.to_dict(), indent=2))
    else:
        _print_result_table(result.to_dict())
    return EXIT_OK


def _cmd_fit(args) -> int:
    dataset = load_dataset(args.data)
    if args.strata == "pairs":
        fit = fit_mle(pair_differences(dataset), max_iter=args.max_iter)
    else:
        fit = fit_mle_strata(dataset, max_iter=args.max_iter)
    if not fit.converged:
        print(f"error: {fit.diagnostic or 'did not converge'}", file=sys.stderr)
        return EXIT_NOCONVERGE
    print(json.dumps(fit.to_dict(), indent=2))
    return EXIT_OK


def _delta_token_label(token: str) -> str:
    return token.replace(":", "_")


def _cmd_equivalence(args) -> int:
    p = args.p
    sigma = _parse_sigma(args.sigma, p)
    tokens = [tok for tok in args.delta.split(",") if tok != ""]
    if not tokens:
        raise DataError("--delta: no panels given")
    os.makedirs(args.out, exist_ok=True)
    print("delta  ks_distance  degenerate")
    for token in tokens:
        delta = _parse_vector(token, p, "--delta")
        spec = LocalAlternativeSpec(
            delta=delta,
            sigma=sigma,
            noise_family=args.family,
            n=args.n,
            reps=args.reps,
            seed=args.seed,
        )
        report = run_equivalence_experiment(spec)
        label = _delta_token_label(token)
        with open(
            os.path.join(args.out, f"report_delta{label}.json"), "w", encoding="utf-8",
            newline="\n",
        ) as fh:
            fh.write(json.dumps(report.to_dict(), indent=2))
            fh.write("\n")
        lo = float(min(report.empirical.min(), report.k_samples.min()))
        hi = float(max(report.empirical.max(), report.k_samples.max()))
        for name, samples in (("emp", report.empirical), ("k", report.k_samples)):
            hist = histogram(samples, args.bins, (lo, hi))
            path = os.path.join(args.out, f"{name}_hist_delta{label}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(hist.to_csv())
        print(f"{token:<5}  {report.ks_distance:.6f}     {report.degenerate_count}")
    return EXIT_OK


def _cmd_sample_k(args) -> int:
    delta = _parse_vector(args.delta, args.p, "--delta")
    sigma = _parse_sigma(args.sigma, args.p)
    samples = sample_k(delta, sigma, args.reps, args.seed)
    lines = "".join(f"{float(v)!r}\n" for v in samples)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "equivalence":
            return _cmd_equivalence(args)
        if args.command == "sample-k":
            return _cmd_sample_k(args)
        parser.error(f"unknown command {args.command!r}")
    except (DataError, SingularMatrixError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
