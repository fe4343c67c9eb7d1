"""Command-line entry point: ``ratioreg {estimate,variance,simulate,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import csvio
from .commands import ALIGN_CHOICES, VerifyConfig, cmd_estimate, cmd_simulate, cmd_variance, cmd_verify
from .errors import RatioRegError
from .montecarlo import MeanFunction, ModelParams

log = logging.getLogger("ratioreg")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratioreg",
        description="Estimate the ratio of two noisily observed proportional signals.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the ratio x/y from two CSV channels")
    p.add_argument("--x", required=True, type=Path, help="CSV of the r*f channel")
    p.add_argument("--y", required=True, type=Path, help="CSV of the f channel")
    p.add_argument("--sigma2", type=float, help="noise variance of y; estimated when omitted")
    p.add_argument("--beta", type=float, help="check |D| > beta*n and fail when it does not hold")
    p.add_argument("--align", choices=ALIGN_CHOICES, default="same")
    p.add_argument("--tol", type=float, default=0.0, help="max time gap for --align same")
    p.add_argument("--stride", type=int, help="prefix-curve stride (default n//1000)")
    p.add_argument("--out", type=Path, help="output path (default: stdout only)")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("variance", help="difference-based noise variance of one CSV channel")
    p.add_argument("--y", required=True, type=Path)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("simulate", help="write simulated x.csv, y.csv and truth.json")
    p.add_argument("--f", default="sin2", help="mean function: sin2 or const:<c>")
    p.add_argument("--r", type=float, default=10.0)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset", type=float, default=0.0, help="time shift of the x channel")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("verify", help="run the Monte Carlo verification suite")
    p.add_argument("--config", type=Path, help="JSON config; defaults are used when omitted")
    p.add_argument("--out", type=Path)
    return parser


def _emit(payload: dict, out: Path | None) -> None:
    text = csvio.dumps(payload)
    if out is not None:
        out.write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)


def run(args: argparse.Namespace) -> int:
    if args.command == "estimate":
        report = cmd_estimate(
            args.x, args.y, sigma2_sq=args.sigma2, beta=args.beta,
            align=args.align, tol=args.tol, stride=args.stride,
        )
        if args.format == "csv" and args.out is not None:
            csvio.write_rows(args.out, ("k", "ratio"), report["prefix_curve"])
            sys.stdout.write(csvio.dumps(report))
        else:
            _emit(report, args.out)
        if report["degenerate"]:
            log.error("degenerate denominator: %s", report.get("error"))
            return EXIT_FAILED
        if args.beta is not None and report["condition_beta"] != "passed":
            log.error("|D| > beta*n does not hold; the estimate carries no guarantee")
            return EXIT_FAILED
        return EXIT_OK

    if args.command == "variance":
        _emit(cmd_variance(args.y), args.out)
        return EXIT_OK

    if args.command == "simulate":
        params = ModelParams(
            args.r, MeanFunction.parse(args.f), args.sigma1, args.sigma2, args.n,
            time_offset=args.offset,
        )
        sys.stdout.write(csvio.dumps(cmd_simulate(params, args.seed, args.out)))
        return EXIT_OK

    if args.command == "verify":
        if args.config is None:
            config = VerifyConfig()
        else:
            try:
                data = json.loads(args.config.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise RatioRegError(f"{args.config}:{exc.lineno}: invalid JSON ({exc.msg})") from None
            config = VerifyConfig.from_dict(data)
        result = cmd_verify(config)
        _emit(result, args.out)
        for crit in result["criteria"]:
            log.info("%s %s", "PASS" if crit["passed"] else "FAIL", crit["name"])
        return EXIT_OK if result["passed"] else EXIT_FAILED

    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return run(args)
    except (RatioRegError, OSError) as exc:
        print(f"ratioreg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
