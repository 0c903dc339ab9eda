"""Command-line interface: ``rieszgas {kernel,transform,sample,analyze,verify}``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration
error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, RieszError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _out_dir(path) -> Path:
    """Output directory; created when its parent exists."""
    out = Path(path)
    if out.is_dir():
        return out
    if out.parent.is_dir():
        out.mkdir()
        return out
    raise ConfigError(f"cannot create output directory {out}: parent does not exist")


def _write_csv(path, header, columns):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def cmd_kernel(args) -> int:
    from .special import ModelParams, build_kernel_table

    model = build_kernel_table(ModelParams(args.s, 1.0, 2), resolution=args.resolution)
    x = (np.arange(args.points) + 0.5) / args.points
    out = _out_dir(args.out)
    _write_csv(out / "kernel.csv", ["x", "g", "g1", "g2"], [x, model.g(x), model.g1(x), model.g2(x)])
    print(f"wrote {out / 'kernel.csv'} ({args.points} points, s={args.s})")
    return EXIT_OK


def cmd_transform(args) -> int:
    from .transforms import (
        TestFunction,
        calibrate_multiplier,
        riesz_inverse_spectral,
        sigma_xi_squared,
    )

    if args.kind == "cosine":
        xi = TestFunction.cosine(int(args.param))
    elif args.kind == "indicator":
        xi = TestFunction.indicator(args.param)
    else:
        xi = TestFunction.power(args.param)
    psi = riesz_inverse_spectral(xi, args.grid, s=args.s)
    x = (np.arange(args.points) + 0.5) / args.points
    out = _out_dir(args.out)
    _write_csv(out / "transform.csv", ["x", "xi", "psi", "dpsi"], [x, xi(x), psi(x), psi.derivative(x)])
    mult = calibrate_multiplier(args.s, args.grid)
    info = {
        "kind": args.kind, "param": args.param, "s": args.s, "beta": args.beta, "grid": args.grid,
        "sigma2": sigma_xi_squared(xi, psi, args.beta),
        "multiplier": {"mu1": mult.mu1, "exponent": mult.exponent,
                       "fitted_exponent": mult.fitted_exponent, "residual": mult.residual},
    }
    (out / "transform.json").write_text(json.dumps(info, indent=2) + "\n")
    print(f"sigma^2 = {info['sigma2']:.12g}; wrote {out / 'transform.csv'}")
    return EXIT_OK


def cmd_sample(args) -> int:
    from .harness import parse_config, run

    spec = parse_config(args.config)
    if args.seed is not None:
        spec = replace(spec, sampler=replace(spec.sampler, seed=args.seed))
    out = _out_dir(args.out or spec.outputs or ".")
    run(spec, out, threads=args.threads)
    report = json.loads((out / "report.json").read_text())
    for claim in report["claims"]:
        print(f"{'PASS' if claim['passed'] else 'FAIL'} {claim['claim_id']}: {claim['description']}")
    print(f"wrote {out}")
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_analyze(args) -> int:
    from .harness import analyze

    out = _out_dir(args.out) if args.out else None
    report = analyze(args.run, out)
    for claim in report["claims"]:
        print(f"{'PASS' if claim['passed'] else 'FAIL'} {claim['claim_id']}: {claim['description']}")
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_verify(args) -> int:
    from .acceptance import run_suite
    from .harness import write_report

    numbers = None
    if args.criteria:
        try:
            numbers = sorted({int(c) for c in args.criteria.split(",")})
        except ValueError:
            raise ConfigError(f"--criteria expects a comma-separated list of numbers, got {args.criteria!r}")
        if any(not 1 <= c <= 9 for c in numbers):
            raise ConfigError("criteria are numbered 1 to 9")
    out = _out_dir(args.out)
    seed = 20240601 if args.seed is None else args.seed
    results = run_suite(args.suite, seed=seed, threads=args.threads, numbers=numbers,
                        log=lambda msg: print(msg, flush=True))
    claims = []
    for r in results:
        for c in r.claims:
            entry = c.to_json()
            entry["criterion"] = r.number
            claims.append(entry)
    criteria = [{"criterion": r.number, "title": r.title, "skipped": r.skipped,
                 "passed": None if r.skipped else r.passed, "seconds": r.seconds} for r in results]
    write_report(out / "report.json", claims, {"suite": args.suite, "seed": seed, "criteria": criteria})
    ok = all(r.passed for r in results if not r.skipped)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}; wrote {out / 'report.json'}")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rieszgas", description="Circular Riesz gas laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="."):
        p.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides the config)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $RGL_THREADS, else 1)")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("kernel", help="tabulate g, g', g'' on a uniform grid")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--resolution", type=int, default=4096)
    common(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("transform", help="emit a test function and its transport map")
    p.add_argument("--kind", choices=("cosine", "indicator", "power"), required=True)
    p.add_argument("--param", type=float, required=True,
                   help="mode (cosine), half-width (indicator) or alpha (power)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--points", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("sample", help="run chains from a config file")
    p.add_argument("config")
    common(p, out_default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("analyze", help="recompute report.json from an existing run")
    p.add_argument("run")
    common(p, out_default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,2,9")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        return args.func(args)
    except RieszError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
