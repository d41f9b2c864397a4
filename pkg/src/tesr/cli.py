"""Command line front end.

Four subcommands cover the common workflows without writing Python:

  gen        write one synthetic study to CSV files in a directory
  bench      run a benchmark described by a JSON config, write result CSV
  dcov       print the unbiased distance covariance between two data files
  distances  print the functional-distance profile of the eight-source study

Every subcommand exits 0 on success and nonzero with a message on stderr
otherwise.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .dependence import dcov_u
from .harness import load_config, run_experiment, summarize, write_dataset, write_results
from .simgen import example3_distance_profile, gen_example1, gen_example2, gen_example3, gen_example_s1


def _load_matrix(path: str) -> np.ndarray:
    """Numeric CSV/whitespace file -> 2-D array; a non-numeric first line is
    treated as a header and skipped."""
    for skip in (0, 1):
        try:
            arr = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        except ValueError:
            if skip == 0:
                continue
            raise ValueError(f"{path}: could not parse numeric data") from None
        return arr
    raise ValueError(f"{path}: could not parse numeric data")


def _cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.example == "1":
        study = gen_example1(args.ns, args.n0, args.d, args.seed, args.ntest)
    elif args.example == "2":
        study = gen_example2(args.ns, args.n0, args.d, args.seed, args.ntest)
    elif args.example == "3":
        sources = args.sources or list(range(1, 9))
        study = gen_example3(args.departure, sources, args.ns, args.n0,
                             args.d, args.seed, args.ntest)
    else:
        study = gen_example_s1(args.ns, args.n0, args.d, args.seed, args.ntest)
    written = []
    for i, src in enumerate(study.sources, start=1):
        path = os.path.join(args.out, f"source_{i}.csv")
        write_dataset(src, path)
        written.append(path)
    multi = len(study.targets) > 1
    for k, (target, test) in enumerate(zip(study.targets, study.test_sets), start=1):
        suffix = f"_{k}" if multi else ""
        path = os.path.join(args.out, f"target{suffix}.csv")
        write_dataset(target, path)
        written.append(path)
        path = os.path.join(args.out, f"test{suffix}.csv")
        write_dataset(test, path)
        written.append(path)
    for path in written:
        print(path)
    return 0


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    rows = run_experiment(cfg)
    out = args.out or cfg.output
    if out is None:
        raise ValueError("no output path: pass --out or set 'output' in the config")
    write_results(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    for (method, metric), (mean, sd) in sorted(summarize(rows).items()):
        print(f"{method:>14s}  {metric}: {mean:.4f} (sd {sd:.4f})")
    return 0


def _cmd_dcov(args) -> int:
    u = _load_matrix(args.u)
    v = _load_matrix(args.v)
    print(format(dcov_u(u, v), ".17g"))
    return 0


def _cmd_distances(args) -> int:
    if args.example != "3":
        raise ValueError("distance profiles are only defined for example 3")
    profile = example3_distance_profile(args.departure, d=args.d, n_mc=args.nmc)
    for s, dist in profile:
        print(f"{s},{format(dist, '.17g')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tesr",
        description="Transfer learning with sufficient and domain-invariant "
                    "representations: data generation and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic study as CSV files")
    p_gen.add_argument("--example", required=True, choices=["1", "2", "3", "s1"])
    p_gen.add_argument("--ns", type=int, default=2000, help="rows per source")
    p_gen.add_argument("--n0", type=int, default=300, help="target rows")
    p_gen.add_argument("--d", type=int, required=True, help="covariate dimension")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--ntest", type=int, default=10_000)
    p_gen.add_argument("--departure", choices=["l1", "cosine"], default="l1",
                       help="source heterogeneity pattern (example 3)")
    p_gen.add_argument("--sources", type=int, nargs="+", default=None,
                       help="source indices to keep (example 3)")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_gen)

    p_bench = sub.add_parser("bench", help="run a benchmark from a JSON config")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", default=None, help="result CSV path")
    p_bench.set_defaults(func=_cmd_bench)

    p_dcov = sub.add_parser("dcov", help="unbiased distance covariance of two files")
    p_dcov.add_argument("--u", required=True, help="numeric CSV, rows are samples")
    p_dcov.add_argument("--v", required=True)
    p_dcov.set_defaults(func=_cmd_dcov)

    p_dist = sub.add_parser("distances",
                            help="functional distances of each source to the target")
    p_dist.add_argument("--example", required=True)
    p_dist.add_argument("--departure", required=True, choices=["l1", "cosine"])
    p_dist.add_argument("--d", type=int, default=20)
    p_dist.add_argument("--nmc", type=int, default=10**5)
    p_dist.set_defaults(func=_cmd_distances)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
