"""Command-line front end.

Results go to stdout as JSON; bulk data (curves, histograms, tables) goes to
files. Exit status: 0 success, 2 usage error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .crossings import write_curves_csv
from .harness import (
    ExperimentSpec,
    detect,
    run_experiment,
    write_json,
)
from .matchengine import compute_match_lengths, estimate_entropy
from .sequence import POLICIES, change_index, concatenate, decode, read_source
from .sources import IidSource, MarkovSource, make_rng, sample_source

EVAL_RANGE_NOTE = "psi is evaluated on cuts j = 1..n-1 (j = 0 is undefined for the right-left curve)"


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _parse_source(text: str):
    """``iid:0.1,0.3,0.6`` or ``markov:0.1,0.5,0.4;0.3,0.4,0.3;0.5,0.3,0.2``."""
    kind, _, body = text.partition(":")
    try:
        if kind == "iid":
            return IidSource(np.array([float(v) for v in body.split(",")]))
        if kind == "markov":
            rows = [[float(v) for v in r.split(",")] for r in body.split(";")]
            return MarkovSource(np.array(rows))
    except ValueError as e:
        raise UsageError(f"bad source {text!r}: {e}") from e
    raise UsageError(f"bad source {text!r}; expected iid:<probs> or markov:<rows>")


# ---------------------------------------------------------------- commands


def cmd_detect(args) -> int:
    x = read_source(args.input, args.policy)
    curves, est = detect(x, args.seed)
    if args.curve:
        write_curves_csv(curves, args.curve)
    _emit(
        {
            "n": x.n,
            "alphabet_size": x.alphabet_size,
            "j_star": est.j_star,
            "gamma_hat": est.gamma_hat,
            "psi_min": est.psi_min,
            "seed": args.seed,
            "note": EVAL_RANGE_NOTE,
        }
    )
    return 0


def cmd_entropy(args) -> int:
    x = read_source(args.input, args.policy)
    if x.n < 16:
        raise UsageError("entropy estimate needs at least 16 symbols")
    est = estimate_entropy(compute_match_lengths(x))
    _emit({"n": x.n, "alphabet_size": x.alphabet_size, "bits_per_symbol": est})
    return 0


def cmd_concat(args) -> int:
    a = read_source(args.first, args.policy)
    b = read_source(args.second, args.policy)
    x, c = concatenate(a, b)
    Path(args.output).write_bytes(decode(x))
    _emit({"n": x.n, "change_index": c, "gamma": c / x.n, "output": str(args.output)})
    return 0


def cmd_generate(args) -> int:
    if args.n < 2:
        raise UsageError("-n must be at least 2")
    rng = make_rng(args.seed)
    left = _parse_source(args.left)
    if args.right is None:
        x = sample_source(left, args.n, rng)
        c = None
    else:
        if args.gamma is None:
            raise UsageError("--right needs --gamma")
        _check_gamma(args.gamma)
        c = change_index(args.n, args.gamma)
        right = _parse_source(args.right)
        x, _ = concatenate(sample_source(left, c, rng), sample_source(right, args.n - c, rng))
    if x.alphabet_size > 26:
        raise UsageError("generate writes letters and supports at most 26 symbols")
    Path(args.output).write_bytes((x.symbols + ord("a")).astype(np.uint8).tobytes())
    _emit({"n": x.n, "change_index": c, "output": str(args.output), "seed": args.seed})
    return 0


def _check_gamma(g: Optional[float]) -> None:
    if g is not None and not 0.0 < g < 1.0:
        raise UsageError(f"--gamma must lie in (0, 1), got {g}")


def _check_common(args) -> None:
    _check_gamma(getattr(args, "gamma", None))
    for name in ("alpha_l", "alpha_r"):
        v = getattr(args, name, None)
        if v is not None and not 0.0 <= v <= 1.0:
            raise UsageError(f"--{name.replace('_', '-')} must lie in [0, 1], got {v}")
    trials = getattr(args, "trials", None)
    if trials is not None and trials < 1:
        raise UsageError("--trials must be at least 1")
    if getattr(args, "threads", 1) < 1:
        raise UsageError("--threads must be at least 1")
    n = getattr(args, "n", None)
    if n is not None and n < 2:
        raise UsageError("-n must be at least 2")


def cmd_simulate(args) -> int:
    if args.kind == "null" and not 0.0 < args.alpha < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    if args.s <= 0 or any(s <= 0 for s in args.s_grid):
        raise UsageError("-s and --s-grid values must be positive")
    spec = ExperimentSpec(
        kind=args.kind,
        n=args.n,
        gamma=args.gamma,
        trials=args.trials,
        seed=args.seed,
        alpha=args.alpha,
        s=args.s,
        alpha_l=args.alpha_l,
        alpha_r=args.alpha_r,
        s_grid=list(args.s_grid),
    )
    return _run_spec(spec, args)


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    if args.trials is not None:
        spec.trials = args.trials
    return _run_spec(spec, args)


def _run_spec(spec: ExperimentSpec, args) -> int:
    out = Path(args.out) if args.out else None
    if out is not None and args.format == "json":
        man = run_experiment(spec, None, args.threads)
        out.mkdir(parents=True, exist_ok=True)
        write_json(man, out / "manifest.json")
    else:
        man = run_experiment(spec, out, args.threads)
    results = dict(man["results"])
    results.pop("gamma_hats", None)
    results.pop("psi_mins", None)
    _emit({"kind": spec.kind, "seed": spec.seed, "out": str(out) if out else None, "results": results})
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (non-negative integer, default 0)")

    trials = argparse.ArgumentParser(add_help=False)
    trials.add_argument("--trials", type=int, default=100, help="number of Monte Carlo trials (default 100)")
    trials.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it (default 1)")
    trials.add_argument("--out", help="output directory for CSV artifacts and manifest.json")
    trials.add_argument("--format", choices=("csv", "json"), default="csv", help="csv: tables plus manifest; json: manifest only")

    policy = argparse.ArgumentParser(add_help=False)
    policy.add_argument(
        "--policy",
        choices=POLICIES,
        default="identity",
        help="byte encoding: identity (byte values), dense (distinct bytes -> 0..k-1), letters (lowercase a-z only)",
    )

    p = argparse.ArgumentParser(prog="creche", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser(
        "detect",
        parents=[common, policy],
        help="estimate the change ratio of a file",
        description="Estimate the change ratio gamma_hat = j*/n of one sequence. " + EVAL_RANGE_NOTE + ".",
    )
    d.add_argument("input", help="input file, or - for standard input (read as raw bytes)")
    d.add_argument("--curve", help="write per-cut counts and psi curves to this CSV")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser(
        "entropy",
        parents=[common, policy],
        help="match-length entropy estimate in bits per symbol",
        description="Entropy estimate n*log2(n)/sum(L_i) in bits per symbol; needs at least 16 symbols.",
    )
    e.add_argument("input", help="input file, or - for standard input")
    e.set_defaults(func=cmd_entropy)

    c = sub.add_parser("concat", parents=[common, policy], help="join two files and report the change index")
    c.add_argument("first")
    c.add_argument("second")
    c.add_argument("-o", "--output", required=True, help="where to write the joined, re-encoded bytes")
    c.set_defaults(func=cmd_concat)

    g = sub.add_parser(
        "generate",
        parents=[common],
        help="sample a synthetic sequence (written as letters a, b, c, ...)",
        description="Sources: iid:p0,p1,... or markov:row0;row1;... (rows comma separated).",
    )
    g.add_argument("-n", type=int, required=True, help="total length in symbols")
    g.add_argument("--left", required=True, help="source before the change (or the only source)")
    g.add_argument("--right", help="source after the change")
    g.add_argument("--gamma", type=float, help="change ratio in (0, 1); split at round(n*gamma)")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser(
        "simulate",
        parents=[common, trials],
        help="Monte Carlo runs of the null model or Graph Model B",
        description="null: uniform targets, Doob band check on sup |psi_lr|. "
        "model-b: piecewise-uniform targets, consistency table P(|gamma_hat-gamma| >= s/sqrt(n)) vs min(1, K/s^2).",
    )
    s.add_argument("kind", choices=("null", "model-b"))
    s.add_argument("-n", type=int, default=10_000, help="sequence length (default 10000)")
    s.add_argument("--gamma", type=float, default=0.4, help="model-b change ratio in (0, 1) (default 0.4)")
    s.add_argument("--alpha-l", type=float, default=0.2, help="model-b left cross weight in [0, 1] (default 0.2)")
    s.add_argument("--alpha-r", type=float, default=0.2, help="model-b right cross weight in [0, 1] (default 0.2)")
    s.add_argument("--alpha", type=float, default=0.5, help="null: band covers j <= n(1-alpha), alpha in (0, 1) (default 0.5)")
    s.add_argument("-s", type=float, default=3.0, help="null: threshold s in units of 1/sqrt(n) (default 3)")
    s.add_argument("--s-grid", type=float, nargs="+", default=[2.0, 4.0, 8.0], help="model-b: s values (default 2 4 8)")
    s.set_defaults(func=cmd_simulate)

    x = sub.add_parser(
        "experiment",
        parents=[trials],
        help="run an experiment described by a JSON spec file",
        description="Kinds: null, model-b, graph-a-synthetic, graph-a-text. --seed/--trials override the file.",
    )
    x.add_argument("spec", help="JSON experiment spec")
    x.add_argument("--seed", type=int, default=None, help="override the spec's master seed")
    x.set_defaults(func=cmd_experiment, trials=None)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise UsageError("--seed must be non-negative")
        _check_common(args)
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (OSError, ValueError, KeyError) as e:
        print(f"creche: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
