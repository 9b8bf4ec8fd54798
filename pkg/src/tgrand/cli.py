"""``tgrand`` command line.

Each experiment subcommand builds an :class:`ExperimentConfig` from an
optional config file plus flags (flags win), runs the harness, writes the
records (CSV on stdout unless ``--output`` is given) and prints a summary
table on stderr. ``trace-demo`` prints the first groups of both orderings.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .channel import ChannelParams
from .guessers import POLICIES, GuessBudget
from .harness import EXPERIMENTS, METHODS, ExperimentConfig
from .ordering import calc_prob_and_sort, trace_sorted_prob

SEED_ENV = "TGRAND_SEED"


class UsageError(ValueError):
    pass


def parse_range(text: str) -> tuple[int, ...]:
    """``"10..20"`` (inclusive), ``"12,16,20"`` or a single integer."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            values = tuple(range(lo, hi + 1))
        else:
            values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as an integer range") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return values


def parse_list(text: str, cast=float) -> tuple:
    try:
        return tuple(cast(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a comma list") from None


def load_config_file(path: str) -> dict:
    """JSON config, or the ``# config:`` echo line of an earlier CSV output."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return doc.get("config", doc) if "records" in doc else doc
    cfg, _ = harness.parse_results(text)
    if cfg is None:
        raise UsageError(f"config: no '# config:' line in {path}")
    return cfg


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file or an earlier CSV/JSON result file")
    p.add_argument("--K", type=int, help="source packets")
    p.add_argument("--N", type=parse_range, help="transmitted packets, e.g. 10..20 or 16,20 (default 2K)")
    p.add_argument("--epsilon", type=parse_list, help="bit error rate(s), comma list")
    p.add_argument("--lambda", dest="lambda_burst", type=parse_list, help="mean burst length(s)")
    p.add_argument("--B", type=lambda s: parse_list(s, int), help="bits per packet")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--methods", type=lambda s: parse_list(s, str), help="subset of " + ",".join(METHODS))
    p.add_argument("--l-th", type=int, help="trace mode: transition groups tried per column")
    p.add_argument("--max-queries", type=int, help="syndrome checks allowed per column")
    p.add_argument("--on-exhaustion", choices=POLICIES)
    p.add_argument("--n-cap", type=int, help="completion-delay: give up at this N")
    p.add_argument("--output", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgrand", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_experiment_flags(sub.add_parser(name, help=f"run the {name} experiment"))
    demo = sub.add_parser("trace-demo", help="print the first transition groups of both orderings")
    demo.add_argument("--p01", type=float, required=True)
    demo.add_argument("--p10", type=float, required=True)
    demo.add_argument("--L0", type=int, required=True)
    demo.add_argument("--L1", type=int, required=True)
    demo.add_argument("--count", type=int, default=10)
    return parser


def resolve_config(args) -> ExperimentConfig:
    base = load_config_file(args.config) if args.config else {}
    base.pop("experiment", None)
    seed = args.seed
    if seed is None and "master_seed" not in base and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"seed: ${SEED_ENV} must be an integer") from None
    flags = {
        "K": args.K, "N_values": args.N, "epsilon": args.epsilon, "lambda_burst": args.lambda_burst,
        "B": args.B, "trials": args.trials, "master_seed": seed, "methods": args.methods,
        "n_cap": args.n_cap,
    }
    merged = {**base, **{k: v for k, v in flags.items() if v is not None}}
    budget = dict(merged.pop("budget", {}) or {})
    for key, val in (("l_th", args.l_th), ("max_queries", args.max_queries), ("on_exhaustion", args.on_exhaustion)):
        if val is not None:
            budget[key] = val
    if "N_values" not in merged and "K" in merged:
        merged["N_values"] = (2 * merged["K"],)
    try:
        return ExperimentConfig.from_dict({**merged, "budget": GuessBudget(**budget)})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def summary_table(records) -> str:
    lines = []
    for r in records:
        head = f"{r.method:<17} eps={r.epsilon:<6g} lam={r.lambda_burst:<4g} B={r.B:<4d}"
        if r.experiment == "decoding-probability":
            lines.append(f"{head} N={r.N:<3d} P_dec={r.decoding_probability:.4f} +- {r.std_error:.4f}")
        elif r.experiment == "completion-delay":
            lines.append(f"{head} E(N)={r.mean_transmitted:.3f} +- {r.std_error:.3f}")
        elif r.experiment == "matrix-match":
            curve = " ".join(f"{l}:{p:.2f}" for l, p in sorted(r.match_probability_by_L.items()))
            lines.append(f"{head} N={r.N:<3d} match<=L {curve}")
        else:
            lines.append(f"{head} N={r.N:<3d} additions={r.mean_additions:.1f} ref={r.reference_additions:.1f}")
    return "\n".join(lines)


def run_experiment_command(args) -> int:
    cfg = resolve_config(args)
    records = harness.run_experiment(args.command, cfg, threads=args.threads)
    echo = {"experiment": args.command, **cfg.to_dict()}
    harness.emit_results(records, args.format, args.output, config=echo)
    print(summary_table(records), file=sys.stderr)
    return 0


def cmd_trace_demo(args) -> int:
    try:
        ChannelParams(args.p01, args.p10)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.L0 < 0 or args.L1 < 0 or args.count < 0:
        raise UsageError("L0, L1 and count must be >= 0")
    sorted_run = list(calc_prob_and_sort(args.p01, args.p10, args.L0, args.L1))[: args.count]
    traced = []
    for g in trace_sorted_prob(args.p01, args.p10, args.L0, args.L1):
        if len(traced) == args.count:
            break
        traced.append(g)
    print(f"{'#':>3}  {'sort (l0,l1)':>12} {'phi':>10}   {'trace (l0,l1)':>13} {'phi':>10}")
    for i, (a, b) in enumerate(zip(sorted_run, traced), 1):
        print(f"{i:>3}  {f'({a.l0},{a.l1})':>12} {a.phi:>10.6f}   {f'({b.l0},{b.l1})':>13} {b.phi:>10.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "trace-demo":
            return cmd_trace_demo(args)
        return run_experiment_command(args)
    except UsageError as exc:
        print(f"tgrand {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tgrand {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
