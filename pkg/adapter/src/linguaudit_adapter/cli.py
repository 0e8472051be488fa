"""Command line entry point: one subcommand per export operation."""

import argparse
import sys

from .config import AdapterError, load_config
from .export import (
    finetune_and_export_ensemble,
    finetune_and_export_generations,
    finetune_and_export_trajectories,
)


def cmd_generations(args) -> int:
    config = load_config(args.config)
    paths = finetune_and_export_generations(
        config, args.corpus, tuple(args.prompt_sizes), args.out
    )
    print(f"wrote {paths['generation_log']}")
    return 0


def cmd_ensemble(args) -> int:
    config = load_config(args.config)
    paths = finetune_and_export_ensemble(config, args.corpus, args.out, args.models)
    print(f"wrote {paths['losses']} and {paths['mask']}")
    return 0


def cmd_trajectories(args) -> int:
    config = load_config(args.config)
    paths = finetune_and_export_trajectories(config, args.corpus, args.out, args.epochs)
    print(f"wrote {paths['shadow']} and {paths['target']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML or JSON run config")
    common.add_argument("--corpus", required=True, help="corpus JSONL in the audit wire format")
    common.add_argument("--out", required=True, help="output directory")

    p = argparse.ArgumentParser(
        prog="linguaudit-adapter",
        description="Fine-tune real checkpoints and export audit-toolkit wire formats.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser(
        "generations", parents=[common],
        help="fine-tune a causal LM, log prompted continuations",
    )
    sp.add_argument(
        "--prompt-sizes", type=int, nargs="+", default=[5, 12, 25, 37],
        help="prompt lengths in whitespace tokens",
    )
    sp.set_defaults(func=cmd_generations)

    sp = sub.add_parser(
        "ensemble", parents=[common],
        help="train seeded classifiers, export losses.csv and mask.csv",
    )
    sp.add_argument("--models", type=int, default=None, help="override config n_models")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser(
        "trajectories", parents=[common],
        help="train shadow/target classifiers, export per-epoch confidences",
    )
    sp.add_argument("--epochs", type=int, default=None, help="override config epochs")
    sp.set_defaults(func=cmd_trajectories)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"linguaudit-adapter: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
