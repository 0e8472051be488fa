"""Command-line entry point.

Exit codes: 0 on success, 2 for caller errors (bad input, bad flags,
malformed files), 3 for internal invariant violations. argparse usage
errors also exit 2, which matches their caller-error meaning.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .corpus import (
    Corpus,
    assign_length_bins,
    corpus_jsonl_lines,
    load_corpus,
    synth_corpus,
    write_corpus_jsonl,
)
from .errors import AuditError, ContractError
from .extraction import write_generation_log
from .memorization import (
    counterfactual_scores,
    flag_memorized,
    read_loss_matrix,
    surface_cdfs,
    tail_mass,
    write_loss_matrix,
    write_scores_jsonl,
)
from .metrics import profile, read_profile, write_profile
from .mia import (
    evaluate_mia,
    read_trajectories,
    save_attack,
    separability_report,
    train_attack,
)
from .models import ensemble_loss_matrix
from .pipeline import (
    PipelineConfig,
    _extraction_artifacts,
    _mia_artifacts,
    run_extraction_stage,
    run_language_pipeline,
    run_mia_stage,
)
from .report import (
    Artifact,
    compute_correlations,
    emit,
    join,
    read_leakage,
)
from .svg import bar_chart

_FORMATS = ("json", "csv", "svg")


def _parse_formats(spec: str | None) -> tuple[str, ...] | None:
    if spec is None:
        return None
    parts = tuple(p.strip() for p in spec.split(",") if p.strip())
    bad = [p for p in parts if p not in _FORMATS]
    if bad:
        raise ContractError(
            f"unknown formats {bad}; choose from {', '.join(_FORMATS)}"
        )
    if not parts:
        raise ContractError("--format given but names no formats")
    return parts


def _require_out_dir(args) -> str:
    if not args.out:
        raise ContractError("this subcommand writes a directory; pass --out DIR")
    return args.out


def _load(args, path: str | None = None) -> Corpus:
    return load_corpus(
        path if path is not None else args.corpus,
        format=args.input_format,
        language=args.lang,
    )


def _table_artifacts(table) -> list[Artifact]:
    return [
        Artifact.from_table(table),
        Artifact.from_json(
            f"{table.name}.json",
            {
                "columns": list(table.columns),
                "col_types": list(table.col_types),
                "rows": [list(r) for r in table.rows],
            },
        ),
    ]


def cmd_metrics(args) -> int:
    corpus = _load(args)
    prof = profile(corpus, fallback_stemmer=True, fallback_proxy=True)
    if args.out:
        write_profile(prof, args.out)
    else:
        print(json.dumps(prof.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=False))
    return 0


def cmd_extract(args) -> int:
    out_dir = _require_out_dir(args)
    corpus = _load(args)
    config = PipelineConfig(
        seed=args.seed,
        prompt_sizes=tuple(args.prompt_sizes),
        min_match_len=args.min_match_len,
        near_threshold=args.near_threshold,
        ngram_order=args.order,
        max_new_tokens=args.max_new_tokens,
        n_samples=args.samples,
        n_jobs=args.jobs,
    )
    report, _, records = run_extraction_stage(corpus, config)
    os.makedirs(out_dir, exist_ok=True)
    write_generation_log(records, os.path.join(out_dir, "generation_log.jsonl"))
    emit(
        _extraction_artifacts(report),
        out_dir,
        formats=args.parsed_formats,
        extra_files=("generation_log.jsonl",),
    )
    return 0


def cmd_memorize(args) -> int:
    out_dir = _require_out_dir(args)
    if (args.losses is None) != (args.mask is None):
        raise ContractError("--losses and --mask must be given together")
    corpus = _load(args, args.corpus) if args.corpus else None
    os.makedirs(out_dir, exist_ok=True)
    extra: list[str] = []
    if args.losses is not None:
        lm = read_loss_matrix(args.losses, args.mask)
    else:
        if corpus is None:
            raise ContractError("give a corpus, or --losses/--mask from another model")
        binned = assign_length_bins(corpus, n_bins=args.bins)
        lm = ensemble_loss_matrix(
            binned,
            n_models=args.models,
            seed=args.seed,
            epochs=args.epochs,
        )
        write_loss_matrix(
            lm, os.path.join(out_dir, "losses.csv"), os.path.join(out_dir, "mask.csv")
        )
        extra.extend(["losses.csv", "mask.csv"])
    scores = counterfactual_scores(lm)
    flagged, threshold = flag_memorized(scores, percentile=args.percentile)
    mass = tail_mass(flagged, threshold=args.tail_threshold)
    write_scores_jsonl(flagged, os.path.join(out_dir, "scores.jsonl"))
    extra.append("scores.jsonl")
    artifacts = [
        Artifact.from_json(
            "memorization_summary.json",
            {
                "n_docs": len(flagged),
                "n_flagged": sum(1 for s in flagged if s.flagged),
                "flag_threshold": threshold,
                "percentile": args.percentile,
                "tail_threshold": args.tail_threshold,
                "tail_mass": mass,
            },
        )
    ]
    if corpus is not None:
        surf = surface_cdfs(corpus, flagged)
        artifacts.append(Artifact.from_json("surface_cdfs.json", surf.to_json_dict()))
    emit(artifacts, out_dir, formats=args.parsed_formats, extra_files=tuple(extra))
    return 0


def cmd_mia(args) -> int:
    out_dir = _require_out_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    if (args.shadow is None) != (args.target is None):
        raise ContractError("--shadow and --target must be given together")
    if args.shadow is not None:
        shadow = read_trajectories(args.shadow)
        target = read_trajectories(args.target)
        attack = train_attack(
            shadow, n_rounds=args.rounds, learning_rate=args.learning_rate
        )
        result = evaluate_mia(attack, target, allow_overlap=args.allow_overlap)
        sep = separability_report(target)
    elif args.corpus:
        corpus = _load(args)
        binned = assign_length_bins(corpus, n_bins=args.bins)
        config = PipelineConfig(
            seed=args.seed,
            n_bins=args.bins,
            mia_epochs=args.epochs,
            attack_rounds=args.rounds,
            attack_lr=args.learning_rate,
        )
        result, sep, attack, _, _ = run_mia_stage(binned, config)
    else:
        raise ContractError("give a corpus, or --shadow/--target trajectory files")
    save_attack(attack, os.path.join(out_dir, "attack.json"))
    emit(
        _mia_artifacts(result, sep),
        out_dir,
        formats=args.parsed_formats,
        extra_files=("attack.json",),
    )
    return 0


def cmd_report(args) -> int:
    out_dir = _require_out_dir(args)
    profiles = [read_profile(p) for p in args.profiles]
    summaries = [read_leakage(p) for p in args.leakage]
    joined = join(profiles, summaries)
    corr = compute_correlations(profiles, summaries)
    artifacts = _table_artifacts(joined) + _table_artifacts(corr)
    by_measure: dict[str, list[tuple[str, float]]] = {}
    for ind, measure, rho, _n in corr.rows:
        if rho is not None:
            by_measure.setdefault(measure, []).append((ind, rho))
    for measure in sorted(by_measure):
        pairs = by_measure[measure]
        artifacts.append(
            Artifact.from_svg(
                f"correlation_{measure}.svg",
                bar_chart(
                    [ind for ind, _ in pairs],
                    [rho for _, rho in pairs],
                    title=f"Indicator correlation with {measure}",
                    y_label="spearman rho",
                ),
            )
        )
    emit(artifacts, out_dir, formats=args.parsed_formats)
    return 0


def cmd_synth(args) -> int:
    if args.min_len > args.max_len:
        raise ContractError(
            f"--min-len {args.min_len} exceeds --max-len {args.max_len}"
        )
    corpus = synth_corpus(
        n_docs=args.docs,
        vocab_size=args.vocab,
        redundancy_knob=args.redundancy,
        inflection_knob=args.inflection,
        seed=args.seed,
        doc_len=(args.min_len, args.max_len),
    )
    if args.out:
        write_corpus_jsonl(corpus, args.out)
    else:
        for line in corpus_jsonl_lines(corpus):
            print(line)
    return 0


def _relabel(corpus: Corpus, lang: str) -> Corpus:
    docs = tuple(replace(d, language=lang) for d in corpus.docs)
    return replace(corpus, language=lang, docs=docs)


def cmd_e2e_toy(args) -> int:
    out_dir = _require_out_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    config = PipelineConfig(
        seed=args.seed,
        prompt_sizes=(5, 12),
        max_new_tokens=40,
        n_samples=2,
        n_models=6,
        ensemble_epochs=8,
        mia_epochs=8,
        attack_rounds=60,
        feature_dim=1024,
    )
    knobs = (0.15, 0.55, 0.9)
    profiles, summaries = [], []
    for i, knob in enumerate(knobs):
        lang = f"syn{i}"
        corpus = _relabel(
            synth_corpus(
                n_docs=120,
                vocab_size=250,
                redundancy_knob=knob,
                inflection_knob=2.0,
                seed=args.seed + i,
                doc_len=(15, 28),
            ),
            lang,
        )
        result = run_language_pipeline(
            corpus, config, out_dir=os.path.join(out_dir, lang)
        )
        profiles.append(result.profile)
        summaries.append(result.summary)
        print(
            f"{lang}: redundancy_knob={knob} "
            f"extracted={ {k: v['unique'] for k, v in sorted(result.extraction.per_size.items())} } "
            f"tail_mass={result.summary.memorization_tail_mass:.4f} "
            f"mia_accuracy={result.summary.mia_accuracy:.3f}"
        )
    joined = join(profiles, summaries)
    corr = compute_correlations(profiles, summaries)
    emit(
        _table_artifacts(joined) + _table_artifacts(corr),
        out_dir,
        formats=args.parsed_formats,
    )
    print(f"cross-language tables written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lang", default=None, help="language tag for TSV input")
    common.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument(
        "--format",
        default=None,
        help="comma-separated artifact formats to keep: json,csv,svg (default all)",
    )

    corpus_opts = argparse.ArgumentParser(add_help=False)
    corpus_opts.add_argument(
        "--input-format",
        default="jsonl",
        choices=("jsonl", "tsv"),
        help="corpus file format (default jsonl)",
    )

    p = argparse.ArgumentParser(
        prog="linguaudit",
        description="Corpus-structure indicators and toy-model leakage probes.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser(
        "metrics",
        parents=[common, corpus_opts],
        help="profile one corpus (six indicators plus shape stats)",
    )
    sp.add_argument("corpus", help="corpus file")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser(
        "extract",
        parents=[common, corpus_opts],
        help="prompt a toy model with training prefixes, detect reproductions",
    )
    sp.add_argument("corpus", help="training corpus file")
    sp.add_argument(
        "--prompt-sizes",
        type=int,
        nargs="+",
        default=[5, 12, 25, 37],
        help="prompt lengths in tokens",
    )
    sp.add_argument("--min-match-len", type=int, default=10)
    sp.add_argument("--near-threshold", type=float, default=0.1)
    sp.add_argument("--order", type=int, default=5, help="n-gram order")
    sp.add_argument("--max-new-tokens", type=int, default=60)
    sp.add_argument(
        "--samples",
        type=int,
        default=0,
        help="sampled generations per prompt on top of the greedy one",
    )
    sp.add_argument("--jobs", type=int, default=1, help="detection threads")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser(
        "memorize",
        parents=[common, corpus_opts],
        help="counterfactual memorization scores from an ensemble loss matrix",
    )
    sp.add_argument("corpus", nargs="?", default=None, help="corpus file (optional with --losses)")
    sp.add_argument("--losses", default=None, help="losses.csv from an external model")
    sp.add_argument("--mask", default=None, help="mask.csv aligned with --losses")
    sp.add_argument("--models", type=int, default=10, help="ensemble size")
    sp.add_argument("--epochs", type=int, default=12)
    sp.add_argument("--bins", type=int, default=9, help="length-bin count")
    sp.add_argument("--percentile", type=float, default=0.95)
    sp.add_argument("--tail-threshold", type=float, default=0.02)
    sp.set_defaults(func=cmd_memorize)

    sp = sub.add_parser(
        "mia",
        parents=[common, corpus_opts],
        help="shadow-model membership inference over confidence trajectories",
    )
    sp.add_argument("corpus", nargs="?", default=None, help="corpus file (optional with --shadow/--target)")
    sp.add_argument("--shadow", default=None, help="shadow trajectory JSONL")
    sp.add_argument("--target", default=None, help="target trajectory JSONL")
    sp.add_argument("--rounds", type=int, default=150, help="boosting rounds")
    sp.add_argument("--learning-rate", type=float, default=0.1)
    sp.add_argument("--epochs", type=int, default=20, help="classifier epochs (corpus mode)")
    sp.add_argument("--bins", type=int, default=9, help="length-bin count (corpus mode)")
    sp.add_argument(
        "--allow-overlap",
        action="store_true",
        help="evaluate even when target docs appeared in the shadow split",
    )
    sp.set_defaults(func=cmd_mia)

    sp = sub.add_parser(
        "report",
        parents=[common],
        help="join profiles with leakage summaries, correlate, render tables",
    )
    sp.add_argument("--profiles", nargs="+", required=True, help="profile JSON files")
    sp.add_argument("--leakage", nargs="+", required=True, help="leakage summary JSON files")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser(
        "synth",
        parents=[common],
        help="generate a synthetic annotated corpus with tunable structure",
    )
    sp.add_argument("--docs", type=int, default=100)
    sp.add_argument("--vocab", type=int, default=200)
    sp.add_argument("--redundancy", type=float, default=0.5)
    sp.add_argument("--inflection", type=float, default=1.0)
    sp.add_argument("--min-len", type=int, default=8)
    sp.add_argument("--max-len", type=int, default=24)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser(
        "e2e-toy",
        parents=[common],
        help="full pipeline over three synthetic corpora plus a cross-language report",
    )
    sp.set_defaults(func=cmd_e2e_toy)

    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.parsed_formats = _parse_formats(args.format)
        return args.func(args)
    except AuditError as exc:
        print(f"linguaudit: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
