"""End-to-end audit of one corpus: indicators, then all three attack families.

The pipeline is a thin composition layer; every stage is an importable
function with its own tests. Determinism policy: every stochastic stage
receives a seed derived from the run seed by a fixed, documented offset or
content hash, never from global state.
"""

from __future__ import annotations

import logging
import os
import zlib
from dataclasses import dataclass, field

from .corpus import Corpus, assign_length_bins, split_corpus, subset
from .errors import ContractError
from .extraction import (
    ExtractionMatch,
    ExtractionReport,
    GenerationRecord,
    build_index,
    build_prompts,
    detect_many,
    extraction_report,
    write_generation_log,
)
from .memorization import (
    CounterfactualScore,
    SurfaceCdfs,
    audit_label_distribution,
    counterfactual_scores,
    flag_memorized,
    surface_cdfs,
    tail_mass,
    write_loss_matrix,
    write_scores_jsonl,
)
from .metrics import LinguisticProfile, profile
from .mia import (
    MiaResult,
    SeparabilityReport,
    collect_trajectories,
    evaluate_mia,
    save_attack,
    separability_report,
    train_attack,
    write_trajectories,
)
from .models import BinClassifier, NGramModel, ensemble_loss_matrix
from .report import Artifact, LeakageSummary, emit
from .svg import bar_chart, cdf_chart, line_chart

log = logging.getLogger(__name__)

# fixed offsets keep the per-stage seeds distinct for one run seed
_POOL_SEED_OFFSET = 7919
_MEMBER_SEED_OFFSET = 104729
_SHADOW_CLF_OFFSET = 11
_TARGET_CLF_OFFSET = 13


@dataclass
class PipelineConfig:
    seed: int = 0
    train_fraction: float = 0.8
    n_bins: int = 9
    # extraction
    prompt_sizes: tuple[int, ...] = (5, 12, 25, 37)
    min_match_len: int = 10
    near_threshold: float = 0.1
    ngram_order: int = 5
    ngram_smoothing: float = 0.01
    max_new_tokens: int = 60
    n_samples: int = 0  # sampled generations per prompt on top of the greedy one
    n_jobs: int = 1
    # counterfactual memorization
    n_models: int = 10
    inclusion_prob: float = 0.5
    ensemble_epochs: int = 12
    percentile: float = 0.95
    tail_threshold: float = 0.02
    # membership inference
    mia_epochs: int = 20
    attack_rounds: int = 150
    attack_lr: float = 0.1
    # shared classifier settings
    feature_dim: int = 4096
    lr: float = 2.0

    def __post_init__(self):
        self.prompt_sizes = tuple(self.prompt_sizes)
        if not self.prompt_sizes:
            raise ContractError("prompt_sizes must not be empty")
        if any(k < 1 for k in self.prompt_sizes):
            raise ContractError(f"prompt sizes must be >= 1: {self.prompt_sizes}")
        if len(set(self.prompt_sizes)) != len(self.prompt_sizes):
            raise ContractError(f"duplicate prompt sizes: {self.prompt_sizes}")
        if self.n_samples < 0:
            raise ContractError(f"n_samples must be >= 0, got {self.n_samples}")


@dataclass
class PipelineResult:
    profile: LinguisticProfile
    extraction: ExtractionReport
    matches: list[ExtractionMatch]
    generation_records: list[GenerationRecord]
    scores: list[CounterfactualScore]
    memorization_threshold: float
    surface: SurfaceCdfs
    label_hist: list[int]
    mia: MiaResult
    separability: SeparabilityReport
    summary: LeakageSummary
    artifacts: list[Artifact] = field(default_factory=list)


def _sample_seed(seed: int, k: int, doc_id: str, sample: int) -> int:
    return zlib.crc32(f"{seed}|{k}|{doc_id}|{sample}".encode("utf-8"))


def run_extraction_stage(
    train: Corpus, config: PipelineConfig
) -> tuple[ExtractionReport, list[ExtractionMatch], list[GenerationRecord]]:
    """Prompt the n-gram model with training prefixes and detect reproductions."""
    lm = NGramModel(order=config.ngram_order, smoothing=config.ngram_smoothing).fit(
        train
    )
    index = build_index(train, seed_ngram=config.ngram_order)
    gens: list[str] = []
    specs = []
    records: list[GenerationRecord] = []
    attempts: dict[int, int] = {}
    for k in config.prompt_sizes:
        k_specs = build_prompts(train, k, min_match_len=config.min_match_len)
        attempts[k] = len(k_specs) * (1 + config.n_samples)
        for spec in k_specs:
            toks = lm.generate(spec.prompt_tokens, config.max_new_tokens)
            text = " ".join(toks)
            gens.append(text)
            specs.append(spec)
            records.append(
                GenerationRecord(
                    doc_id=spec.doc_id,
                    prompt_size=k,
                    prompt=spec.prompt_text,
                    generation=text,
                    model_id="ngram-greedy",
                )
            )
            for s in range(1, config.n_samples + 1):
                toks = lm.generate(
                    spec.prompt_tokens,
                    config.max_new_tokens,
                    mode="sample",
                    seed=_sample_seed(config.seed, k, spec.doc_id, s),
                )
                text = " ".join(toks)
                gens.append(text)
                specs.append(spec)
                records.append(
                    GenerationRecord(
                        doc_id=spec.doc_id,
                        prompt_size=k,
                        prompt=spec.prompt_text,
                        generation=text,
                        model_id=f"ngram-sample-{s}",
                    )
                )
        log.info("prompt size %d: %d attempts", k, attempts[k])
    maybe = detect_many(
        gens,
        specs,
        index,
        min_match_len=config.min_match_len,
        near_threshold=config.near_threshold,
        n_jobs=config.n_jobs,
    )
    matches = [m for m in maybe if m is not None]
    report = extraction_report(maybe, train, list(config.prompt_sizes), attempts)
    return report, matches, records


def run_memorization_stage(
    binned: Corpus, config: PipelineConfig
) -> tuple[list[CounterfactualScore], float, float, SurfaceCdfs, list[int], object]:
    """Ensemble counterfactual scores, tail statistics, and audit surfaces."""
    lm = ensemble_loss_matrix(
        binned,
        n_models=config.n_models,
        inclusion_prob=config.inclusion_prob,
        seed=config.seed,
        epochs=config.ensemble_epochs,
        dim=config.feature_dim,
        lr=config.lr,
    )
    scores = counterfactual_scores(lm)
    flagged, threshold = flag_memorized(scores, percentile=config.percentile)
    mass = tail_mass(flagged, threshold=config.tail_threshold)
    surf = surface_cdfs(binned, flagged)
    hist = audit_label_distribution(binned, n_bins=config.n_bins)
    return flagged, threshold, mass, surf, hist, lm


def run_mia_stage(
    binned: Corpus, config: PipelineConfig
) -> tuple[MiaResult, SeparabilityReport, object, list, list]:
    """Disjoint shadow/target pools, one classifier each, boosted-stump attack."""
    pools = split_corpus(binned, 0.5, seed=config.seed + _POOL_SEED_OFFSET)
    target_pool = subset(pools, "train")
    shadow_pool = subset(pools, "test")
    if len(target_pool.docs) < 4 or len(shadow_pool.docs) < 4:
        raise ContractError(
            "too few documents for a shadow-model evaluation "
            f"(target={len(target_pool.docs)}, shadow={len(shadow_pool.docs)})"
        )

    def members(pool: Corpus, salt: int) -> list[str]:
        inner = split_corpus(pool, 0.5, seed=config.seed + _MEMBER_SEED_OFFSET + salt)
        return subset(inner, "train").doc_ids()

    shadow_clf = BinClassifier(
        n_classes=config.n_bins,
        dim=config.feature_dim,
        epochs=config.mia_epochs,
        lr=config.lr,
        seed=config.seed + _SHADOW_CLF_OFFSET,
    ).fit(shadow_pool, members(shadow_pool, 0))
    target_clf = BinClassifier(
        n_classes=config.n_bins,
        dim=config.feature_dim,
        epochs=config.mia_epochs,
        lr=config.lr,
        seed=config.seed + _TARGET_CLF_OFFSET,
    ).fit(target_pool, members(target_pool, 1))

    shadow_trajs = collect_trajectories(shadow_clf, shadow_pool)
    target_trajs = collect_trajectories(target_clf, target_pool)
    attack = train_attack(
        shadow_trajs,
        n_rounds=config.attack_rounds,
        learning_rate=config.attack_lr,
    )
    result = evaluate_mia(attack, target_trajs)
    sep = separability_report(target_trajs)
    return result, sep, attack, shadow_trajs, target_trajs


def _extraction_artifacts(report: ExtractionReport) -> list[Artifact]:
    arts = [Artifact.from_json("extraction_report.json", report.to_json_dict())]
    sizes = sorted(report.per_size)
    arts.append(
        Artifact.from_svg(
            "extraction_counts.svg",
            bar_chart(
                [str(k) for k in sizes],
                [float(report.per_size[k]["unique"]) for k in sizes],
                title="Unique extractions by prompt size",
                y_label="unique extracted spans",
            ),
        )
    )
    series = {"all train docs": [(x, y) for x, y in report.all_cdf]}
    if report.extracted_cdf:
        series["extracted docs"] = [(x, y) for x, y in report.extracted_cdf]
    arts.append(
        Artifact.from_svg(
            "extraction_length_cdf.svg",
            cdf_chart(series, title="Document length CDF", x_label="tokens"),
        )
    )
    return arts


def _memorization_artifacts(
    scores: list[CounterfactualScore],
    threshold: float,
    mass: float,
    surf: SurfaceCdfs,
    hist: list[int],
    config: PipelineConfig,
) -> list[Artifact]:
    arts = [
        Artifact.from_json(
            "memorization_summary.json",
            {
                "n_docs": len(scores),
                "n_flagged": sum(1 for s in scores if s.flagged),
                "flag_threshold": threshold,
                "percentile": config.percentile,
                "tail_threshold": config.tail_threshold,
                "tail_mass": mass,
            },
        ),
        Artifact.from_json("surface_cdfs.json", surf.to_json_dict()),
        Artifact.from_json("label_distribution.json", {"counts": hist}),
        Artifact.from_svg(
            "label_distribution.svg",
            bar_chart(
                [str(i) for i in range(len(hist))],
                [float(c) for c in hist],
                title="Documents per length bin",
                y_label="documents",
            ),
        ),
    ]
    series = {"all docs": [(x, y) for x, y in surf.all["word_count"]]}
    if surf.flagged is not None:
        series["flagged docs"] = [(x, y) for x, y in surf.flagged["word_count"]]
    arts.append(
        Artifact.from_svg(
            "memorization_word_count_cdf.svg",
            cdf_chart(series, title="Word-count CDF", x_label="words"),
        )
    )
    return arts


def _mia_artifacts(mia: MiaResult, sep: SeparabilityReport) -> list[Artifact]:
    centers = [
        (sep.bin_edges[i] + sep.bin_edges[i + 1]) / 2
        for i in range(len(sep.bin_edges) - 1)
    ]
    return [
        Artifact.from_json("mia_result.json", mia.to_json_dict()),
        Artifact.from_json("separability.json", sep.to_json_dict()),
        Artifact.from_svg(
            "separability.svg",
            line_chart(
                {
                    "members": list(zip(centers, sep.p_in)),
                    "non-members": list(zip(centers, sep.p_out)),
                },
                title=f"Top-class confidence by membership (epoch {sep.epoch})",
                x_label="confidence",
                y_label="fraction of docs",
            ),
        ),
    ]


def run_language_pipeline(
    corpus: Corpus,
    config: PipelineConfig | None = None,
    out_dir: str | None = None,
) -> PipelineResult:
    """Profile one corpus and run all three leakage probes against toy models.

    With out_dir set, also writes every wire-format log and report artifact
    plus a manifest of their digests.
    """
    config = config or PipelineConfig()
    if not corpus.docs:
        raise ContractError("pipeline needs a non-empty corpus")
    log.info("pipeline start: lang=%s docs=%d", corpus.language, len(corpus.docs))

    binned = assign_length_bins(corpus, n_bins=config.n_bins)
    split = split_corpus(binned, config.train_fraction, seed=config.seed)
    train = subset(split, "train")
    if not train.docs:
        raise ContractError(
            f"train split is empty at train_fraction={config.train_fraction}"
        )

    prof = profile(corpus, fallback_stemmer=True, fallback_proxy=True)
    log.info("profile done: %d tokens, %d types", prof.n_tokens, prof.n_types)

    ext_report, matches, records = run_extraction_stage(train, config)
    log.info(
        "extraction done: %d matches over %d generations",
        len(matches),
        len(records),
    )

    scores, threshold, mass, surf, hist, loss_matrix = run_memorization_stage(
        binned, config
    )
    log.info(
        "memorization done: %d/%d flagged, tail mass %.4f",
        sum(1 for s in scores if s.flagged),
        len(scores),
        mass,
    )

    mia, sep, attack, shadow_trajs, target_trajs = run_mia_stage(binned, config)
    log.info("mia done: accuracy %.3f overlap %.3f", mia.accuracy, sep.overlap)

    summary = LeakageSummary(
        lang=corpus.language,
        extraction_unique={
            k: v["unique"] for k, v in ext_report.per_size.items()
        },
        extraction_attempts={
            k: v["attempts"] for k, v in ext_report.per_size.items()
        },
        memorization_tail_mass=mass,
        memorization_threshold=threshold,
        mia_accuracy=mia.accuracy,
        mia_precision_in=mia.precision_in,
        mia_precision_out=mia.precision_out,
        mia_overlap=sep.overlap,
    )

    artifacts = [
        Artifact.from_json("profile.json", prof.to_json_dict()),
        Artifact.from_json("leakage_summary.json", summary.to_json_dict()),
    ]
    artifacts.extend(_extraction_artifacts(ext_report))
    artifacts.extend(_memorization_artifacts(scores, threshold, mass, surf, hist, config))
    artifacts.extend(_mia_artifacts(mia, sep))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_generation_log(records, os.path.join(out_dir, "generation_log.jsonl"))
        write_loss_matrix(
            loss_matrix,
            os.path.join(out_dir, "losses.csv"),
            os.path.join(out_dir, "mask.csv"),
        )
        write_scores_jsonl(scores, os.path.join(out_dir, "scores.jsonl"))
        write_trajectories(
            shadow_trajs, os.path.join(out_dir, "trajectories_shadow.jsonl")
        )
        write_trajectories(
            target_trajs, os.path.join(out_dir, "trajectories_target.jsonl")
        )
        save_attack(attack, os.path.join(out_dir, "attack.json"))
        emit(
            artifacts,
            out_dir,
            extra_files=(
                "generation_log.jsonl",
                "losses.csv",
                "mask.csv",
                "scores.jsonl",
                "trajectories_shadow.jsonl",
                "trajectories_target.jsonl",
                "attack.json",
            ),
        )
        log.info("wrote artifacts to %s", out_dir)

    return PipelineResult(
        profile=prof,
        extraction=ext_report,
        matches=matches,
        generation_records=records,
        scores=scores,
        memorization_threshold=threshold,
        surface=surf,
        label_hist=hist,
        mia=mia,
        separability=sep,
        summary=summary,
        artifacts=artifacts,
    )
