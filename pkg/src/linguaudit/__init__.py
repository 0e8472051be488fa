"""Corpus-structure indicators and toy-model privacy-leakage probes.

The package measures six structural properties of a text corpus and runs
three leakage probes against small, fully deterministic models trained on
it: prompted reproduction of training spans, counterfactual memorization
scoring over a model ensemble, and shadow-model membership inference over
training-dynamics trajectories. Everything is seeded; byte-identical
inputs and seeds give byte-identical outputs.
"""

from .boosting import StumpBoostClassifier
from .corpus import (
    Corpus,
    Document,
    Provenance,
    Token,
    assign_length_bins,
    corpus_digest,
    load_corpus,
    make_document,
    quantile_bin_edges,
    split_corpus,
    subset,
    synth_corpus,
    tokenize,
    write_corpus_jsonl,
)
from .errors import AuditError, ContractError, InvariantError
from .extraction import (
    ExtractionMatch,
    ExtractionReport,
    GenerationRecord,
    MatchIndex,
    PromptSpec,
    build_index,
    build_prompts,
    detect_extraction,
    detect_many,
    extraction_report,
    read_generation_log,
    token_edit_distance,
    write_generation_log,
)
from .memorization import (
    CounterfactualScore,
    LossMatrix,
    SurfaceCdfs,
    audit_label_distribution,
    counterfactual_scores,
    flag_memorized,
    make_ensemble_masks,
    read_loss_matrix,
    read_scores_jsonl,
    surface_cdfs,
    tail_mass,
    write_loss_matrix,
    write_scores_jsonl,
)
from .metrics import (
    LinguisticProfile,
    avg_word_length,
    capitalization_rate,
    morphological_complexity,
    profile,
    read_profile,
    redundancy,
    relation_distribution,
    syntactic_entropy,
    vocabulary_richness,
    write_profile,
)
from .mia import (
    AttackModel,
    ConfidenceTrajectory,
    MiaResult,
    SeparabilityReport,
    collect_trajectories,
    evaluate_mia,
    load_attack,
    read_trajectories,
    save_attack,
    separability_report,
    train_attack,
    write_trajectories,
)
from .models import (
    BinClassifier,
    NGramModel,
    ensemble_loss_matrix,
    hashed_features,
)
from .pipeline import PipelineConfig, PipelineResult, run_language_pipeline
from .report import (
    Artifact,
    LeakageSummary,
    Table,
    compute_correlations,
    emit,
    join,
    read_leakage,
    spearman,
    write_leakage,
)

__version__ = "0.1.0"

__all__ = [
    "AttackModel",
    "AuditError",
    "Artifact",
    "BinClassifier",
    "ConfidenceTrajectory",
    "ContractError",
    "Corpus",
    "CounterfactualScore",
    "Document",
    "ExtractionMatch",
    "ExtractionReport",
    "GenerationRecord",
    "InvariantError",
    "LeakageSummary",
    "LinguisticProfile",
    "LossMatrix",
    "MatchIndex",
    "MiaResult",
    "NGramModel",
    "PipelineConfig",
    "PipelineResult",
    "PromptSpec",
    "Provenance",
    "SeparabilityReport",
    "StumpBoostClassifier",
    "SurfaceCdfs",
    "Table",
    "Token",
    "assign_length_bins",
    "audit_label_distribution",
    "avg_word_length",
    "build_index",
    "build_prompts",
    "capitalization_rate",
    "collect_trajectories",
    "compute_correlations",
    "corpus_digest",
    "counterfactual_scores",
    "detect_extraction",
    "detect_many",
    "emit",
    "ensemble_loss_matrix",
    "evaluate_mia",
    "extraction_report",
    "flag_memorized",
    "hashed_features",
    "join",
    "load_attack",
    "load_corpus",
    "make_document",
    "make_ensemble_masks",
    "morphological_complexity",
    "profile",
    "quantile_bin_edges",
    "read_generation_log",
    "read_leakage",
    "read_loss_matrix",
    "read_profile",
    "read_scores_jsonl",
    "read_trajectories",
    "redundancy",
    "relation_distribution",
    "run_language_pipeline",
    "save_attack",
    "separability_report",
    "spearman",
    "split_corpus",
    "subset",
    "surface_cdfs",
    "syntactic_entropy",
    "synth_corpus",
    "tail_mass",
    "token_edit_distance",
    "tokenize",
    "train_attack",
    "vocabulary_richness",
    "write_corpus_jsonl",
    "write_generation_log",
    "write_leakage",
    "write_loss_matrix",
    "write_profile",
    "write_scores_jsonl",
    "write_trajectories",
]
