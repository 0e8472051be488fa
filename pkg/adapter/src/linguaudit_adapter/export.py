"""The three export operations, one per audit family.

Each operation fine-tunes from the configured checkpoint for the corpus
language, evaluates nothing, and writes files in the audit toolkit's wire
formats plus an export_header.json sidecar recording checkpoint names,
hyperparameters, and setup choices. Output file names are fixed so the
downstream commands can be pointed at the directory as-is.
"""

import json
import os

import numpy as np

from .config import AdapterConfig, AdapterError, write_header
from .corpus_io import length_bin_labels, membership_split, read_corpus_jsonl
from .modeling import (
    finetune_classifier,
    finetune_lm,
    generate_continuation,
    load_classifier,
    load_lm,
    per_doc_losses,
    resolve_device,
)

GENERATION_LOG = "generation_log.jsonl"
LOSSES_CSV = "losses.csv"
MASK_CSV = "mask.csv"
TRAJECTORIES_SHADOW = "trajectories_shadow.jsonl"
TRAJECTORIES_TARGET = "trajectories_target.jsonl"


def _require_task(config: AdapterConfig, expected: str, operation: str) -> None:
    if config.task != expected:
        raise AdapterError(
            f"{operation} needs task={expected!r}, but the config says {config.task!r}"
        )


def _checkpoint_tag(checkpoint: str) -> str:
    return os.path.basename(checkpoint.rstrip("/")) or checkpoint


def finetune_and_export_generations(
    config: AdapterConfig,
    corpus_path: str,
    prompt_sizes: tuple[int, ...] = (5, 12, 25, 37),
    out_dir: str = ".",
) -> dict[str, str]:
    """Fine-tune a causal LM on the corpus and log prompted continuations.

    For every document with more tokens than the prompt size, one greedy
    record plus config.samples_per_prompt sampled records are written. The
    prompt is the document's first k whitespace tokens; the generation field
    holds the continuation only.
    """
    _require_task(config, "generation", "finetune_and_export_generations")
    sizes = tuple(sorted(set(int(k) for k in prompt_sizes)))
    if not sizes or sizes[0] < 1:
        raise AdapterError(f"prompt sizes must be positive integers, got {prompt_sizes}")
    lang, docs = read_corpus_jsonl(corpus_path)
    checkpoint = config.checkpoint_for(lang)
    device = resolve_device(config.device)
    tok, model = load_lm(checkpoint, device)
    finetune_lm(
        tok, model, [d.text for d in docs],
        epochs=config.epochs, batch_size=config.batch_size,
        learning_rate=config.learning_rate, seed=config.seed,
        max_length=config.max_length, device=device,
    )

    tag = _checkpoint_tag(checkpoint)
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, GENERATION_LOG)
    n_records = 0
    skipped = 0
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        for di, doc in enumerate(docs):
            tokens = doc.tokens
            for k in sizes:
                if len(tokens) < k + 1:
                    skipped += 1
                    continue
                prompt = " ".join(tokens[:k])
                runs = [("greedy", f"{tag}-greedy", False, 0)]
                for s in range(1, config.samples_per_prompt + 1):
                    seed = config.seed * 1_000_003 + di * 131 + k * 17 + s
                    runs.append(("sample", f"{tag}-sample-{s}", True, seed))
                for _, model_id, sample, seed in runs:
                    generation = generate_continuation(
                        tok, model, prompt,
                        max_new_tokens=config.max_new_tokens,
                        max_length=config.max_length,
                        device=device, sample=sample, seed=seed,
                    )
                    fh.write(
                        json.dumps(
                            {
                                "doc_id": doc.id,
                                "prompt_size": k,
                                "prompt": prompt,
                                "generation": generation,
                                "model_id": model_id,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
                    n_records += 1
    header = write_header(
        out_dir, config, "generations",
        language=lang, checkpoint=checkpoint, corpus=os.path.basename(corpus_path),
        prompt_sizes=list(sizes), max_new_tokens=config.max_new_tokens,
        samples_per_prompt=config.samples_per_prompt,
        n_docs=len(docs), n_records=n_records, skipped_short_prompts=skipped,
    )
    return {"generation_log": log_path, "header": header}


def _ensemble_masks(n_models: int, n_docs: int, inclusion_prob: float, seed: int) -> np.ndarray:
    """Seeded Bernoulli masks; every doc lands on both sides of the ensemble."""
    rng = np.random.Generator(np.random.Philox(seed))
    mask = rng.random((n_models, n_docs)) < inclusion_prob
    for j in range(n_docs):
        while mask[:, j].all() or not mask[:, j].any():
            mask[:, j] = rng.random(n_models) < inclusion_prob
    return mask


def _write_matrix_csv(path: str, model_ids: list[str], doc_ids: list[str], rows, fmt) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["model_id"] + doc_ids) + "\n")
        for mid, row in zip(model_ids, rows):
            fh.write(",".join([mid] + [fmt(v) for v in row]) + "\n")


def finetune_and_export_ensemble(
    config: AdapterConfig,
    corpus_path: str,
    out_dir: str = ".",
    n_models: int | None = None,
) -> dict[str, str]:
    """Train independently seeded classifiers and export the loss matrices.

    losses.csv and mask.csv share one header (model_id plus doc ids) and row
    order; mask cells mark which documents each model trained on. Labels are
    equal-width token-count bins, recorded in the header.
    """
    _require_task(config, "classification", "finetune_and_export_ensemble")
    n = config.n_models if n_models is None else int(n_models)
    if n < 2:
        raise AdapterError(f"ensemble needs at least 2 models, got {n}")
    lang, docs = read_corpus_jsonl(corpus_path)
    if len(docs) < 2:
        raise AdapterError(f"ensemble needs at least 2 documents, got {len(docs)}")
    checkpoint = config.checkpoint_for(lang)
    device = resolve_device(config.device)
    texts = [d.text for d in docs]
    labels = length_bin_labels(docs, config.n_bins)

    mask = _ensemble_masks(n, len(docs), config.inclusion_prob, config.seed)
    losses = np.zeros((n, len(docs)), dtype=np.float64)
    for i in range(n):
        model_seed = config.seed + 7919 * (i + 1)
        tok, model = load_classifier(checkpoint, config.n_bins, model_seed, device)
        finetune_classifier(
            tok, model, texts, labels, [j for j in range(len(docs)) if mask[i, j]],
            epochs=config.epochs, batch_size=config.batch_size,
            learning_rate=config.learning_rate, seed=model_seed,
            max_length=config.max_length, device=device,
        )
        losses[i] = per_doc_losses(
            tok, model, texts, labels,
            batch_size=config.batch_size, max_length=config.max_length, device=device,
        )

    os.makedirs(out_dir, exist_ok=True)
    model_ids = [f"model-{i:02d}" for i in range(n)]
    doc_ids = [d.id for d in docs]
    losses_path = os.path.join(out_dir, LOSSES_CSV)
    mask_path = os.path.join(out_dir, MASK_CSV)
    _write_matrix_csv(losses_path, model_ids, doc_ids, losses, lambda v: repr(float(v)))
    _write_matrix_csv(mask_path, model_ids, doc_ids, mask, lambda v: str(int(v)))
    header = write_header(
        out_dir, config, "ensemble",
        language=lang, checkpoint=checkpoint, corpus=os.path.basename(corpus_path),
        n_models=n, inclusion_prob=config.inclusion_prob, n_bins=config.n_bins,
        n_docs=len(docs),
    )
    return {"losses": losses_path, "mask": mask_path, "header": header}


def finetune_and_export_trajectories(
    config: AdapterConfig,
    corpus_path: str,
    out_dir: str = ".",
    epochs: int | None = None,
) -> dict[str, str]:
    """Train shadow and target classifiers, export per-epoch confidences.

    The corpus is split into disjoint shadow and target pools; within each,
    member_fraction of the documents train that pool's classifier. After
    every epoch the top-class confidence of every pool document is recorded,
    so each record carries one confidence per epoch.
    """
    _require_task(config, "classification", "finetune_and_export_trajectories")
    n_epochs = config.epochs if epochs is None else int(epochs)
    if n_epochs < 1:
        raise AdapterError(f"epochs must be >= 1, got {n_epochs}")
    lang, docs = read_corpus_jsonl(corpus_path)
    checkpoint = config.checkpoint_for(lang)
    device = resolve_device(config.device)
    s_in, s_out, t_in, t_out = membership_split(
        [d.id for d in docs], config.member_fraction, config.seed
    )

    os.makedirs(out_dir, exist_ok=True)
    paths: dict[str, str] = {}
    for name, members, outsiders, seed_off in (
        ("shadow", s_in, s_out, 1),
        ("target", t_in, t_out, 2),
    ):
        pool = [d for d in docs if d.id in set(members) | set(outsiders)]
        texts = [d.text for d in pool]
        labels = length_bin_labels(pool, config.n_bins)
        member_set = set(members)
        tok, model = load_classifier(
            checkpoint, config.n_bins, config.seed + 104729 * seed_off, device
        )
        snaps = finetune_classifier(
            tok, model, texts, labels,
            [i for i, d in enumerate(pool) if d.id in member_set],
            epochs=n_epochs, batch_size=config.batch_size,
            learning_rate=config.learning_rate, seed=config.seed + 104729 * seed_off,
            max_length=config.max_length, device=device, snapshot_all=True,
        )
        fname = TRAJECTORIES_SHADOW if name == "shadow" else TRAJECTORIES_TARGET
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, d in enumerate(pool):
                fh.write(
                    json.dumps(
                        {
                            "doc_id": d.id,
                            "member": d.id in member_set,
                            "conf": [float(v) for v in snaps[:, i]],
                        }
                    )
                    + "\n"
                )
        paths[name] = path

    paths["header"] = write_header(
        out_dir, config, "trajectories",
        language=lang, checkpoint=checkpoint, corpus=os.path.basename(corpus_path),
        epochs=n_epochs, n_bins=config.n_bins, member_fraction=config.member_fraction,
        shadow_members=len(s_in), shadow_non_members=len(s_out),
        target_members=len(t_in), target_non_members=len(t_out),
    )
    return paths
