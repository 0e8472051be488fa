"""Counterfactual memorization scoring over a model ensemble.

A document's score is the mean loss of the ensemble members that did NOT
train on it minus the mean loss of the members that did, so memorization
shows up as a positive score. Flagging takes the upper tail at a
percentile: the threshold is the k-th largest score with
k = ceil((1 - percentile) * N), and ties at the threshold are all flagged,
so distinct scores yield exactly k flags and an all-equal score vector
flags everything.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .corpus import Corpus
from .errors import ContractError

DEFAULT_PERCENTILE = 0.95


def _unit_float(seed: int, doc_id: str, attempt: int, model_i: int) -> float:
    payload = f"{seed}|{doc_id}|{attempt}|{model_i}".encode("utf-8")
    h = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(h, "big") / 2.0**64


def make_ensemble_masks(
    doc_ids: list[str],
    n_models: int = 10,
    inclusion_prob: float = 0.5,
    seed: int = 0,
) -> np.ndarray:
    """Boolean membership matrix of shape (n_models, n_docs).

    Each cell is an independent Bernoulli(inclusion_prob) draw keyed by
    (seed, doc id, attempt, model index), so assignment does not depend on
    document order. Columns that come out all-in or all-out are re-rolled
    deterministically, so every document has between 1 and n_models - 1
    in-models.
    """
    if n_models < 2:
        raise ContractError(f"n_models must be >= 2, got {n_models}")
    if not 0.0 < inclusion_prob < 1.0:
        raise ContractError(
            f"inclusion_prob must be strictly inside (0, 1), got {inclusion_prob}"
        )
    if len(set(doc_ids)) != len(doc_ids):
        raise ContractError("doc_ids contain duplicates")
    mask = np.zeros((n_models, len(doc_ids)), dtype=bool)
    for j, doc_id in enumerate(doc_ids):
        attempt = 0
        while True:
            col = np.array(
                [
                    _unit_float(seed, doc_id, attempt, m) < inclusion_prob
                    for m in range(n_models)
                ],
                dtype=bool,
            )
            if 0 < col.sum() < n_models:
                mask[:, j] = col
                break
            attempt += 1
    return mask


@dataclass(frozen=True)
class LossMatrix:
    """Per-model, per-document losses plus the membership mask."""

    model_ids: list[str]
    doc_ids: list[str]
    losses: np.ndarray  # (n_models, n_docs) float
    in_mask: np.ndarray  # (n_models, n_docs) bool

    def __post_init__(self):
        m, n = len(self.model_ids), len(self.doc_ids)
        if len(set(self.model_ids)) != m:
            raise ContractError("duplicate model ids in loss matrix")
        if len(set(self.doc_ids)) != n:
            raise ContractError("duplicate doc ids in loss matrix")
        if self.losses.shape != (m, n):
            raise ContractError(
                f"losses shape {self.losses.shape} does not match ({m}, {n})"
            )
        if self.in_mask.shape != (m, n):
            raise ContractError(
                f"mask shape {self.in_mask.shape} does not match ({m}, {n})"
            )
        if not np.isfinite(self.losses).all():
            raise ContractError("losses must be finite")


@dataclass(frozen=True)
class CounterfactualScore:
    doc_id: str
    score: float
    n_in: int
    n_out: int
    flagged: bool = False


def counterfactual_scores(lm: LossMatrix) -> list[CounterfactualScore]:
    """score(doc) = mean out-model loss - mean in-model loss."""
    out: list[CounterfactualScore] = []
    for j, doc_id in enumerate(lm.doc_ids):
        col_mask = lm.in_mask[:, j]
        n_in = int(col_mask.sum())
        n_out = len(lm.model_ids) - n_in
        if n_in == 0 or n_out == 0:
            raise ContractError(
                f"doc {doc_id!r} has n_in={n_in}, n_out={n_out}; counterfactual "
                "scores need at least one model on each side"
            )
        in_mean = float(lm.losses[col_mask, j].mean())
        out_mean = float(lm.losses[~col_mask, j].mean())
        out.append(
            CounterfactualScore(
                doc_id=doc_id, score=out_mean - in_mean, n_in=n_in, n_out=n_out
            )
        )
    return out


def flag_memorized(
    scores: list[CounterfactualScore], percentile: float = DEFAULT_PERCENTILE
) -> tuple[list[CounterfactualScore], float]:
    """Flag the upper (1 - percentile) tail; ties at the threshold all flag.

    Returns the re-annotated scores (same order) and the threshold used.
    """
    if not 0.0 < percentile < 1.0:
        raise ContractError(f"percentile must be in (0, 1), got {percentile}")
    n = len(scores)
    if n < 20:
        raise ContractError(f"flagging needs >= 20 scores, got {n}")
    # the epsilon keeps float error from inflating the ceil: without it,
    # (1 - 0.95) * 100 = 5.000000000000004 would flag 6 docs instead of 5
    k = max(1, math.ceil((1.0 - percentile) * n - 1e-9))
    threshold = sorted((s.score for s in scores), reverse=True)[k - 1]
    return (
        [replace(s, flagged=s.score >= threshold) for s in scores],
        threshold,
    )


def tail_mass(scores: list[CounterfactualScore], threshold: float = 0.02) -> float:
    """Fraction of scores strictly above ``threshold``."""
    if not scores:
        raise ContractError("tail_mass needs at least one score")
    return sum(1 for s in scores if s.score > threshold) / len(scores)


# ---------------------------------------------------------------------------
# Surface statistics of flagged documents

_STATS = ("sentence_length", "word_count", "unique_words")


def _doc_stats(doc) -> dict[str, int]:
    return {
        "sentence_length": len(doc.text),
        "word_count": doc.token_count(),
        "unique_words": len({t.surface.casefold() for t in doc.tokens}),
    }


def _cdf(values: list[int]) -> list[list[float]]:
    s = sorted(values)
    n = len(s)
    pts = []
    for i, v in enumerate(s):
        if i + 1 == n or s[i + 1] != v:
            pts.append([float(v), (i + 1) / n])
    return pts


@dataclass
class SurfaceCdfs:
    all: dict[str, list[list[float]]]
    flagged: dict[str, list[list[float]]] | None
    notices: list[str]

    def to_json_dict(self) -> dict:
        return {"all": self.all, "flagged": self.flagged, "notices": self.notices}


def surface_cdfs(corpus: Corpus, scores: list[CounterfactualScore]) -> SurfaceCdfs:
    """CDFs of sentence length, word count, and unique words, for the whole
    corpus and for the flagged subset (omitted with a notice when empty)."""
    by_id = corpus.by_id()
    unknown = [s.doc_id for s in scores if s.doc_id not in by_id]
    if unknown:
        raise ContractError(f"scores reference unknown docs: {unknown[:5]}")
    if not corpus.docs:
        raise ContractError("surface_cdfs needs a non-empty corpus")
    all_stats = {k: [] for k in _STATS}
    for doc in corpus.docs:
        st = _doc_stats(doc)
        for k in _STATS:
            all_stats[k].append(st[k])
    flagged_ids = [s.doc_id for s in scores if s.flagged]
    notices = []
    if flagged_ids:
        fl_stats = {k: [] for k in _STATS}
        for did in flagged_ids:
            st = _doc_stats(by_id[did])
            for k in _STATS:
                fl_stats[k].append(st[k])
        flagged = {k: _cdf(v) for k, v in fl_stats.items()}
    else:
        flagged = None
        notices.append("no flagged documents; flagged CDFs omitted")
    return SurfaceCdfs(
        all={k: _cdf(v) for k, v in all_stats.items()},
        flagged=flagged,
        notices=notices,
    )


def audit_label_distribution(corpus: Corpus, n_bins: int | None = None) -> list[int]:
    """Histogram of bin labels; every document must be labeled."""
    labels = []
    for doc in corpus.docs:
        if doc.bin_label is None:
            raise ContractError(
                f"doc {doc.id!r} has no bin label; run assign_length_bins first"
            )
        labels.append(doc.bin_label)
    if not labels:
        raise ContractError("audit_label_distribution needs a non-empty corpus")
    width = n_bins if n_bins is not None else max(labels) + 1
    if max(labels) >= width:
        raise ContractError(
            f"label {max(labels)} outside the declared 0..{width - 1} range"
        )
    counts = Counter(labels)
    return [counts.get(i, 0) for i in range(width)]


# ---------------------------------------------------------------------------
# Wire formats


def write_loss_matrix(lm: LossMatrix, losses_path: str, mask_path: str) -> None:
    """Two aligned CSVs: same header (model_id + doc ids), same row order."""
    header = ",".join(["model_id"] + lm.doc_ids)
    with open(losses_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i, mid in enumerate(lm.model_ids):
            fh.write(",".join([mid] + [repr(float(v)) for v in lm.losses[i]]) + "\n")
    with open(mask_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i, mid in enumerate(lm.model_ids):
            fh.write(",".join([mid] + [str(int(v)) for v in lm.in_mask[i]]) + "\n")


def _read_matrix_csv(path: str) -> tuple[list[str], list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise ContractError(f"cannot open {path!r}: {exc}") from exc
    if not lines:
        raise ContractError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:1] != ["model_id"]:
        raise ContractError(f"{path}: header must start with 'model_id'")
    doc_ids = header[1:]
    model_ids, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ContractError(
                f"{path}:{lineno}: {len(cells)} cells, header has {len(header)}"
            )
        model_ids.append(cells[0])
        rows.append(cells[1:])
    return doc_ids, model_ids, rows


def read_loss_matrix(losses_path: str, mask_path: str) -> LossMatrix:
    l_docs, l_models, l_rows = _read_matrix_csv(losses_path)
    m_docs, m_models, m_rows = _read_matrix_csv(mask_path)
    if l_docs != m_docs:
        raise ContractError("losses and mask files disagree on doc ids or order")
    if l_models != m_models:
        raise ContractError("losses and mask files disagree on model ids or order")
    try:
        losses = np.array([[float(c) for c in row] for row in l_rows], dtype=np.float64)
    except ValueError as exc:
        raise ContractError(f"{losses_path}: non-numeric loss cell: {exc}") from exc
    mask = np.zeros((len(m_rows), len(m_docs)), dtype=bool)
    for i, row in enumerate(m_rows):
        for j, c in enumerate(row):
            if c not in ("0", "1"):
                raise ContractError(
                    f"{mask_path}: mask cells must be 0 or 1, got {c!r}"
                )
            mask[i, j] = c == "1"
    if losses.size == 0:
        raise ContractError("loss matrix has no model rows")
    return LossMatrix(
        model_ids=l_models, doc_ids=l_docs, losses=losses, in_mask=mask
    )


def write_scores_jsonl(scores: list[CounterfactualScore], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in scores:
            fh.write(
                json.dumps(
                    {
                        "doc_id": s.doc_id,
                        "score": s.score,
                        "n_in": s.n_in,
                        "n_out": s.n_out,
                        "flagged": s.flagged,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_scores_jsonl(path: str) -> list[CounterfactualScore]:
    out = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot open scores file {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    CounterfactualScore(
                        doc_id=str(rec["doc_id"]),
                        score=float(rec["score"]),
                        n_in=int(rec["n_in"]),
                        n_out=int(rec["n_out"]),
                        flagged=bool(rec["flagged"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ContractError(f"{path}:{lineno}: bad score record: {exc}") from exc
    return out
