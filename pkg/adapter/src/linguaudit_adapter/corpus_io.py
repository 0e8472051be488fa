"""Reader for the corpus JSONL wire format, plus experiment setup helpers.

Only the three required keys are consumed here ({"id", "lang", "text"});
annotation arrays pass through the audit toolkit, not the adapter. Length
binning and membership splits are experimental setup, not analysis: they
pick training targets and splits, and the export header records how.
"""

import json
from dataclasses import dataclass

import numpy as np

from .config import AdapterError


@dataclass(frozen=True)
class AdapterDoc:
    id: str
    lang: str
    text: str

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


def read_corpus_jsonl(path: str) -> tuple[str, list[AdapterDoc]]:
    """Load one single-language corpus; returns (language, docs in file order)."""
    docs: list[AdapterDoc] = []
    seen: set[str] = set()
    lang: str | None = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise AdapterError(f"cannot open corpus file {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise AdapterError(f"{path}:{lineno}: record must be a JSON object")
            missing = [k for k in ("id", "lang", "text") if k not in rec]
            if missing:
                raise AdapterError(f"{path}:{lineno}: record missing field(s) {missing}")
            doc = AdapterDoc(str(rec["id"]), str(rec["lang"]), str(rec["text"]))
            if not doc.text.strip():
                raise AdapterError(f"{path}:{lineno}: empty text for doc {doc.id!r}")
            if doc.id in seen:
                raise AdapterError(f"{path}:{lineno}: duplicate doc id {doc.id!r}")
            seen.add(doc.id)
            if lang is None:
                lang = doc.lang
            elif doc.lang != lang:
                raise AdapterError(
                    f"{path}:{lineno}: mixed languages {lang!r} vs {doc.lang!r}; "
                    "one corpus holds one language"
                )
            docs.append(doc)
    if lang is None:
        raise AdapterError(f"{path}: empty corpus file")
    return lang, docs


def length_bin_labels(docs: list[AdapterDoc], n_bins: int) -> list[int]:
    """Equal-width token-count bins as classification targets, 0..n_bins-1."""
    counts = np.array([len(d.tokens) for d in docs], dtype=np.float64)
    lo, hi = counts.min(), counts.max()
    if hi == lo:
        return [0] * len(docs)
    edges = np.linspace(lo, hi, n_bins + 1)
    labels = np.clip(np.searchsorted(edges, counts, side="right") - 1, 0, n_bins - 1)
    return [int(v) for v in labels]


def membership_split(
    doc_ids: list[str], member_fraction: float, seed: int
) -> tuple[list[str], list[str], list[str], list[str]]:
    """Disjoint shadow/target pools, each split into members and non-members.

    Returns (shadow_members, shadow_out, target_members, target_out). The
    permutation is seeded, so a rerun reproduces the same split exactly.
    """
    if len(doc_ids) < 4:
        raise AdapterError(
            f"need at least 4 documents to split into shadow/target pools "
            f"with members on both sides, got {len(doc_ids)}"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    order = [doc_ids[i] for i in rng.permutation(len(doc_ids))]
    half = len(order) // 2
    shadow, target = order[:half], order[half:]
    s_cut = max(1, min(len(shadow) - 1, round(len(shadow) * member_fraction)))
    t_cut = max(1, min(len(target) - 1, round(len(target) * member_fraction)))
    return shadow[:s_cut], shadow[s_cut:], target[:t_cut], target[t_cut:]
