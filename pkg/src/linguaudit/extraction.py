"""Prompt-based verbatim extraction detection.

The attack surface: prompts are document prefixes of a fixed word count,
generations are model continuations, and detection asks whether a
generation reproduces a span of the training corpus. Exact matches are
found by seeding on index n-grams and extending greedily in both
directions; near matches compare the seed-aligned training span under a
normalized token edit distance. Uniqueness of extractions is keyed on the
matched span text.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import Corpus, corpus_digest, tokenize
from .errors import ContractError

log = logging.getLogger(__name__)

DEFAULT_MIN_MATCH = 10
DEFAULT_NEAR_THRESHOLD = 0.1


@dataclass(frozen=True)
class PromptSpec:
    """A prompt cut from one training document plus its true continuation."""

    doc_id: str
    prompt_size: int
    prompt_tokens: tuple[str, ...]
    continuation_tokens: tuple[str, ...]

    @property
    def prompt_text(self) -> str:
        return " ".join(self.prompt_tokens)

    @property
    def reference_continuation(self) -> str:
        return " ".join(self.continuation_tokens)


def build_prompts(
    train: Corpus, k: int, min_match_len: int = DEFAULT_MIN_MATCH
) -> list[PromptSpec]:
    """One PromptSpec per eligible training doc, ordered by doc id.

    Documents shorter than k + min_match_len tokens are excluded: their
    continuations could never produce a qualifying match.
    """
    if k < 1:
        raise ContractError(f"prompt size must be >= 1, got {k}")
    specs = []
    for doc in sorted(train.docs, key=lambda d: d.id):
        surf = doc.surfaces
        if len(surf) < k + min_match_len:
            continue
        specs.append(
            PromptSpec(
                doc_id=doc.id,
                prompt_size=k,
                prompt_tokens=surf[:k],
                continuation_tokens=surf[k:],
            )
        )
    if not specs:
        log.warning(
            "build_prompts: no document has %d+ tokens; returning empty prompt set",
            k + min_match_len,
        )
    return specs


class MatchIndex:
    """n-gram postings over a training corpus for seeded span search."""

    def __init__(self, order: int = 5):
        if order < 1:
            raise ContractError(f"index order must be >= 1, got {order}")
        self.order = order

    def fit(self, train: Corpus) -> "MatchIndex":
        longest = max((d.token_count() for d in train.docs), default=0)
        if longest < self.order:
            raise ContractError(
                f"index order {self.order} exceeds the longest document "
                f"({longest} tokens)"
            )
        self.doc_ids_: list[str] = []
        self.doc_tokens_: list[tuple[str, ...]] = []
        postings: dict[tuple[str, ...], list[tuple[int, int]]] = {}
        for di, doc in enumerate(train.docs):
            self.doc_ids_.append(doc.id)
            surf = doc.surfaces
            self.doc_tokens_.append(surf)
            for p in range(len(surf) - self.order + 1):
                postings.setdefault(surf[p : p + self.order], []).append((di, p))
        self.postings_ = postings
        self.digest_ = corpus_digest(train)
        return self

    def query(self, ngram: tuple[str, ...]) -> list[tuple[int, int]]:
        if len(ngram) != self.order:
            raise ContractError(
                f"query n-gram has {len(ngram)} tokens, index order is {self.order}"
            )
        return self.postings_.get(tuple(ngram), [])


def build_index(train: Corpus, seed_ngram: int = 5) -> MatchIndex:
    """Index every length-n token window of every training document."""
    return MatchIndex(order=seed_ngram).fit(train)


@dataclass(frozen=True)
class ExtractionMatch:
    """A detected reproduction of training material in one generation.

    ``doc_id`` is the prompted document; ``source_doc_id`` is the training
    document that contains the matched span (they often coincide).
    """

    doc_id: str
    prompt_size: int
    matched_span_text: str
    match_len: int
    kind: str  # "exact" or "near"
    edit_ratio: float
    source_doc_id: str


def token_edit_distance(a: list[str] | tuple[str, ...], b: list[str] | tuple[str, ...]) -> int:
    """Levenshtein distance over token sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i]
        for j, tb in enumerate(b, start=1):
            cur.append(
                min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (0 if ta == tb else 1))
            )
        prev = cur
    return prev[-1]


def detect_extraction(
    gen: str | list[str] | tuple[str, ...],
    spec: PromptSpec,
    index: MatchIndex,
    min_match_len: int = DEFAULT_MIN_MATCH,
    near_threshold: float = DEFAULT_NEAR_THRESHOLD,
) -> ExtractionMatch | None:
    """Search one generation for reproduced training spans.

    ``gen`` is the continuation only; prompt tokens never participate in the
    match. Strings are tokenized with the corpus tokenizer. Returns the
    longest qualifying match (exact preferred on ties), or None. Verbatim
    overlaps of length >= max(min_match_len, index.order) are always found;
    shorter ones contain no seed n-gram and may be missed.
    """
    if min_match_len < 1:
        raise ContractError(f"min_match_len must be >= 1, got {min_match_len}")
    if not 0.0 <= near_threshold < 1.0:
        raise ContractError(f"near_threshold must be in [0, 1), got {near_threshold}")
    gen_tokens = tuple(tokenize(gen)) if isinstance(gen, str) else tuple(gen)
    n = index.order
    if len(gen_tokens) < min_match_len:
        return None

    # (match_len, kind_rank, -ratio, di, start) candidates; kind_rank 1=exact
    candidates: list[tuple[int, int, float, int, int]] = []
    frontier: dict[tuple[int, int], int] = {}
    near_seen: set[tuple[int, int]] = set()
    for g in range(len(gen_tokens) - n + 1):
        for di, p in index.query(gen_tokens[g : g + n]):
            o = p - g
            doc = index.doc_tokens_[di]
            if frontier.get((di, o), -1) <= g:
                lg, lp = g, p
                while lg > 0 and lp > 0 and gen_tokens[lg - 1] == doc[lp - 1]:
                    lg -= 1
                    lp -= 1
                rg, rp = g + n, p + n
                while (
                    rg < len(gen_tokens) and rp < len(doc) and gen_tokens[rg] == doc[rp]
                ):
                    rg += 1
                    rp += 1
                frontier[(di, o)] = rg
                if rg - lg >= min_match_len:
                    candidates.append((rg - lg, 1, 0.0, di, lp))
            if near_threshold > 0.0 and (di, o) not in near_seen:
                near_seen.add((di, o))
                start = max(0, o)
                end = min(len(doc), o + len(gen_tokens))
                if end > start:
                    window = doc[start:end]
                    if len(window) >= min_match_len:
                        dist = token_edit_distance(gen_tokens, window)
                        ratio = dist / max(len(gen_tokens), len(window))
                        if ratio <= near_threshold:
                            candidates.append((len(window), 0, -ratio, di, start))
    if not candidates:
        return None
    length, kind_rank, neg_ratio, di, start = max(
        candidates, key=lambda c: (c[0], c[1], c[2], -c[3], -c[4])
    )
    span = index.doc_tokens_[di][start : start + length]
    return ExtractionMatch(
        doc_id=spec.doc_id,
        prompt_size=spec.prompt_size,
        matched_span_text=" ".join(span),
        match_len=length,
        kind="exact" if kind_rank == 1 else "near",
        edit_ratio=-neg_ratio,
        source_doc_id=index.doc_ids_[di],
    )


def detect_many(
    gens: list[str | list[str]],
    specs: list[PromptSpec],
    index: MatchIndex,
    min_match_len: int = DEFAULT_MIN_MATCH,
    near_threshold: float = DEFAULT_NEAR_THRESHOLD,
    n_jobs: int = 1,
) -> list[ExtractionMatch | None]:
    """Detect over aligned (gen, spec) pairs; output order equals input order.

    Detection is read-only over the index, so thread counts cannot change
    the result, only the wall time.
    """
    if len(gens) != len(specs):
        raise ContractError(
            f"{len(gens)} generations for {len(specs)} prompt specs; must align"
        )

    def one(pair):
        g, s = pair
        return detect_extraction(
            g, s, index, min_match_len=min_match_len, near_threshold=near_threshold
        )

    if n_jobs <= 1:
        return [one(p) for p in zip(gens, specs)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(one, zip(gens, specs)))


# ---------------------------------------------------------------------------
# Generation-log wire format


@dataclass(frozen=True)
class GenerationRecord:
    doc_id: str
    prompt_size: int
    prompt: str
    generation: str
    model_id: str


def write_generation_log(records: list[GenerationRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "doc_id": rec.doc_id,
                        "prompt_size": rec.prompt_size,
                        "prompt": rec.prompt,
                        "generation": rec.generation,
                        "model_id": rec.model_id,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_generation_log(path: str) -> list[GenerationRecord]:
    records = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot open generation log {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ContractError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            missing = [
                k
                for k in ("doc_id", "prompt_size", "prompt", "generation", "model_id")
                if k not in rec
            ]
            if missing:
                raise ContractError(f"{path}:{lineno}: missing field(s) {missing}")
            records.append(
                GenerationRecord(
                    doc_id=str(rec["doc_id"]),
                    prompt_size=int(rec["prompt_size"]),
                    prompt=str(rec["prompt"]),
                    generation=str(rec["generation"]),
                    model_id=str(rec["model_id"]),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Reporting


def _cdf_points(values: list[int]) -> list[list[float]]:
    """Cumulative fractions at each distinct value, ending at 1.0."""
    if not values:
        return []
    s = sorted(values)
    n = len(s)
    points = []
    seen = 0
    for i, v in enumerate(s):
        seen = i + 1
        if i + 1 == n or s[i + 1] != v:
            points.append([float(v), seen / n])
    return points


@dataclass
class ExtractionReport:
    """Per-prompt-size unique extraction counts plus length CDFs."""

    per_size: dict[int, dict[str, int]]  # size -> {"unique": u, "attempts": a}
    all_cdf: list[list[float]]
    extracted_cdf: list[list[float]] | None
    notices: list[str]

    def to_json_dict(self) -> dict:
        return {
            "per_size": {
                str(k): dict(v) for k, v in sorted(self.per_size.items())
            },
            "all_cdf": self.all_cdf,
            "extracted_cdf": self.extracted_cdf,
            "notices": list(self.notices),
        }


def extraction_report(
    matches: list[ExtractionMatch | None],
    corpus: Corpus,
    prompt_sizes: list[int],
    attempts: dict[int, int] | None = None,
) -> ExtractionReport:
    """Aggregate matches into unique counts per prompt size and length CDFs.

    ``attempts`` maps prompt size to the number of detection attempts; when
    omitted, the match count per size stands in (and uniqueness can only be
    reported against successful attempts). Sizes with zero attempts report
    0/0. The extracted-length CDF runs over the distinct source documents of
    the matched spans.
    """
    real = [m for m in matches if m is not None]
    per_size: dict[int, dict[str, int]] = {}
    for size in sorted(set(prompt_sizes)):
        sized = [m for m in real if m.prompt_size == size]
        unique = len({m.matched_span_text for m in sized})
        att = (
            attempts.get(size, 0) if attempts is not None else len(sized)
        )
        if unique > att:
            raise ContractError(
                f"prompt size {size}: {unique} unique extractions exceed "
                f"{att} recorded attempts"
            )
        per_size[size] = {"unique": unique, "attempts": att}
    notices = []
    by_id = corpus.by_id()
    source_ids = sorted({m.source_doc_id for m in real})
    unknown = [i for i in source_ids if i not in by_id]
    if unknown:
        raise ContractError(f"matches reference unknown source docs: {unknown[:5]}")
    all_cdf = _cdf_points([d.token_count() for d in corpus.docs])
    if source_ids:
        extracted_cdf = _cdf_points([by_id[i].token_count() for i in source_ids])
    else:
        extracted_cdf = None
        notices.append("no extractions detected; extracted-length CDF omitted")
    return ExtractionReport(
        per_size=per_size,
        all_cdf=all_cdf,
        extracted_cdf=extracted_cdf,
        notices=notices,
    )
