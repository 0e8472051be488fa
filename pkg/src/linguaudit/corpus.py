"""Corpus ingestion, tokenization, splits, length bins, and synthesis.

The document model is deliberately small: a document is an id, a language
tag, raw text, and the tokens derived from the text by one frozen
rule-based tokenizer. Optional lemma and dependency-relation annotations
ride along as arrays aligned 1:1 with the tokens.

Tokenizer rule (frozen): tokens are maximal runs of Unicode letters and
digits. Apostrophes, underscores, punctuation, and whitespace all separate
tokens, so elided articles split ("l'hopital" -> ["l", "hopital"]). No
lowercasing is applied; capitalization is preserved for the metrics that
need it.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

VALID_SPLITS = ("unassigned", "train", "test")


@dataclass(frozen=True)
class Token:
    """One surface token with the two per-token statistics the metrics use."""

    surface: str
    char_len: int
    is_capitalized: bool

    @classmethod
    def from_surface(cls, surface: str) -> "Token":
        if not surface:
            raise ContractError("token surface must be non-empty")
        return cls(
            surface=surface,
            char_len=len(surface),
            is_capitalized=surface[:1].isupper(),
        )


@dataclass(frozen=True)
class Document:
    """A single sentence/document with tokens and optional annotations."""

    id: str
    language: str
    text: str
    tokens: tuple[Token, ...]
    lemmas: tuple[str, ...] | None = None
    deprels: tuple[str, ...] | None = None
    split: str = "unassigned"
    bin_label: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ContractError("document id must be non-empty")
        if self.split not in VALID_SPLITS:
            raise ContractError(f"invalid split {self.split!r} for doc {self.id!r}")
        for name, arr in (("lemmas", self.lemmas), ("deprels", self.deprels)):
            if arr is not None and len(arr) != len(self.tokens):
                raise ContractError(
                    f"doc {self.id!r}: {name} has {len(arr)} entries for "
                    f"{len(self.tokens)} tokens; annotations must align 1:1"
                )

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def token_count(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Provenance:
    source: str
    format: str
    options_digest: str


@dataclass(frozen=True)
class Corpus:
    """An immutable collection of same-language documents with unique ids."""

    language: str
    docs: tuple[Document, ...]
    provenance: Provenance = field(
        default=Provenance(source="memory", format="memory", options_digest="")
    )

    def __post_init__(self):
        seen = set()
        for doc in self.docs:
            if doc.id in seen:
                raise ContractError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            if doc.language != self.language:
                raise ContractError(
                    f"doc {doc.id!r} has language {doc.language!r}, corpus is "
                    f"{self.language!r}; one corpus holds one language"
                )

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    def doc_ids(self) -> list[str]:
        return [d.id for d in self.docs]

    def by_id(self) -> dict[str, Document]:
        return {d.id: d for d in self.docs}


def tokenize(text: str, language: str | None = None) -> list[str]:
    """Split ``text`` into surface tokens under the frozen rule.

    ``language`` is accepted for interface stability; the rule itself is
    language-independent. Empty or punctuation-only text yields [].
    """
    del language
    if not text:
        return []
    return _TOKEN_RE.findall(text)


def make_document(
    doc_id: str,
    language: str,
    text: str,
    lemmas: list[str] | None = None,
    deprels: list[str] | None = None,
) -> Document:
    surfaces = tokenize(text, language)
    return Document(
        id=doc_id,
        language=language,
        text=text,
        tokens=tuple(Token.from_surface(s) for s in surfaces),
        lemmas=tuple(lemmas) if lemmas is not None else None,
        deprels=tuple(deprels) if deprels is not None else None,
    )


def _file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_corpus(path: str, format: str = "jsonl", language: str | None = None) -> Corpus:
    """Load a corpus from JSONL ({"id","lang","text",...}) or TSV (id<TAB>text).

    JSONL records may carry per-record "lang" plus optional "lemmas" and
    "deprels" arrays aligned with the toolkit tokenization of "text". TSV
    carries no language column, so ``language`` is required there. Mixed
    languages, duplicate ids, and malformed records are contract errors that
    name the offending line.
    """
    if format not in ("jsonl", "tsv"):
        raise ContractError(f"unknown corpus format {format!r}; use 'jsonl' or 'tsv'")
    docs: list[Document] = []
    corpus_lang = language
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot open corpus file {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if format == "jsonl":
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ContractError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(rec, dict):
                    raise ContractError(f"{path}:{lineno}: record must be a JSON object")
                missing = [k for k in ("id", "text") if k not in rec]
                if missing:
                    raise ContractError(
                        f"{path}:{lineno}: record missing field(s) {missing}"
                    )
                rec_lang = rec.get("lang")
                if rec_lang is None and corpus_lang is None:
                    raise ContractError(
                        f"{path}:{lineno}: no 'lang' field and no language argument"
                    )
                if rec_lang is not None and language is not None and rec_lang != language:
                    raise ContractError(
                        f"{path}:{lineno}: record language {rec_lang!r} conflicts "
                        f"with declared language {language!r}"
                    )
                eff_lang = rec_lang if rec_lang is not None else corpus_lang
                if corpus_lang is None:
                    corpus_lang = eff_lang
                if eff_lang != corpus_lang:
                    raise ContractError(
                        f"{path}:{lineno}: mixed languages {corpus_lang!r} vs "
                        f"{eff_lang!r}; one corpus holds one language"
                    )
                try:
                    doc = make_document(
                        str(rec["id"]),
                        eff_lang,
                        rec["text"],
                        lemmas=rec.get("lemmas"),
                        deprels=rec.get("deprels"),
                    )
                except ContractError as exc:
                    raise ContractError(f"{path}:{lineno}: {exc}") from exc
            else:
                if corpus_lang is None:
                    raise ContractError("TSV corpora need an explicit language argument")
                parts = line.split("\t", 1)
                if len(parts) != 2:
                    raise ContractError(f"{path}:{lineno}: expected id<TAB>text")
                doc = make_document(parts[0], corpus_lang, parts[1])
            docs.append(doc)
    if corpus_lang is None:
        raise ContractError(f"{path}: empty corpus and no language declared")
    prov = Provenance(source=path, format=format, options_digest=_file_digest(path))
    return Corpus(language=corpus_lang, docs=tuple(docs), provenance=prov)


def corpus_jsonl_lines(corpus: Corpus):
    """Yield one wire-format JSON line per document, without newlines."""
    for doc in corpus.docs:
        rec: dict = {"id": doc.id, "lang": doc.language, "text": doc.text}
        if doc.lemmas is not None:
            rec["lemmas"] = list(doc.lemmas)
        if doc.deprels is not None:
            rec["deprels"] = list(doc.deprels)
        yield json.dumps(rec, ensure_ascii=False)


def write_corpus_jsonl(corpus: Corpus, path: str) -> None:
    """Write the corpus in the JSONL wire format (UTF-8, LF line endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in corpus_jsonl_lines(corpus):
            fh.write(line + "\n")


def corpus_digest(corpus: Corpus) -> str:
    """Stable content digest over doc ids and token surfaces."""
    h = hashlib.sha256()
    h.update(corpus.language.encode("utf-8"))
    for doc in corpus.docs:
        h.update(b"\x00")
        h.update(doc.id.encode("utf-8"))
        for tok in doc.tokens:
            h.update(b"\x01")
            h.update(tok.surface.encode("utf-8"))
    return h.hexdigest()


def _placement_key(seed: int, doc_id: str) -> bytes:
    payload = f"{seed}|{doc_id}".encode("utf-8")
    return hashlib.blake2b(payload, digest_size=16).digest()


def split_corpus(corpus: Corpus, train_fraction: float = 0.8, seed: int = 0) -> Corpus:
    """Assign exactly floor(train_fraction * N) documents to the train split.

    Placement is determined by a counter-style hash of (seed, doc id), so it
    does not depend on document order and cannot change under parallel or
    re-ordered ingest. Returns a new corpus; the input is left untouched.
    """
    if not 0.0 <= train_fraction <= 1.0:
        raise ContractError(f"train_fraction must be in [0, 1], got {train_fraction}")
    n_train = math.floor(train_fraction * len(corpus.docs))
    order = sorted(corpus.docs, key=lambda d: (_placement_key(seed, d.id), d.id))
    train_ids = {d.id for d in order[:n_train]}
    new_docs = tuple(
        replace(d, split="train" if d.id in train_ids else "test") for d in corpus.docs
    )
    return replace(corpus, docs=new_docs)


def subset(corpus: Corpus, split: str) -> Corpus:
    """View of one split as its own corpus (same provenance)."""
    if split not in VALID_SPLITS:
        raise ContractError(f"invalid split {split!r}")
    return replace(corpus, docs=tuple(d for d in corpus.docs if d.split == split))


def quantile_bin_edges(counts: list[int], n_bins: int) -> list[int]:
    """Nearest-rank empirical quantiles at levels i/n_bins, i = 1..n_bins-1."""
    s = sorted(counts)
    n = len(s)
    edges = []
    for i in range(1, n_bins):
        rank = math.ceil(i * n / n_bins)
        edges.append(s[rank - 1])
    return edges


def assign_length_bins(corpus: Corpus, n_bins: int = 9) -> Corpus:
    """Label every document with a token-count quantile bin in 0..n_bins-1.

    Bin edges sit at the i/n_bins empirical quantiles (nearest rank) of the
    token counts; a document's label is the number of edges strictly below
    its count, so ties collapse into the lowest qualifying bin and labels are
    monotone in length.
    """
    if n_bins < 1:
        raise ContractError(f"n_bins must be >= 1, got {n_bins}")
    if len(corpus.docs) < n_bins:
        raise ContractError(
            f"corpus has {len(corpus.docs)} docs, fewer than {n_bins} bins"
        )
    counts = [d.token_count() for d in corpus.docs]
    edges = quantile_bin_edges(counts, n_bins)
    new_docs = []
    for doc, c in zip(corpus.docs, counts):
        label = sum(1 for e in edges if e < c)
        new_docs.append(replace(doc, bin_label=label))
    return replace(corpus, docs=tuple(new_docs))


# ---------------------------------------------------------------------------
# Synthetic corpora

_CONS = "bcdfglmnprstvz"
_VOW = "aeiou"
_SYLLABLES = [c + v for c in _CONS for v in _VOW]
_SUFFIXES = ("", "a", "o", "e", "as", "os", "es", "ed", "en", "ing", "ler", "eta")
_REL_LABELS = ("root", "nsubj", "obj", "obl", "nmod", "amod", "case", "det")

SYNTH_LANGUAGE = "syn"


def _lemma_string(i: int) -> str:
    n = len(_SYLLABLES)
    parts = [_SYLLABLES[i % n], _SYLLABLES[(i // n) % n]]
    if i >= n * n:
        parts.append(_SYLLABLES[(i // (n * n)) % n])
    return "".join(parts)


def synth_corpus(
    n_docs: int,
    vocab_size: int,
    redundancy_knob: float,
    inflection_knob: float = 1.0,
    seed: int = 0,
    doc_len: tuple[int, int] = (8, 24),
    n_templates: int = 5,
    relation_labels: int = 6,
) -> Corpus:
    """Generate an annotated synthetic corpus with controllable structure.

    redundancy_knob 1.0 draws every document from a small pool of repeated
    templates (at most ``n_templates`` distinct document strings);
    redundancy_knob 0.0 draws tokens i.i.d. so the type-token ratio climbs to
    the vocabulary-limited maximum. inflection_knob sets the mean number of
    surface forms per lemma (1.0 -> morphological complexity exactly 1.0).
    Documents carry lemma and relation annotations and a capitalized first
    token. Fully deterministic per seed.
    """
    if n_docs < 1:
        raise ContractError(f"n_docs must be >= 1, got {n_docs}")
    if vocab_size < 2:
        raise ContractError(f"vocab_size must be >= 2, got {vocab_size}")
    if not 0.0 <= redundancy_knob <= 1.0:
        raise ContractError(f"redundancy_knob must be in [0, 1], got {redundancy_knob}")
    if inflection_knob < 1.0:
        raise ContractError(f"inflection_knob must be >= 1, got {inflection_knob}")
    if inflection_knob > len(_SUFFIXES):
        raise ContractError(
            f"inflection_knob must be <= {len(_SUFFIXES)}, got {inflection_knob}"
        )
    lo, hi = doc_len
    if lo < 1 or hi < lo:
        raise ContractError(f"doc_len range invalid: {doc_len}")
    n_rel = min(relation_labels, len(_REL_LABELS))
    rels = _REL_LABELS[:n_rel]
    rel_weights = np.array([1.0 / (j + 1) for j in range(n_rel)])
    rel_weights /= rel_weights.sum()

    rng = np.random.Generator(np.random.Philox(seed))
    lemmas = [_lemma_string(i) for i in range(vocab_size)]
    base = int(math.floor(inflection_knob))
    frac = inflection_knob - base
    n_forms = base + (rng.random(vocab_size) < frac).astype(int)
    n_forms = np.clip(n_forms, 1, len(_SUFFIXES))
    forms = [
        [lemmas[i] + _SUFFIXES[j] for j in range(n_forms[i])] for i in range(vocab_size)
    ]

    def draw_sentence() -> tuple[list[str], list[str], list[str]]:
        length = int(rng.integers(lo, hi + 1))
        lemma_idx = rng.integers(0, vocab_size, size=length)
        surf, lem = [], []
        for li in lemma_idx:
            fi = int(rng.integers(0, n_forms[li]))
            surf.append(forms[li][fi])
            lem.append(lemmas[li])
        surf[0] = surf[0][0].upper() + surf[0][1:]
        rel = [rels[j] for j in rng.choice(n_rel, size=length, p=rel_weights)]
        return surf, lem, rel

    templates = [draw_sentence() for _ in range(n_templates)]
    docs = []
    for d in range(n_docs):
        if rng.random() < redundancy_knob:
            surf, lem, rel = templates[int(rng.integers(0, n_templates))]
        else:
            surf, lem, rel = draw_sentence()
        text = " ".join(surf)
        docs.append(
            Document(
                id=f"syn{d:06d}",
                language=SYNTH_LANGUAGE,
                text=text,
                tokens=tuple(Token.from_surface(s) for s in surf),
                lemmas=tuple(lem),
                deprels=tuple(rel),
            )
        )
    opts = (
        f"n_docs={n_docs},vocab_size={vocab_size},redundancy={redundancy_knob},"
        f"inflection={inflection_knob},seed={seed},doc_len={doc_len},"
        f"templates={n_templates},rels={n_rel}"
    )
    prov = Provenance(
        source="synth",
        format="synth",
        options_digest=hashlib.sha256(opts.encode()).hexdigest(),
    )
    return Corpus(language=SYNTH_LANGUAGE, docs=tuple(docs), provenance=prov)
