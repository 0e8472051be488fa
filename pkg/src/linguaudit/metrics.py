"""Corpus-level linguistic indicators.

Six scalar indicators over one corpus:

    M  mean number of observed inflectional variants per lemma
    S  entropy (nats) of the dependency-relation distribution
    R  mean pointwise mutual information (bits) between each token and its
       joint (left, right) neighbor context, add-k smoothed
    T  mean token length in characters
    C  fraction of tokens whose first character is an uppercase letter
    D  type-token ratio over casefolded surface forms

All indicators aggregate integer counts first and run the final float
reduction over sorted keys, so results are independent of document order
and of how partial counts were merged.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus
from .errors import ContractError
from .lexicons import stem, word_class

BOUNDARY = "\x00"

FALLBACK_STEMMER = "stemmer"
FALLBACK_RELATION_PROXY = "relation_proxy"


def _require_tokens(corpus: Corpus, metric: str) -> int:
    n = sum(d.token_count() for d in corpus.docs)
    if n == 0:
        raise ContractError(f"{metric}: corpus has no tokens")
    return n


def morphological_complexity(corpus: Corpus, fallback_stemmer: bool = False) -> float:
    """Mean count of distinct casefolded surface forms per lemma.

    Uses lemma annotations where present. Documents without annotations are
    handled by the frozen suffix-stripping stemmer when ``fallback_stemmer``
    is True, and are a contract error otherwise.
    """
    _require_tokens(corpus, "morphological_complexity")
    variants: dict[str, set[str]] = {}
    for doc in corpus.docs:
        if doc.lemmas is not None:
            pairs = zip(doc.lemmas, doc.tokens)
        elif fallback_stemmer:
            pairs = ((stem(t.surface, corpus.language), t) for t in doc.tokens)
        else:
            raise ContractError(
                f"morphological_complexity: doc {doc.id!r} has no lemma "
                "annotations; annotate the corpus or enable fallback_stemmer"
            )
        for lemma, tok in pairs:
            variants.setdefault(lemma.casefold(), set()).add(tok.surface.casefold())
    if not variants:
        raise ContractError("morphological_complexity: empty lemma vocabulary")
    total_forms = sum(len(v) for v in variants.values())
    return total_forms / len(variants)


@dataclass(frozen=True)
class RelationDistribution:
    """Empirical distribution over relation labels (or proxy bigram classes)."""

    probs: dict[str, float]
    total: int
    source: str  # "annotations" or "proxy"

    def __post_init__(self):
        if self.total <= 0:
            raise ContractError("relation distribution needs at least one observation")
        s = math.fsum(self.probs.values())
        if abs(s - 1.0) > 1e-9 or any(p <= 0 for p in self.probs.values()):
            raise ContractError("relation probabilities must be positive and sum to 1")


def relation_distribution(corpus: Corpus, fallback_proxy: bool = False) -> RelationDistribution:
    """Relation label distribution from annotations, or the proxy fallback.

    The proxy replaces dependency relations with within-document bigrams over
    coarse word classes (function word / content word / numeral /
    capitalized). To keep one consistent label space, the proxy applies to
    the whole corpus as soon as any document lacks annotations.
    """
    _require_tokens(corpus, "syntactic_entropy")
    use_proxy = any(d.deprels is None for d in corpus.docs)
    if use_proxy and not fallback_proxy:
        missing = next(d.id for d in corpus.docs if d.deprels is None)
        raise ContractError(
            f"syntactic_entropy: doc {missing!r} has no relation annotations; "
            "annotate the corpus or enable fallback_proxy"
        )
    counts: Counter[str] = Counter()
    if use_proxy:
        for doc in corpus.docs:
            classes = [
                word_class(t.surface, t.is_capitalized, corpus.language)
                for t in doc.tokens
            ]
            for a, b in zip(classes, classes[1:]):
                counts[f"{a}>{b}"] += 1
        source = "proxy"
    else:
        for doc in corpus.docs:
            counts.update(doc.deprels)
        source = "annotations"
    total = sum(counts.values())
    if total == 0:
        raise ContractError(
            "syntactic_entropy: no relation observations (proxy bigrams need "
            "documents with at least two tokens)"
        )
    probs = {label: counts[label] / total for label in sorted(counts)}
    return RelationDistribution(probs=probs, total=total, source=source)


def syntactic_entropy(corpus: Corpus, fallback_proxy: bool = False) -> float:
    """Shannon entropy, in nats, of the relation distribution."""
    dist = relation_distribution(corpus, fallback_proxy=fallback_proxy)
    return -math.fsum(p * math.log(p) for _, p in sorted(dist.probs.items()))


def redundancy(corpus: Corpus, smoothing_k: float = 1.0) -> float:
    """Mean PMI (bits) between each token and its (left, right) neighbor pair.

    Every token position is one event; neighbors beyond the document edge are
    the reserved boundary symbol, and contexts never span documents. With
    vocabulary V (observed tokens), probabilities are add-k estimates over
    |V| centers, (|V|+1)^2 context pairs, and |V|*(|V|+1)^2 joint cells.
    Requires at least one document with 3+ tokens (one interior position).
    """
    if smoothing_k <= 0:
        raise ContractError(f"smoothing_k must be > 0, got {smoothing_k}")
    _require_tokens(corpus, "redundancy")
    if not any(d.token_count() >= 3 for d in corpus.docs):
        raise ContractError(
            "redundancy: no document has 3+ tokens, so there are no interior "
            "token positions"
        )
    center: Counter[str] = Counter()
    context: Counter[tuple[str, str]] = Counter()
    joint: Counter[tuple[str, str, str]] = Counter()
    n_events = 0
    for doc in corpus.docs:
        surf = doc.surfaces
        for i, w in enumerate(surf):
            left = surf[i - 1] if i > 0 else BOUNDARY
            right = surf[i + 1] if i + 1 < len(surf) else BOUNDARY
            center[w] += 1
            context[(left, right)] += 1
            joint[(w, left, right)] += 1
            n_events += 1
    v = len(center)
    k = smoothing_k
    denom_w = n_events + k * v
    denom_c = n_events + k * (v + 1) ** 2
    denom_j = n_events + k * v * (v + 1) ** 2
    total = 0.0
    for (w, left, right) in sorted(joint):
        n_wc = joint[(w, left, right)]
        p_j = (n_wc + k) / denom_j
        p_w = (center[w] + k) / denom_w
        p_c = (context[(left, right)] + k) / denom_c
        total += n_wc * math.log2(p_j / (p_w * p_c))
    return total / n_events


def avg_word_length(corpus: Corpus) -> float:
    """Mean token length in characters."""
    n = _require_tokens(corpus, "avg_word_length")
    total = sum(t.char_len for d in corpus.docs for t in d.tokens)
    return total / n


def capitalization_rate(corpus: Corpus) -> float:
    """Fraction of tokens whose first character is an uppercase letter."""
    n = _require_tokens(corpus, "capitalization_rate")
    caps = sum(1 for d in corpus.docs for t in d.tokens if t.is_capitalized)
    return caps / n


def vocabulary_richness(corpus: Corpus) -> float:
    """Type-token ratio: distinct casefolded surfaces over total tokens."""
    n = _require_tokens(corpus, "vocabulary_richness")
    types = {t.surface.casefold() for d in corpus.docs for t in d.tokens}
    return len(types) / n


def _histogram(values) -> list[list[int]]:
    counts = Counter(values)
    return [[v, counts[v]] for v in sorted(counts)]


@dataclass
class LinguisticProfile:
    """All six indicators plus the raw shape statistics behind them."""

    lang: str
    M: float
    S: float
    R: float
    T: float
    C: float
    D: float
    n_tokens: int
    n_types: int
    sentence_len_hist: list[list[int]]
    word_len_hist: list[list[int]]
    fallbacks_used: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "lang": self.lang,
            "M": self.M,
            "S": self.S,
            "R": self.R,
            "T": self.T,
            "C": self.C,
            "D": self.D,
            "n_tokens": self.n_tokens,
            "n_types": self.n_types,
            "sentence_len_hist": self.sentence_len_hist,
            "word_len_hist": self.word_len_hist,
            "fallbacks_used": list(self.fallbacks_used),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LinguisticProfile":
        try:
            return cls(
                lang=d["lang"],
                M=float(d["M"]),
                S=float(d["S"]),
                R=float(d["R"]),
                T=float(d["T"]),
                C=float(d["C"]),
                D=float(d["D"]),
                n_tokens=int(d["n_tokens"]),
                n_types=int(d["n_types"]),
                sentence_len_hist=[[int(a), int(b)] for a, b in d["sentence_len_hist"]],
                word_len_hist=[[int(a), int(b)] for a, b in d["word_len_hist"]],
                fallbacks_used=list(d.get("fallbacks_used", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed profile JSON: {exc}") from exc


def profile(
    corpus: Corpus,
    fallback_stemmer: bool = False,
    fallback_proxy: bool = False,
    smoothing_k: float = 1.0,
) -> LinguisticProfile:
    """Compute the full indicator profile for one corpus.

    Fallbacks fire only where annotations are missing, and the profile
    records which ones actually ran.
    """
    n_tokens = _require_tokens(corpus, "profile")
    fallbacks = []
    if fallback_stemmer and any(d.lemmas is None for d in corpus.docs):
        fallbacks.append(FALLBACK_STEMMER)
    if fallback_proxy and any(d.deprels is None for d in corpus.docs):
        fallbacks.append(FALLBACK_RELATION_PROXY)
    types = {t.surface.casefold() for d in corpus.docs for t in d.tokens}
    return LinguisticProfile(
        lang=corpus.language,
        M=morphological_complexity(corpus, fallback_stemmer=fallback_stemmer),
        S=syntactic_entropy(corpus, fallback_proxy=fallback_proxy),
        R=redundancy(corpus, smoothing_k=smoothing_k),
        T=avg_word_length(corpus),
        C=capitalization_rate(corpus),
        D=vocabulary_richness(corpus),
        n_tokens=n_tokens,
        n_types=len(types),
        sentence_len_hist=_histogram(d.token_count() for d in corpus.docs),
        word_len_hist=_histogram(t.char_len for d in corpus.docs for t in d.tokens),
        fallbacks_used=fallbacks,
    )


def write_profile(prof: LinguisticProfile, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(prof.to_json_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def read_profile(path: str) -> LinguisticProfile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return LinguisticProfile.from_json_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractError(f"cannot read profile {path!r}: {exc}") from exc
