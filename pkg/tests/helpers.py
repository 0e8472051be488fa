"""Small constructors shared across test modules."""

from __future__ import annotations

import numpy as np

from linguaudit import Corpus, make_document


def build_corpus(
    token_docs,
    language: str = "xx",
    lemmas=None,
    deprels=None,
    prefix: str = "d",
) -> Corpus:
    """Corpus from lists of (alphanumeric) tokens; text is the space join."""
    docs = []
    for i, toks in enumerate(token_docs):
        docs.append(
            make_document(
                f"{prefix}{i:04d}",
                language,
                " ".join(toks),
                lemmas=list(lemmas[i]) if lemmas is not None else None,
                deprels=list(deprels[i]) if deprels is not None else None,
            )
        )
    return Corpus(language=language, docs=tuple(docs))


def make_vocab(n: int, prefix: str = "w") -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def rand_token_docs(rng: np.random.Generator, vocab, n_docs, lo, hi):
    out = []
    for _ in range(n_docs):
        n = int(rng.integers(lo, hi + 1))
        out.append([vocab[int(j)] for j in rng.integers(0, len(vocab), size=n)])
    return out
