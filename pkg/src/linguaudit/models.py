"""Toy models that stand in for the fine-tuned checkpoints.

Two deliberately simple, fully deterministic models:

* ``NGramModel``: a count-based backoff language model. Its value for the
  audit is that memorization is a construction property, not an empirical
  one: a training sentence whose (order-1)-token windows are unique forces
  greedy decoding to reproduce the sentence, which gives the extraction
  pipeline a ground-truth oracle.
* ``BinClassifier``: a linear one-vs-rest classifier over hashed token and
  character n-gram features for the length-bin task. It snapshots weights,
  per-document confidence, and per-document loss after every epoch, which
  is exactly the raw material the memorization and membership-inference
  stages consume.

Both follow sklearn estimator conventions (params stored verbatim, ``fit``
returns self, fitted attributes end in underscore).
"""

from __future__ import annotations

import hashlib
import zlib

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, Document, corpus_digest
from .errors import ContractError
from .memorization import LossMatrix, make_ensemble_masks

BOS = "\x02"
EOS = "\x03"


class NGramModel(BaseEstimator):
    """Backoff n-gram language model with a fixed pseudo-count.

    The conditional distribution at a context is taken from the longest
    observed suffix of that context (down to the unigram level, which is
    always observed) and smoothed additively over the vocabulary plus the
    end symbol, so it always sums to 1.
    """

    def __init__(self, order: int = 5, smoothing: float = 0.01):
        self.order = order
        self.smoothing = smoothing

    def fit(self, corpus: Corpus) -> "NGramModel":
        if self.order < 1:
            raise ContractError(f"order must be >= 1, got {self.order}")
        if self.smoothing <= 0:
            raise ContractError(f"smoothing must be > 0, got {self.smoothing}")
        if sum(d.token_count() for d in corpus.docs) == 0:
            raise ContractError("cannot fit an n-gram model on an empty corpus")
        counts: list[dict[tuple[str, ...], dict[str, int]]] = [
            {} for _ in range(self.order)
        ]
        vocab: set[str] = {EOS}
        for doc in corpus.docs:
            seq = (BOS,) * (self.order - 1) + doc.surfaces + (EOS,)
            vocab.update(doc.surfaces)
            for i in range(self.order - 1, len(seq)):
                nxt = seq[i]
                for k in range(self.order):
                    ctx = seq[i - k : i]
                    table = counts[k].setdefault(ctx, {})
                    table[nxt] = table.get(nxt, 0) + 1
        self.counts_ = counts
        self.vocab_ = tuple(sorted(vocab))
        self.vocab_index_ = {w: i for i, w in enumerate(self.vocab_)}
        self.digest_ = hashlib.sha256(
            f"ngram|order={self.order}|smoothing={self.smoothing!r}|".encode()
            + corpus_digest(corpus).encode()
        ).hexdigest()
        return self

    def _context_table(self, context: tuple[str, ...]) -> dict[str, int]:
        """Counts at the longest observed suffix of ``context``."""
        for k in range(min(len(context), self.order - 1), 0, -1):
            table = self.counts_[k].get(context[-k:])
            if table is not None:
                return table
        return self.counts_[0][()]

    def next_distribution(self, context: tuple[str, ...]) -> np.ndarray:
        """Smoothed probability over ``vocab_`` for the next token."""
        check_is_fitted(self, "counts_")
        table = self._context_table(tuple(context))
        probs = np.full(len(self.vocab_), self.smoothing, dtype=np.float64)
        for w, c in table.items():
            probs[self.vocab_index_[w]] += c
        probs /= probs.sum()
        return probs

    def generate(
        self,
        prompt: list[str] | tuple[str, ...],
        max_tokens: int,
        mode: str = "greedy",
        seed: int = 0,
    ) -> list[str]:
        """Continue ``prompt`` until max_tokens or the end symbol.

        Greedy decoding is deterministic (argmax, ties to the
        lexicographically smallest token because the vocabulary is sorted);
        sampled decoding is deterministic per seed.
        """
        check_is_fitted(self, "counts_")
        if not prompt:
            raise ContractError("prompt must be non-empty")
        if max_tokens < 0:
            raise ContractError(f"max_tokens must be >= 0, got {max_tokens}")
        if mode not in ("greedy", "sample"):
            raise ContractError(f"unknown generation mode {mode!r}")
        rng = (
            np.random.Generator(np.random.Philox(seed)) if mode == "sample" else None
        )
        if self.order > 1:
            context = ((BOS,) * (self.order - 1) + tuple(prompt))[-(self.order - 1) :]
        else:
            context = ()
        out: list[str] = []
        for _ in range(max_tokens):
            probs = self.next_distribution(context)
            if mode == "greedy":
                idx = int(np.argmax(probs))
            else:
                idx = int(rng.choice(len(probs), p=probs))
            token = self.vocab_[idx]
            if token == EOS:
                break
            out.append(token)
            if self.order > 1:
                context = (context + (token,))[-(self.order - 1) :]
        return out


def hashed_features(
    docs: list[Document] | tuple[Document, ...],
    dim: int = 4096,
    char_ngram: int = 3,
) -> np.ndarray:
    """L2-normalized hashed counts of casefolded tokens and char n-grams.

    Hashing uses crc32, so feature placement is stable across processes and
    platforms (no dependence on PYTHONHASHSEED).
    """
    if dim < 2:
        raise ContractError(f"feature dim must be >= 2, got {dim}")
    X = np.zeros((len(docs), dim), dtype=np.float64)
    for i, doc in enumerate(docs):
        row = X[i]
        for tok in doc.tokens:
            w = tok.surface.casefold()
            row[zlib.crc32(b"w|" + w.encode("utf-8")) % dim] += 1.0
            padded = f"^{w}$"
            for j in range(max(0, len(padded) - char_ngram + 1)):
                gram = padded[j : j + char_ngram]
                row[zlib.crc32(b"c|" + gram.encode("utf-8")) % dim] += 1.0
        norm = np.linalg.norm(row)
        if norm > 0:
            row /= norm
    return X


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class BinClassifier(BaseEstimator):
    """Linear one-vs-rest classifier for the 9-class length-bin task.

    Trains with seeded full-batch gradient descent on the mean one-vs-rest
    sigmoid cross-entropy. After every epoch it snapshots the weights and
    records, for every document it was handed (members and non-members
    alike), the confidence vector and the per-sample loss. Epoch 0 is the
    seeded near-zero initialization, so epoch-0 predictions are
    near-uniform.
    """

    def __init__(
        self,
        n_classes: int = 9,
        dim: int = 4096,
        epochs: int = 30,
        lr: float = 2.0,
        init_scale: float = 0.01,
        char_ngram: int = 3,
        seed: int = 0,
    ):
        self.n_classes = n_classes
        self.dim = dim
        self.epochs = epochs
        self.lr = lr
        self.init_scale = init_scale
        self.char_ngram = char_ngram
        self.seed = seed

    def fit(
        self,
        corpus: Corpus,
        in_ids,
        features: np.ndarray | None = None,
    ) -> "BinClassifier":
        """Train on the ``in_ids`` subset; snapshot every epoch over all docs.

        ``features`` lets callers reuse a precomputed ``hashed_features``
        matrix for the same corpus (the ensemble runner does).
        """
        if self.epochs < 1:
            raise ContractError(f"epochs must be >= 1, got {self.epochs}")
        in_ids = set(in_ids)
        if not in_ids:
            raise ContractError("in_ids is empty; nothing to train on")
        all_ids = set(corpus.doc_ids())
        stray = in_ids - all_ids
        if stray:
            raise ContractError(f"in_ids not in corpus: {sorted(stray)[:5]}")
        labels = []
        for doc in corpus.docs:
            if doc.bin_label is None:
                raise ContractError(
                    f"doc {doc.id!r} has no bin label; run assign_length_bins first"
                )
            if not 0 <= doc.bin_label < self.n_classes:
                raise ContractError(
                    f"doc {doc.id!r} bin label {doc.bin_label} outside "
                    f"0..{self.n_classes - 1}"
                )
            labels.append(doc.bin_label)
        if features is None:
            features = hashed_features(corpus.docs, dim=self.dim, char_ngram=self.char_ngram)
        if features.shape != (len(corpus.docs), self.dim):
            raise ContractError(
                f"feature matrix shape {features.shape} does not match "
                f"({len(corpus.docs)}, {self.dim})"
            )
        X = features
        y = np.array(labels, dtype=np.int64)
        Y = np.zeros((len(y), self.n_classes), dtype=np.float64)
        Y[np.arange(len(y)), y] = 1.0
        train_rows = np.array([d.id in in_ids for d in corpus.docs], dtype=bool)

        rng = np.random.Generator(np.random.Philox(self.seed))
        W = rng.normal(0.0, 1.0, size=(self.n_classes, self.dim)) * self.init_scale
        weights = [W.copy()]
        losses = np.zeros((self.epochs, len(y)), dtype=np.float64)
        top_conf = np.zeros((self.epochs, len(y)), dtype=np.float64)
        Xtr, Ytr = X[train_rows], Y[train_rows]
        n_tr = Xtr.shape[0]
        for epoch in range(1, self.epochs + 1):
            P_tr = _sigmoid(Xtr @ W.T)
            grad = (P_tr - Ytr).T @ Xtr / (self.n_classes * n_tr)
            W = W - self.lr * grad
            weights.append(W.copy())
            P = _sigmoid(X @ W.T)
            Pc = np.clip(P, 1e-12, 1.0 - 1e-12)
            loss = -(Y * np.log(Pc) + (1.0 - Y) * np.log(1.0 - Pc)).mean(axis=1)
            conf = P / P.sum(axis=1, keepdims=True)
            losses[epoch - 1] = loss
            top_conf[epoch - 1] = conf.max(axis=1)
        self.weights_ = weights
        self.losses_ = losses
        self.top_conf_ = top_conf
        self.doc_ids_ = corpus.doc_ids()
        self.in_ids_ = frozenset(in_ids)
        self.labels_ = y
        self.features_dim_ = self.dim
        self.epochs_ = self.epochs
        return self

    def _weights_at(self, epoch: int | None) -> np.ndarray:
        check_is_fitted(self, "weights_")
        if epoch is None:
            epoch = self.epochs_
        if not 0 <= epoch <= self.epochs_:
            raise ContractError(
                f"epoch {epoch} outside the trained range 0..{self.epochs_}"
            )
        return self.weights_[epoch]

    def predict_proba(
        self, docs: list[Document] | tuple[Document, ...], epoch: int | None = None
    ) -> np.ndarray:
        """(N, n_classes) confidence vectors at the given epoch snapshot."""
        W = self._weights_at(epoch)
        X = hashed_features(docs, dim=self.dim, char_ngram=self.char_ngram)
        P = _sigmoid(X @ W.T)
        return P / P.sum(axis=1, keepdims=True)

    def predict(self, doc: Document, epoch: int | None = None) -> np.ndarray:
        """Confidence vector for one document; sums to 1."""
        return self.predict_proba([doc], epoch=epoch)[0]


def ensemble_loss_matrix(
    corpus: Corpus,
    n_models: int = 10,
    inclusion_prob: float = 0.5,
    seed: int = 0,
    epochs: int = 12,
    dim: int = 4096,
    lr: float = 2.0,
    char_ngram: int = 3,
) -> LossMatrix:
    """Train an ensemble of independently seeded classifiers and collect
    final-epoch per-document losses plus the membership mask."""
    doc_ids = corpus.doc_ids()
    mask = make_ensemble_masks(
        doc_ids, n_models=n_models, inclusion_prob=inclusion_prob, seed=seed
    )
    features = hashed_features(corpus.docs, dim=dim, char_ngram=char_ngram)
    rows = []
    for m in range(n_models):
        in_ids = [doc_ids[j] for j in range(len(doc_ids)) if mask[m, j]]
        clf = BinClassifier(
            dim=dim, epochs=epochs, lr=lr, char_ngram=char_ngram, seed=seed * 1000 + m
        ).fit(corpus, in_ids, features=features)
        rows.append(clf.losses_[-1])
    return LossMatrix(
        model_ids=[f"toy-{m}" for m in range(n_models)],
        doc_ids=list(doc_ids),
        losses=np.vstack(rows),
        in_mask=mask,
    )
