"""Shadow-model membership inference over confidence trajectories.

The signal is the per-epoch top-class confidence of a classifier on each
document, epochs 1..E (the untrained epoch-0 snapshot is excluded by
contract). An attack model is trained on a shadow classifier's
trajectories, where membership is known, and evaluated on the target's.
The attack remembers its shadow document ids and refuses targets that
overlap them unless the caller explicitly allows the reuse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .boosting import StumpBoostClassifier
from .corpus import Corpus
from .errors import ContractError, InvariantError

DEFAULT_HIST_BINS = 20


@dataclass(frozen=True)
class ConfidenceTrajectory:
    doc_id: str
    member: bool
    conf: tuple[float, ...]

    def __post_init__(self):
        if not self.conf:
            raise ContractError(f"trajectory for {self.doc_id!r} is empty")
        if any(not 0.0 <= c <= 1.0 for c in self.conf):
            raise ContractError(
                f"trajectory for {self.doc_id!r} has confidence outside [0, 1]"
            )


def collect_trajectories(classifier, corpus: Corpus) -> list[ConfidenceTrajectory]:
    """Per-document top-class confidence across epochs 1..E.

    ``classifier`` is a fitted BinClassifier (or anything exposing
    ``doc_ids_``, ``in_ids_``, ``top_conf_`` with epochs as rows). Every
    corpus document must have recorded snapshots.
    """
    for attr in ("doc_ids_", "in_ids_", "top_conf_"):
        if not hasattr(classifier, attr):
            raise ContractError(
                "collect_trajectories needs a fitted BinClassifier-style "
                f"object (missing {attr})"
            )
    pos = {did: i for i, did in enumerate(classifier.doc_ids_)}
    out = []
    for doc in corpus.docs:
        if doc.id not in pos:
            raise ContractError(
                f"doc {doc.id!r} has no recorded snapshots in this classifier"
            )
        j = pos[doc.id]
        out.append(
            ConfidenceTrajectory(
                doc_id=doc.id,
                member=doc.id in classifier.in_ids_,
                conf=tuple(float(v) for v in classifier.top_conf_[:, j]),
            )
        )
    return out


def write_trajectories(trajs: list[ConfidenceTrajectory], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in trajs:
            fh.write(
                json.dumps(
                    {"doc_id": t.doc_id, "member": t.member, "conf": list(t.conf)},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_trajectories(path: str) -> list[ConfidenceTrajectory]:
    out: list[ConfidenceTrajectory] = []
    seen: set[str] = set()
    length: int | None = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ContractError(f"cannot open trajectory file {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                t = ConfidenceTrajectory(
                    doc_id=str(rec["doc_id"]),
                    member=bool(rec["member"]),
                    conf=tuple(float(c) for c in rec["conf"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ContractError(f"{path}:{lineno}: bad trajectory: {exc}") from exc
            if t.doc_id in seen:
                raise ContractError(f"{path}:{lineno}: duplicate doc id {t.doc_id!r}")
            seen.add(t.doc_id)
            if length is None:
                length = len(t.conf)
            elif len(t.conf) != length:
                raise ContractError(
                    f"{path}:{lineno}: trajectory length {len(t.conf)} differs "
                    f"from {length}"
                )
            out.append(t)
    if not out:
        raise ContractError(f"{path}: no trajectories")
    return out


def _as_xy(trajs: list[ConfidenceTrajectory]) -> tuple[np.ndarray, np.ndarray]:
    lengths = {len(t.conf) for t in trajs}
    if len(lengths) != 1:
        raise ContractError(f"mixed trajectory lengths: {sorted(lengths)}")
    X = np.array([t.conf for t in trajs], dtype=np.float64)
    y = np.array([t.member for t in trajs], dtype=bool)
    return X, y


@dataclass
class AttackModel:
    booster: StumpBoostClassifier
    n_epochs: int
    shadow_doc_ids: frozenset[str]
    config: dict

    def digest(self) -> str:
        return self.booster.digest()


def train_attack(
    shadow: list[ConfidenceTrajectory],
    n_rounds: int = 150,
    learning_rate: float = 0.1,
    max_depth: int = 1,
    random_state: int = 0,
) -> AttackModel:
    """Fit the boosted-stump attack on shadow trajectories."""
    if not shadow:
        raise ContractError("shadow trajectory set is empty")
    X, y = _as_xy(shadow)
    if y.all() or not y.any():
        raise ContractError("shadow set contains a single membership class")
    config = {
        "n_rounds": n_rounds,
        "learning_rate": learning_rate,
        "max_depth": max_depth,
        "random_state": random_state,
    }
    booster = StumpBoostClassifier(**config).fit(X, y)
    return AttackModel(
        booster=booster,
        n_epochs=X.shape[1],
        shadow_doc_ids=frozenset(t.doc_id for t in shadow),
        config=config,
    )


def save_attack(attack: AttackModel, path: str) -> None:
    payload = {
        "schema": "attack-model/1",
        "n_epochs": attack.n_epochs,
        "shadow_doc_ids": sorted(attack.shadow_doc_ids),
        "config": attack.config,
        "booster": attack.booster.to_json_dict(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_attack(path: str) -> AttackModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("schema") != "attack-model/1":
            raise ContractError(f"{path}: not an attack-model file")
        return AttackModel(
            booster=StumpBoostClassifier.from_json_dict(payload["booster"]),
            n_epochs=int(payload["n_epochs"]),
            shadow_doc_ids=frozenset(payload["shadow_doc_ids"]),
            config=dict(payload["config"]),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"cannot load attack model {path!r}: {exc}") from exc


@dataclass
class MiaResult:
    accuracy: float
    precision_in: float | None
    precision_out: float | None
    n_target: int
    hist_bin_edges: list[float]
    per_epoch_hists: list[dict]
    threshold_provenance: str

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision_in": self.precision_in,
            "precision_out": self.precision_out,
            "n_target": self.n_target,
            "hist_bin_edges": self.hist_bin_edges,
            "per_epoch_hists": self.per_epoch_hists,
            "threshold_provenance": self.threshold_provenance,
        }


def evaluate_mia(
    attack: AttackModel,
    target: list[ConfidenceTrajectory],
    allow_overlap: bool = False,
    n_bins: int = DEFAULT_HIST_BINS,
) -> MiaResult:
    """Attack accuracy and per-class precision on target trajectories.

    The precision/accuracy arithmetic is re-verified against a naive
    confusion-matrix count on every call; a mismatch is an internal bug.
    """
    if not target:
        raise ContractError("target trajectory set is empty")
    X, y = _as_xy(target)
    if X.shape[1] != attack.n_epochs:
        raise ContractError(
            f"target trajectories have {X.shape[1]} epochs, attack expects "
            f"{attack.n_epochs}"
        )
    if y.all() or not y.any():
        raise ContractError("target set contains a single membership class")
    overlap = attack.shadow_doc_ids.intersection(t.doc_id for t in target)
    if overlap and not allow_overlap:
        raise ContractError(
            f"{len(overlap)} target docs were in the shadow split (e.g. "
            f"{sorted(overlap)[:3]}); pass allow_overlap=True to evaluate anyway"
        )
    pred = attack.booster.predict(X)

    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    tn = int(np.sum(~pred & ~y))
    fn = int(np.sum(~pred & y))
    naive = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for pi, yi in zip(pred.tolist(), y.tolist()):
        key = ("tp" if yi else "fp") if pi else ("fn" if yi else "tn")
        naive[key] += 1
    if (tp, fp, tn, fn) != (naive["tp"], naive["fp"], naive["tn"], naive["fn"]):
        raise InvariantError(
            f"confusion-matrix mismatch: vectorized {(tp, fp, tn, fn)} vs "
            f"naive {tuple(naive.values())}"
        )
    n = len(target)
    accuracy = (tp + tn) / n
    precision_in = tp / (tp + fp) if (tp + fp) > 0 else None
    precision_out = tn / (tn + fn) if (tn + fn) > 0 else None

    edges = np.linspace(0.0, 1.0, n_bins + 1)
    per_epoch = []
    for e in range(attack.n_epochs):
        in_counts, _ = np.histogram(X[y, e], bins=edges)
        out_counts, _ = np.histogram(X[~y, e], bins=edges)
        per_epoch.append(
            {
                "epoch": e + 1,
                "in": [int(c) for c in in_counts],
                "out": [int(c) for c in out_counts],
            }
        )
    provenance = (
        f"stump-boost digest={attack.digest()[:16]} decision_threshold=0.5 "
        f"shadow_n={len(attack.shadow_doc_ids)}"
    )
    return MiaResult(
        accuracy=accuracy,
        precision_in=precision_in,
        precision_out=precision_out,
        n_target=n,
        hist_bin_edges=[float(e) for e in edges],
        per_epoch_hists=per_epoch,
        threshold_provenance=provenance,
    )


@dataclass
class SeparabilityReport:
    epoch: int
    bin_edges: list[float]
    p_in: list[float]
    p_out: list[float]
    overlap: float

    def to_json_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "bin_edges": self.bin_edges,
            "p_in": self.p_in,
            "p_out": self.p_out,
            "overlap": self.overlap,
        }


def separability_report(
    trajs: list[ConfidenceTrajectory],
    epoch: int | None = None,
    n_bins: int = DEFAULT_HIST_BINS,
) -> SeparabilityReport:
    """Shared-bin confidence histograms by membership plus their overlap.

    Overlap is the histogram overlap coefficient sum(min(p_in, p_out)) over
    n_bins fixed-width bins on [0, 1]: 1.0 for identical per-bin
    distributions, 0.0 for bin-disjoint supports.
    """
    if not trajs:
        raise ContractError("separability_report needs trajectories")
    X, y = _as_xy(trajs)
    n_epochs = X.shape[1]
    if epoch is None:
        epoch = n_epochs
    if not 1 <= epoch <= n_epochs:
        raise ContractError(f"epoch {epoch} outside 1..{n_epochs}")
    if y.all() or not y.any():
        raise ContractError("separability needs both membership classes")
    vals = X[:, epoch - 1]
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    in_counts, _ = np.histogram(vals[y], bins=edges)
    out_counts, _ = np.histogram(vals[~y], bins=edges)
    p_in = in_counts / in_counts.sum()
    p_out = out_counts / out_counts.sum()
    return SeparabilityReport(
        epoch=epoch,
        bin_edges=[float(e) for e in edges],
        p_in=[float(v) for v in p_in],
        p_out=[float(v) for v in p_out],
        overlap=float(np.minimum(p_in, p_out).sum()),
    )
