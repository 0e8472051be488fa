"""Gradient-boosted depth-1 stumps for binary classification.

A from-scratch replacement for heavyweight boosting libraries: logistic
loss, Newton leaf values, exhaustive split search with deterministic
tie-breaking (lowest feature index, then lowest threshold), no
subsampling. Same data and configuration always produce the same model,
bit for bit, and models round-trip exactly through JSON.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import ContractError

_LEAF_CLIP = 10.0
_EPS = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class StumpBoostClassifier(BaseEstimator):
    """Binary gradient boosting over axis-aligned threshold stumps.

    ``random_state`` is accepted for interface compatibility; the algorithm
    itself is deterministic and never draws from it.
    """

    def __init__(
        self,
        n_rounds: int = 150,
        learning_rate: float = 0.1,
        max_depth: int = 1,
        random_state: int = 0,
    ):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.random_state = random_state

    def fit(self, X, y) -> "StumpBoostClassifier":
        if self.max_depth != 1:
            raise ContractError(
                f"only depth-1 stumps are supported, got max_depth={self.max_depth}"
            )
        if self.n_rounds < 1:
            raise ContractError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.learning_rate <= 0:
            raise ContractError(f"learning_rate must be > 0, got {self.learning_rate}")
        X = np.asarray(X, dtype=np.float64)
        yb = np.asarray(y).astype(bool)
        if X.ndim != 2 or X.shape[0] != yb.shape[0]:
            raise ContractError(
                f"X shape {X.shape} does not align with {yb.shape[0]} labels"
            )
        if yb.all() or not yb.any():
            raise ContractError("training labels contain a single class")
        yf = yb.astype(np.float64)
        n, d = X.shape
        order = np.argsort(X, axis=0, kind="stable")
        Xs = np.take_along_axis(X, order, axis=0)

        p_prior = min(max(yf.mean(), _EPS), 1.0 - _EPS)
        f0 = float(np.log(p_prior / (1.0 - p_prior)))
        F = np.full(n, f0, dtype=np.float64)
        stumps: list[tuple[int, float, float, float]] = []
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        for _ in range(self.n_rounds):
            p = _sigmoid(F)
            r = yf - p
            h = np.maximum(p * (1.0 - p), _EPS)
            total_r = r.sum()
            total_h = h.sum()
            best_gain = -np.inf
            best = None
            for f in range(d):
                xs = Xs[:, f]
                valid = xs[:-1] < xs[1:]
                if not valid.any():
                    continue
                rs = r[order[:, f]]
                cr = np.cumsum(rs)[:-1]
                gains = np.where(
                    valid,
                    cr * cr / n_left + (total_r - cr) * (total_r - cr) / n_right,
                    -np.inf,
                )
                i = int(np.argmax(gains))
                if gains[i] > best_gain:
                    ch = np.cumsum(h[order[:, f]])[:-1]
                    lv = cr[i] / max(ch[i], _EPS)
                    rv = (total_r - cr[i]) / max(total_h - ch[i], _EPS)
                    best_gain = float(gains[i])
                    best = (
                        f,
                        float((xs[i] + xs[i + 1]) / 2.0),
                        float(np.clip(lv, -_LEAF_CLIP, _LEAF_CLIP)),
                        float(np.clip(rv, -_LEAF_CLIP, _LEAF_CLIP)),
                    )
            if best is None:
                break
            f, thr, lv, rv = best
            F = F + self.learning_rate * np.where(X[:, f] <= thr, lv, rv)
            stumps.append(best)
        self.f0_ = f0
        self.stumps_ = stumps
        self.n_features_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "stumps_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ContractError(
                f"X shape {X.shape} does not match {self.n_features_} features"
            )
        F = np.full(X.shape[0], self.f0_, dtype=np.float64)
        for f, thr, lv, rv in self.stumps_:
            F += self.learning_rate * np.where(X[:, f] <= thr, lv, rv)
        return F

    def predict_proba(self, X) -> np.ndarray:
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) >= 0.0

    def to_json_dict(self) -> dict:
        check_is_fitted(self, "stumps_")
        return {
            "kind": "stump-boost",
            "f0": self.f0_,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features_,
            "stumps": [
                {"feature": f, "threshold": t, "left": lv, "right": rv}
                for f, t, lv, rv in self.stumps_
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "StumpBoostClassifier":
        try:
            if d["kind"] != "stump-boost":
                raise ContractError(f"unknown model kind {d['kind']!r}")
            model = cls(
                n_rounds=max(1, len(d["stumps"])), learning_rate=float(d["learning_rate"])
            )
            model.f0_ = float(d["f0"])
            model.n_features_ = int(d["n_features"])
            model.stumps_ = [
                (
                    int(s["feature"]),
                    float(s["threshold"]),
                    float(s["left"]),
                    float(s["right"]),
                )
                for s in d["stumps"]
            ]
            return model
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed attack model JSON: {exc}") from exc

    def digest(self) -> str:
        payload = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
