"""CART trees: Gini classification and squared-error regression.

Split search is an exhaustive scan over the midpoints of consecutive
distinct feature values, vectorized with cumulative sums. Ties between
equally good splits resolve to the lowest feature index, then the lowest
threshold, so a fit is a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np

from .base import Classifier


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "prediction", "proba")

    def __init__(self, feature=None, threshold=None, left=None, right=None,
                 prediction=None, proba=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.prediction = prediction
        self.proba = proba

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"prediction": self.prediction, "proba": self.proba}
        return {
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "_Node":
        if "feature" not in d:
            return _Node(prediction=d["prediction"], proba=d["proba"])
        return _Node(
            feature=d["feature"], threshold=d["threshold"],
            left=_Node.from_dict(d["left"]), right=_Node.from_dict(d["right"]),
        )


def _traverse(node: _Node, X: np.ndarray) -> list[_Node]:
    out = [None] * X.shape[0]
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        cur, idx = stack.pop()
        if cur.is_leaf:
            for i in idx:
                out[i] = cur
            continue
        go_left = X[idx, cur.feature] <= cur.threshold
        stack.append((cur.left, idx[go_left]))
        stack.append((cur.right, idx[~go_left]))
    return out


def gini_impurity(y: np.ndarray, weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if total <= 0:
        return 0.0
    w1 = float(np.sum(weights[y == 1]))
    p1 = w1 / total
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def best_gini_split(X, y, weights, min_leaf: int, features=None):
    """Best (feature, threshold, gain) over the given feature subset.

    Gain is the weighted impurity decrease; returns None when no candidate
    respects the min_leaf count on both sides. Splits with zero gain are
    still candidates, which is what lets depth-limited trees carve XOR.
    """
    n, p = X.shape
    features = range(p) if features is None else features
    total_w = float(np.sum(weights))
    w_pos = weights * (y == 1)
    parent = gini_impurity(y, weights)

    best = None  # (neg_gain, feature, threshold) ordering key
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        w_sorted = weights[order]
        wp_sorted = w_pos[order]

        cut = np.flatnonzero(xs[:-1] != xs[1:]) + 1  # left-side sizes
        if cut.size == 0:
            continue
        ok = (cut >= min_leaf) & (n - cut >= min_leaf)
        cut = cut[ok]
        if cut.size == 0:
            continue

        cw = np.cumsum(w_sorted)
        cwp = np.cumsum(wp_sorted)
        wl = cw[cut - 1]
        wpl = cwp[cut - 1]
        wr = total_w - wl
        wpr = cwp[-1] - wpl

        with np.errstate(invalid="ignore", divide="ignore"):
            pl = np.where(wl > 0, wpl / np.where(wl > 0, wl, 1.0), 0.0)
            pr = np.where(wr > 0, wpr / np.where(wr > 0, wr, 1.0), 0.0)
        gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
        gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
        child = (wl * gini_l + wr * gini_r) / total_w
        gains = parent - child

        k = int(np.argmax(gains))
        thr = (xs[cut[k] - 1] + xs[cut[k]]) / 2.0
        cand = (-float(gains[k]), f, float(thr))
        if best is None or cand < best:
            best = cand

    if best is None:
        return None
    neg_gain, f, thr = best
    return f, thr, -neg_gain


class DecisionTreeClassifier(Classifier):
    """Binary CART with Gini impurity and optional per-split feature draws.

    sample_weight support makes the same tree serve as the AdaBoost weak
    learner; rng+mtry make it the random-forest member.
    """

    kind = "TREE"

    def __init__(self, max_depth: int = 6, min_leaf: int = 2,
                 mtry: int | None = None, rng: np.random.Generator | None = None):
        super().__init__()
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.mtry = mtry
        self.rng = rng
        self.root: _Node | None = None

    def fit(self, X, y, sample_weight=None):
        # Pure-label and single-class inputs are legal here: they produce a
        # single leaf, which bootstrap resamples and boosting rely on.
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be n x p with one label per row")
        if sample_weight is None:
            sample_weight = np.full(len(y), 1.0 / len(y))
        self.root = self._grow(X, y, np.asarray(sample_weight, dtype=float), 0)
        self.fitted = True
        return self

    def _leaf(self, y, weights) -> _Node:
        w1 = float(np.sum(weights[y == 1]))
        w0 = float(np.sum(weights[y == 0]))
        total = w0 + w1
        proba = w1 / total if total > 0 else 0.0
        return _Node(prediction=1 if w1 > w0 else 0, proba=proba)

    def _grow(self, X, y, weights, depth) -> _Node:
        if depth >= self.max_depth or len(y) < 2 * self.min_leaf or np.all(y == y[0]):
            return self._leaf(y, weights)

        p = X.shape[1]
        if self.mtry is not None and self.mtry < p:
            features = sorted(self.rng.choice(p, size=self.mtry, replace=False).tolist())
        else:
            features = None
        split = best_gini_split(X, y, weights, self.min_leaf, features)
        if split is None:
            return self._leaf(y, weights)
        f, thr, _ = split
        mask = X[:, f] <= thr
        return _Node(
            feature=f, threshold=thr,
            left=self._grow(X[mask], y[mask], weights[mask], depth + 1),
            right=self._grow(X[~mask], y[~mask], weights[~mask], depth + 1),
        )

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([leaf.proba for leaf in _traverse(self.root, X)])

    def _predict(self, X):
        return np.array([leaf.prediction for leaf in _traverse(self.root, X)], dtype=int)

    def hyperparameters(self):
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf, "mtry": self.mtry}

    def state_dict(self):
        return {"root": self.root.to_dict()}

    def load_state(self, state):
        self.root = _Node.from_dict(state["root"])
        self.fitted = True


class RegressionTree:
    """Squared-error CART for boosting stages.

    Splits minimize child SSE; leaf values come from leaf_value(indices),
    which lets gradient boosting install Newton-step outputs.
    """

    def __init__(self, max_depth: int = 3, min_leaf: int = 2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.root: _Node | None = None

    def fit(self, X, targets, leaf_value=None):
        X = np.asarray(X, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if leaf_value is None:
            leaf_value = lambda idx: float(np.mean(targets[idx]))
        self.root = self._grow(X, targets, np.arange(len(targets)), 0, leaf_value)
        return self

    def _grow(self, X, targets, idx, depth, leaf_value) -> _Node:
        t = targets[idx]
        if depth >= self.max_depth or len(idx) < 2 * self.min_leaf or np.ptp(t) == 0.0:
            return _Node(prediction=leaf_value(idx), proba=None)
        split = self._best_sse_split(X[idx], t)
        if split is None:
            return _Node(prediction=leaf_value(idx), proba=None)
        f, thr = split
        mask = X[idx, f] <= thr
        return _Node(
            feature=f, threshold=thr,
            left=self._grow(X, targets, idx[mask], depth + 1, leaf_value),
            right=self._grow(X, targets, idx[~mask], depth + 1, leaf_value),
        )

    def _best_sse_split(self, X, t):
        n, p = X.shape
        best = None
        for f in range(p):
            order = np.argsort(X[:, f], kind="stable")
            xs = X[order, f]
            ts = t[order]
            cut = np.flatnonzero(xs[:-1] != xs[1:]) + 1
            cut = cut[(cut >= self.min_leaf) & (n - cut >= self.min_leaf)]
            if cut.size == 0:
                continue
            cs = np.cumsum(ts)
            cs2 = np.cumsum(ts * ts)
            nl = cut.astype(float)
            nr = n - nl
            sl = cs[cut - 1]
            sr = cs[-1] - sl
            sse = (cs2[cut - 1] - sl * sl / nl) + (cs2[-1] - cs2[cut - 1] - sr * sr / nr)
            k = int(np.argmin(sse))
            thr = (xs[cut[k] - 1] + xs[cut[k]]) / 2.0
            cand = (float(sse[k]), f, float(thr))
            if best is None or cand < best:
                best = cand
        if best is None:
            return None
        _, f, thr = best
        return f, thr

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([leaf.prediction for leaf in _traverse(self.root, X)])

    def to_dict(self):
        return self.root.to_dict()

    @staticmethod
    def from_dict(d, max_depth=3, min_leaf=2):
        tree = RegressionTree(max_depth, min_leaf)
        tree.root = _Node.from_dict(d)
        return tree
