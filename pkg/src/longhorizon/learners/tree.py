"""Exact-split, depth-limited CART trees (regression and classification).

Split tie-breaking is lowest feature index, then lowest threshold, which
makes fits bit-reproducible.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fit_tree_regression", "fit_tree_classification", "tree_predict"]

_EPS = 1e-12


def _best_split_regression(X, y, w, idx, min_leaf):
    """Return (loss, feature, threshold, left_mask) or None."""
    best = None
    n = idx.size
    ysub, wsub = y[idx], w[idx]
    for j in range(X.shape[1]):
        xs = X[idx, j]
        order = np.argsort(xs, kind="stable")
        xo, yo, wo = xs[order], ysub[order], wsub[order]
        boundary = xo[:-1] < xo[1:]
        if not boundary.any():
            continue
        cw = np.cumsum(wo)
        cwy = np.cumsum(wo * yo)
        cwy2 = np.cumsum(wo * yo * yo)
        W, S, Q = cw[-1], cwy[-1], cwy2[-1]
        lw, ls, lq = cw[:-1], cwy[:-1], cwy2[:-1]
        rw, rs, rq = W - lw, S - ls, Q - lq
        sse_l = lq - np.divide(ls * ls, lw, out=np.zeros_like(ls), where=lw > _EPS)
        sse_r = rq - np.divide(rs * rs, rw, out=np.zeros_like(rs), where=rw > _EPS)
        loss = sse_l + sse_r
        counts = np.arange(1, n)
        valid = boundary & (counts >= min_leaf) & (n - counts >= min_leaf)
        if not valid.any():
            continue
        loss = np.where(valid, loss, np.inf)
        t = int(np.argmin(loss))
        if best is None or loss[t] < best[0]:
            threshold = 0.5 * (xo[t] + xo[t + 1])
            best = (float(loss[t]), j, float(threshold))
    if best is None:
        return None
    _, j, threshold = best
    return best[0], j, threshold, X[idx, j] <= threshold


def _best_split_classification(X, cw_onehot, idx, min_leaf):
    """Weighted-Gini split. ``cw_onehot``: (n, C) per-class weight rows."""
    best = None
    n = idx.size
    csub = cw_onehot[idx]
    for j in range(X.shape[1]):
        xs = X[idx, j]
        order = np.argsort(xs, kind="stable")
        xo = xs[order]
        boundary = xo[:-1] < xo[1:]
        if not boundary.any():
            continue
        cum = np.cumsum(csub[order], axis=0)
        total = cum[-1]
        left = cum[:-1]
        right = total[None, :] - left
        lw = left.sum(axis=1)
        rw = right.sum(axis=1)
        gini_l = lw - np.divide(
            (left * left).sum(axis=1), lw, out=np.zeros_like(lw), where=lw > _EPS
        )
        gini_r = rw - np.divide(
            (right * right).sum(axis=1), rw, out=np.zeros_like(rw), where=rw > _EPS
        )
        loss = gini_l + gini_r
        counts = np.arange(1, n)
        valid = boundary & (counts >= min_leaf) & (n - counts >= min_leaf)
        if not valid.any():
            continue
        loss = np.where(valid, loss, np.inf)
        t = int(np.argmin(loss))
        if best is None or loss[t] < best[0]:
            threshold = 0.5 * (xo[t] + xo[t + 1])
            best = (float(loss[t]), j, float(threshold))
    if best is None:
        return None
    _, j, threshold = best
    return best[0], j, threshold, X[idx, j] <= threshold


def _weighted_mean(y, w):
    tw = w.sum()
    if tw <= _EPS:
        return float(np.mean(y)) if y.size else 0.0
    return float(np.sum(w * y) / tw)


def fit_tree_regression(X, y, w, depth, min_leaf=1):
    """Grow a regression tree; returns (root node dict, leaf id per row, leaves)."""
    leaf_of_row = np.zeros(X.shape[0], dtype=np.int64)
    leaves = []

    def build(idx, level):
        ysub, wsub = y[idx], w[idx]
        make_leaf = level >= depth or idx.size < 2 * min_leaf
        if not make_leaf:
            sse = np.sum(wsub * (ysub - _weighted_mean(ysub, wsub)) ** 2)
            if sse <= _EPS:
                make_leaf = True
        split = None if make_leaf else _best_split_regression(X, y, w, idx, min_leaf)
        if split is None:
            node = {"value": _weighted_mean(ysub, wsub)}
            leaf_of_row[idx] = len(leaves)
            leaves.append(node)
            return node
        _, j, threshold, left_mask = split
        return {
            "feature": int(j),
            "threshold": float(threshold),
            "left": build(idx[left_mask], level + 1),
            "right": build(idx[~left_mask], level + 1),
        }

    root = build(np.arange(X.shape[0]), 0)
    return root, leaf_of_row, leaves


def fit_tree_classification(X, labels_index, w, n_classes, depth, min_leaf=1):
    """Grow a classification tree over class indices 0..n_classes-1.

    Leaves store the class-weight vector; predicted index is the argmax
    with ties to the lower class index.
    """
    n = X.shape[0]
    cw_onehot = np.zeros((n, n_classes))
    # total-weight normalization keeps stored leaf counts (and thus the
    # serialized model) invariant to rescaling all weights
    cw_onehot[np.arange(n), labels_index] = w / w.sum()

    def leaf_node(idx):
        counts = cw_onehot[idx].sum(axis=0)
        return {"class_index": int(np.argmax(counts)), "counts": counts.tolist()}

    def build(idx, level):
        make_leaf = level >= depth or idx.size < 2 * min_leaf
        if not make_leaf:
            present = np.flatnonzero(cw_onehot[idx].sum(axis=0) > _EPS)
            if present.size <= 1:
                make_leaf = True
        split = (
            None
            if make_leaf
            else _best_split_classification(X, cw_onehot, idx, min_leaf)
        )
        if split is None:
            return leaf_node(idx)
        _, j, threshold, left_mask = split
        return {
            "feature": int(j),
            "threshold": float(threshold),
            "left": build(idx[left_mask], level + 1),
            "right": build(idx[~left_mask], level + 1),
        }

    return build(np.arange(n), 0)


def tree_predict(node, X, field="value"):
    """Vectorized routing of rows through a tree; returns the leaf ``field``."""
    out = np.empty(X.shape[0], dtype=np.float64)

    def walk(nd, rows):
        if rows.size == 0:
            return
        if "feature" not in nd:
            out[rows] = nd[field]
            return
        go_left = X[rows, nd["feature"]] <= nd["threshold"]
        walk(nd["left"], rows[go_left])
        walk(nd["right"], rows[~go_left])

    walk(node, np.arange(X.shape[0]))
    return out


def tree_class_scores(node, X, n_classes):
    """Per-class normalized leaf weight vectors for each row."""
    out = np.zeros((X.shape[0], n_classes))

    def walk(nd, rows):
        if rows.size == 0:
            return
        if "feature" not in nd:
            counts = np.asarray(nd["counts"], dtype=np.float64)
            total = counts.sum()
            scores = counts / total if total > 0 else np.full(n_classes, 1.0 / n_classes)
            out[rows] = scores
            return
        go_left = X[rows, nd["feature"]] <= nd["threshold"]
        walk(nd["left"], rows[go_left])
        walk(nd["right"], rows[~go_left])

    walk(node, np.arange(X.shape[0]))
    return out
