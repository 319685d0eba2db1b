"""Independent brute-force reference implementations used to check the
library's fast paths. These deliberately share no code with the package:
everything is computed by direct enumeration of the definitions."""

from __future__ import annotations

import numpy as np


def brute_force_best_split(samples, X, y, feature_pool):
    """Enumerate every (feature, midpoint) candidate, computing the weighted
    Gini decrease directly; first strict maximum wins (features ascending,
    thresholds ascending)."""

    def gini_of(labels):
        n = len(labels)
        n1 = sum(labels)
        n0 = n - n1
        p0 = n0 / n
        p1 = n1 / n
        return 1.0 - p0 * p0 - p1 * p1

    rows = [int(i) for i in samples]
    n = len(rows)
    labels = [int(y[i]) for i in rows]
    if n < 2 or sum(labels) in (0, n):
        return None
    g_parent = gini_of(labels)

    best = None
    for feature in sorted(int(f) for f in feature_pool):
        pairs = sorted((float(X[i, feature]), int(y[i])) for i in rows)
        values = [v for v, _ in pairs]
        ordered = [l for _, l in pairs]
        for i in range(n - 1):
            if values[i] == values[i + 1]:
                continue
            threshold = (values[i] + values[i + 1]) / 2.0
            left = ordered[: i + 1]
            right = ordered[i + 1 :]
            nl = len(left)
            nr = len(right)
            delta = g_parent - (nl / n) * gini_of(left) - (nr / n) * gini_of(right)
            if delta > 0.0 and (best is None or delta > best[2]):
                best = (feature, threshold, delta)
    return best


def pair_count_auc(scores, labels):
    """AUROC by counting all positive-negative pairs, ties worth one half."""
    positives = [s for s, l in zip(scores, labels) if l == 1]
    negatives = [s for s, l in zip(scores, labels) if l == 0]
    if not positives or not negatives:
        raise ValueError("need both classes")
    wins = 0.0
    for p in positives:
        for q in negatives:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(positives) * len(negatives))


def exhaustive_kappa(a, b):
    """Cohen's kappa straight from the 2x2 contingency table."""
    n = len(a)
    table = [[0, 0], [0, 0]]
    for x, y in zip(a, b):
        table[x][y] += 1
    p_o = (table[0][0] + table[1][1]) / n
    p_e = 0.0
    for c in (0, 1):
        row = (table[c][0] + table[c][1]) / n
        col = (table[0][c] + table[1][c]) / n
        p_e += row * col
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else None
    return (p_o - p_e) / (1.0 - p_e)


def tree_training_error(model_predict, X, y):
    """Fraction of training rows a fitted model gets wrong."""
    wrong = 0
    for row, label in zip(np.asarray(X, dtype=np.float64), y):
        if model_predict(row) != label:
            wrong += 1
    return wrong / len(y)
