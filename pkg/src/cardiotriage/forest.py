"""Random Forest for dense vectors, built from first principles.

Binary classification only: Gini-impurity splits with thresholds at
midpoints of consecutive distinct values, bootstrap sampling, per-node
feature pools, majority voting, mean-decrease-in-impurity importances,
and a binary persistence format. Training is bit-reproducible: all
randomness flows from splitmix64 streams derived from the config seed,
and split ties break toward the lowest feature index, then the lowest
threshold.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import SplitMix64

MODEL_MAGIC = b"CVDF"
MODEL_VERSION = 1

_MASK64 = (1 << 64) - 1


class ModelFormatError(RuntimeError):
    """Model file violates the CVDF layout."""


@dataclass(frozen=True)
class ForestConfig:
    """Training hyperparameters.

    max_features is "all", "sqrt" (floor of sqrt(dim), min 1) or a fixed
    integer pool size. The default examines all features: with very few
    samples in a very high-dimensional space, subsampled pools routinely
    miss the informative dimensions entirely, and deterministic
    low-index tie-breaking already decorrelates bootstrap trees.
    """

    n_estimators: int = 100
    max_depth: int | None = None
    max_features: str | int = "all"
    bootstrap: bool = True
    seed: int = 42
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "all"):
                raise ValueError(f"max_features must be 'sqrt', 'all' or an integer, got {self.max_features!r}")
        elif self.max_features < 1:
            raise ValueError("fixed max_features must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")

    def pool_size(self, dim: int) -> int:
        if self.max_features == "all":
            return dim
        if self.max_features == "sqrt":
            return max(1, math.isqrt(dim))
        if self.max_features > dim:
            raise ValueError(f"max_features {self.max_features} exceeds dimension {dim}")
        return int(self.max_features)


@dataclass
class TreeNode:
    """Decision tree node. Leaves have feature None; internal nodes carry
    the split and bookkeeping for importance computation. Left children
    receive samples with x[feature] <= threshold."""

    class_counts: tuple[int, int]
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    impurity_decrease: float = 0.0
    n_node_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def prediction(self) -> int:
        n0, n1 = self.class_counts
        return 1 if n1 >= n0 else 0


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float  # fraction of trees voting high-risk
    votes: tuple[int, int]


@dataclass
class RandomForestModel:
    trees: tuple[TreeNode, ...]
    config: ForestConfig
    dim: int
    per_tree_seeds: tuple[int, ...]
    _importances: np.ndarray | None = field(default=None, repr=False, compare=False)


def gini(counts: tuple[int, int]) -> float:
    """Gini impurity 1 - p0^2 - p1^2 of a two-class count pair."""
    n0, n1 = counts
    n = n0 + n1
    if n < 1:
        raise ValueError("gini of an empty node is undefined")
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


def best_split(
    samples: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    feature_pool,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity_decrease) over the pool, or None.

    Candidate thresholds are midpoints of consecutive distinct sorted
    values. The winner maximizes the sample-weighted Gini decrease; exact
    ties go to the lowest feature index, then the lowest threshold. None
    means no candidate achieves a strictly positive decrease.
    """
    samples = np.asarray(samples, dtype=np.intp)
    n = samples.shape[0]
    if n < 2:
        return None
    labels = y[samples].astype(np.int64)
    n1_parent = int(labels.sum())
    n0_parent = n - n1_parent
    if n0_parent == 0 or n1_parent == 0:
        return None
    g_parent = gini((n0_parent, n1_parent))

    pool = np.sort(np.asarray(list(feature_pool), dtype=np.intp))
    values = X[samples][:, pool]  # (n, m)
    order = np.argsort(values, axis=0, kind="stable")
    sv = np.take_along_axis(values, order, axis=0)
    sy = labels[order]  # labels reordered per column

    # cumulative high-risk counts: row i = count within the first i+1 sorted samples
    cum1 = np.cumsum(sy, axis=0)
    nl = np.arange(1, n, dtype=np.float64)[:, None]  # left sizes per boundary
    nr = float(n) - nl
    l1 = cum1[:-1].astype(np.float64)
    l0 = nl - l1
    r1 = float(n1_parent) - l1
    r0 = nr - r1
    pl0 = l0 / nl
    pl1 = l1 / nl
    pr0 = r0 / nr
    pr1 = r1 / nr
    g_left = 1.0 - pl0 * pl0 - pl1 * pl1
    g_right = 1.0 - pr0 * pr0 - pr1 * pr1
    delta = g_parent - (nl / n) * g_left - (nr / n) * g_right
    delta[sv[:-1] == sv[1:]] = -np.inf  # no threshold between equal values

    best: tuple[float, int, float] | None = None
    col_best = np.argmax(delta, axis=0)  # first (lowest-threshold) max per column
    for j, feature in enumerate(pool):
        d = float(delta[col_best[j], j])
        if d <= 0.0:
            continue
        if best is None or d > best[0]:
            i = col_best[j]
            threshold = (float(sv[i, j]) + float(sv[i + 1, j])) / 2.0
            best = (d, int(feature), threshold)
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow(
    samples: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    rng: SplitMix64,
    depth: int,
    cfg: ForestConfig,
    pool_size: int,
) -> TreeNode:
    labels = y[samples]
    n1 = int(labels.sum())
    n0 = samples.shape[0] - n1
    node = TreeNode(class_counts=(n0, n1))
    if n0 == 0 or n1 == 0 or samples.shape[0] < cfg.min_samples_split:
        return node
    if cfg.max_depth is not None and depth >= cfg.max_depth:
        return node
    dim = X.shape[1]
    if pool_size >= dim:
        pool = range(dim)
    else:
        pool = rng.sample_indices(dim, pool_size)
    found = best_split(samples, X, y, pool)
    if found is None:
        return node
    feature, threshold, decrease = found
    mask = X[samples, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.impurity_decrease = decrease
    node.n_node_samples = int(samples.shape[0])
    node.left = _grow(samples[mask], X, y, rng, depth + 1, cfg, pool_size)
    node.right = _grow(samples[~mask], X, y, rng, depth + 1, cfg, pool_size)
    return node


def derive_tree_seeds(seed: int, count: int) -> tuple[int, ...]:
    """Per-tree seeds, pre-derived so tree construction order can't matter."""
    stream = SplitMix64(seed)
    return tuple(stream.next_u64() for _ in range(count))


def fit(X: np.ndarray, y: np.ndarray, cfg: ForestConfig = ForestConfig()) -> RandomForestModel:
    """Train a forest. Deterministic: same (X, y, cfg) gives identical trees."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, dim = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if y.shape != (n,):
        raise ValueError("y length must match X rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or infinite values")
    if set(np.unique(y)) != {0, 1}:
        raise ValueError("y must contain both classes 0 and 1")
    pool_size = cfg.pool_size(dim)

    seeds = derive_tree_seeds(cfg.seed, cfg.n_estimators)
    trees = []
    all_rows = np.arange(n, dtype=np.intp)
    for tree_seed in seeds:
        rng = SplitMix64(tree_seed)
        if cfg.bootstrap:
            samples = np.array([rng.next_below(n) for _ in range(n)], dtype=np.intp)
        else:
            samples = all_rows
        trees.append(_grow(samples, X, y, rng, 0, cfg, pool_size))
    return RandomForestModel(trees=tuple(trees), config=cfg, dim=dim, per_tree_seeds=seeds)


def _route(node: TreeNode, x: np.ndarray) -> int:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.prediction


def predict(model: RandomForestModel, x: np.ndarray) -> Prediction:
    """Majority vote over all trees; an exact tie predicts high risk."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValueError(f"input has shape {x.shape}, model expects ({model.dim},)")
    v1 = sum(_route(tree, x) for tree in model.trees)
    v0 = len(model.trees) - v1
    return Prediction(label=1 if v1 >= v0 else 0, score=v1 / len(model.trees), votes=(v0, v1))


def predict_batch(model: RandomForestModel, X: np.ndarray) -> list[Prediction]:
    return [predict(model, row) for row in np.asarray(X, dtype=np.float64)]


def _tree_importance(root: TreeNode, dim: int) -> np.ndarray | None:
    """Per-tree MDI vector normalized to sum 1, or None for a bare leaf."""
    if root.is_leaf:
        return None
    vec = np.zeros(dim, dtype=np.float64)
    n_root = root.n_node_samples
    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        vec[node.feature] += (node.n_node_samples / n_root) * node.impurity_decrease
        stack.append(node.left)
        stack.append(node.right)
    total = vec.sum()
    if total <= 0.0:
        return None
    return vec / total


def mdi_importances(model: RandomForestModel) -> np.ndarray:
    """Mean decrease in impurity per dimension.

    Each split contributes its sample-weighted Gini decrease to its
    feature; per-tree vectors are normalized to sum 1 and averaged over
    the trees that actually split (a forest of bare leaves yields the
    zero vector). The result is nonnegative and sums to 1 whenever any
    tree contains an internal node.
    """
    if model._importances is not None:
        return model._importances
    acc = np.zeros(model.dim, dtype=np.float64)
    contributing = 0
    for tree in model.trees:
        vec = _tree_importance(tree, model.dim)
        if vec is not None:
            acc += vec
            contributing += 1
    importances = acc / contributing if contributing else acc
    model._importances = importances
    return importances


def top_k_importances(model: RandomForestModel, k: int = 10) -> list[tuple[int, float]]:
    """Top k (dimension, importance) pairs, descending; ties to lower index."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > model.dim:
        raise ValueError(f"k={k} exceeds model dimension {model.dim}")
    imp = mdi_importances(model)
    order = sorted(range(model.dim), key=lambda d: (-imp[d], d))
    return [(d, float(imp[d])) for d in order[:k]]


def _write_node(out: list[bytes], node: TreeNode) -> None:
    if node.is_leaf:
        out.append(struct.pack("<BII", 0, node.class_counts[0], node.class_counts[1]))
    else:
        out.append(
            struct.pack(
                "<BIddI",
                1,
                node.feature,
                node.threshold,
                node.impurity_decrease,
                node.n_node_samples,
            )
        )
        _write_node(out, node.left)
        _write_node(out, node.right)


def save_model(model: RandomForestModel, path: str | Path) -> None:
    """Serialize to the CVDF layout: header, config block, dim, per-tree
    seeds, then preorder tree encodings with f64 thresholds (bit-exact)."""
    cfg = model.config
    mf = cfg.max_features
    if mf == "sqrt":
        mf_kind, mf_k = 0, 0
    elif mf == "all":
        mf_kind, mf_k = 1, 0
    else:
        mf_kind, mf_k = 2, int(mf)
    parts: list[bytes] = [
        MODEL_MAGIC,
        struct.pack("<H", MODEL_VERSION),
        struct.pack(
            "<IBIBIBQI",
            cfg.n_estimators,
            0 if cfg.max_depth is None else 1,
            cfg.max_depth or 0,
            mf_kind,
            mf_k,
            1 if cfg.bootstrap else 0,
            cfg.seed & _MASK64,
            cfg.min_samples_split,
        ),
        struct.pack("<I", model.dim),
        struct.pack("<I", len(model.per_tree_seeds)),
    ]
    for seed in model.per_tree_seeds:
        parts.append(struct.pack("<Q", seed & _MASK64))
    for tree in model.trees:
        _write_node(parts, tree)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise ModelFormatError(f"{self.path}: truncated model file")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values


def _read_node(reader: _Reader) -> TreeNode:
    (tag,) = reader.take("<B")
    if tag == 0:
        n0, n1 = reader.take("<II")
        return TreeNode(class_counts=(n0, n1))
    if tag != 1:
        raise ModelFormatError(f"{reader.path}: unknown node tag {tag}")
    feature, threshold, decrease, n_samples = reader.take("<IddI")
    left = _read_node(reader)
    right = _read_node(reader)
    counts = (
        left.class_counts[0] + right.class_counts[0],
        left.class_counts[1] + right.class_counts[1],
    )
    return TreeNode(
        class_counts=counts,
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        impurity_decrease=decrease,
        n_node_samples=n_samples,
    )


def load_model(path: str | Path) -> RandomForestModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 6 or data[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a forest model file (bad magic)")
    reader = _Reader(data, str(path))
    reader.offset = 4
    (version,) = reader.take("<H")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    (n_estimators, has_depth, max_depth, mf_kind, mf_k, bootstrap, seed, min_split) = reader.take(
        "<IBIBIBQI"
    )
    if mf_kind == 0:
        max_features: str | int = "sqrt"
    elif mf_kind == 1:
        max_features = "all"
    elif mf_kind == 2:
        max_features = mf_k
    else:
        raise ModelFormatError(f"{path}: unknown max_features kind {mf_kind}")
    cfg = ForestConfig(
        n_estimators=n_estimators,
        max_depth=max_depth if has_depth else None,
        max_features=max_features,
        bootstrap=bool(bootstrap),
        seed=seed,
        min_samples_split=min_split,
    )
    (dim,) = reader.take("<I")
    (seed_count,) = reader.take("<I")
    if seed_count != n_estimators:
        raise ModelFormatError(f"{path}: seed count {seed_count} != n_estimators {n_estimators}")
    seeds = tuple(reader.take("<Q")[0] for _ in range(seed_count))
    trees = tuple(_read_node(reader) for _ in range(n_estimators))
    if reader.offset != len(data):
        raise ModelFormatError(f"{path}: {len(data) - reader.offset} trailing bytes")
    return RandomForestModel(trees=trees, config=cfg, dim=dim, per_tree_seeds=seeds)
