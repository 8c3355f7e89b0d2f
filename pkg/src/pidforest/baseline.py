"""A small isolation forest used as the comparison baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pidforest.core import Dataset
from pidforest.forest import isolation_path_adjustment


@dataclass(frozen=True)
class IsoTree:
    """Flat arrays of one random isolation tree.

    Internal nodes split on ``feature < threshold`` (left) versus the rest;
    leaves keep their sample count and depth.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0


@dataclass(frozen=True)
class IsolationForest:
    trees: tuple[IsoTree, ...]
    sample_size: int

    def path_lengths(self, x: np.ndarray) -> np.ndarray:
        """Adjusted path length of every point in every tree, shape ``(n, t)``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty((len(x), len(self.trees)))
        rows = np.arange(len(x))
        for t, tree in enumerate(self.trees):
            node = np.zeros(len(x), dtype=np.int64)
            for _ in range(int(tree.depth.max())):
                f = tree.feature[node]
                internal = f >= 0
                go_left = x[rows, np.where(internal, f, 0)] < tree.threshold[node]
                nxt = np.where(go_left, tree.left[node], tree.right[node])
                node = np.where(internal, nxt, node)
            out[:, t] = tree.depth[node] + isolation_path_adjustment(tree.size[node])
        return out

    def score(self, points) -> np.ndarray:
        """``2^(-E[h(x)] / c(m))`` in ``(0, 1]``; higher is more anomalous."""
        x = points.values if isinstance(points, Dataset) else np.asarray(points, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        c = float(isolation_path_adjustment(self.sample_size))
        if c == 0:
            return np.ones(len(x))
        return np.exp2(-self.path_lengths(x).mean(axis=1) / c)


def _grow(sample: np.ndarray, rng: np.random.Generator, limit: int) -> IsoTree:
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def new(n: int, d: int) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(n)
        depth.append(d)
        return len(feature) - 1

    stack = [(new(len(sample), 0), sample)]
    while stack:
        i, pts = stack.pop()
        d = depth[i]
        if d >= limit or len(pts) <= 1:
            continue
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        spread = np.flatnonzero(hi > lo)
        if spread.size == 0:
            continue
        j = int(rng.choice(spread))
        t = float(rng.uniform(lo[j], hi[j]))
        if t <= lo[j]:
            t = float(np.nextafter(lo[j], hi[j]))
        mask = pts[:, j] < t
        feature[i] = j
        threshold[i] = t
        left[i] = new(int(mask.sum()), d + 1)
        right[i] = new(int((~mask).sum()), d + 1)
        stack.append((left[i], pts[mask]))
        stack.append((right[i], pts[~mask]))
    return IsoTree(
        np.asarray(feature), np.asarray(threshold), np.asarray(left), np.asarray(right),
        np.asarray(size), np.asarray(depth),
    )


def iforest_fit(dataset, t: int = 100, m: int = 256, seed: int = 0) -> IsolationForest:
    """Fit ``t`` isolation trees on samples of ``min(m, n)`` points.

    Splits pick a coordinate uniformly among those with spread and a
    threshold uniformly inside the node's range; trees stop at depth
    ``ceil(log2 m)``.
    """
    x = dataset.values if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if n == 0:
        raise ValueError("empty input")
    if t < 1 or m < 1:
        raise ValueError("t and m must be positive")
    size = min(m, n)
    limit = max(math.ceil(math.log2(size)), 0) if size > 1 else 0
    trees = []
    for seq in np.random.SeedSequence(seed).spawn(t):
        rng = np.random.default_rng(seq)
        idx = rng.choice(n, size=size, replace=False)
        trees.append(_grow(x[idx], rng, limit))
    return IsolationForest(tuple(trees), size)
