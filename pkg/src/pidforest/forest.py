"""Sparsity forests: fitting, scoring and model documents."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import digamma

from pidforest.core import (
    AttributeSpec,
    Dataset,
    Interval,
    Kind,
    ModelFormatError,
    NormalizationTransform,
    SchemaError,
    Subcube,
    fit_transform,
    same_schema,
    sparsity,
)
from pidforest.split import MAX_DEGREE, best_split

MODEL_FORMAT = "pidforest-model"
MODEL_VERSION = 1
PERCENTILE = 75.0


@dataclass(frozen=True)
class HyperParams:
    num_trees: int = 50
    samples_per_tree: int = 100
    max_degree: int = 3
    max_depth: int = 10
    seed: int = 0
    eps: float = 0.1
    solver: str = "approx"

    def __post_init__(self) -> None:
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.samples_per_tree < 2:
            raise ValueError("samples_per_tree must be >= 2")
        if not 2 <= self.max_degree <= MAX_DEGREE:
            raise ValueError(f"max_degree must be in [2, {MAX_DEGREE}]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.solver not in ("approx", "dp"):
            raise ValueError("solver must be 'approx' or 'dp'")


@dataclass(frozen=True)
class TreeNode:
    """A node of a fitted tree.

    Every node records the sparsity of its own cell; for leaves this is the
    score handed out to points routed there.
    """

    subcube: Subcube
    count: int
    depth: int
    score: float
    feature: int | None = None
    breakpoints: tuple[float, ...] = ()
    category: int | None = None
    children: tuple[TreeNode, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        """Nodes in breadth-first order."""
        queue = [self]
        i = 0
        while i < len(queue):
            node = queue[i]
            queue.extend(node.children)
            i += 1
        return queue


def isolation_path_adjustment(n) -> np.ndarray:
    """Average unsuccessful-search path length in a BST of ``n`` keys."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    big = n > 2
    nb = n[big]
    harmonic = digamma(nb) + np.euler_gamma  # H(n - 1)
    out[big] = 2 * harmonic - 2 * (nb - 1) / nb
    out[n == 2] = 1.0
    return out


@dataclass
class _Compiled:
    """All trees flattened into parallel arrays for vectorized routing."""

    feature: np.ndarray
    thresholds: np.ndarray
    category: np.ndarray
    first_child: np.ndarray
    sparsity: np.ndarray
    depth_score: np.ndarray
    roots: np.ndarray
    nodes: list[TreeNode]
    max_depth: int


@dataclass(frozen=True)
class PointScore:
    score: float
    tree: int
    witness: Subcube
    ranges: list[dict[str, Any]]


@dataclass
class ScoreReport:
    """Scores for a batch of points plus the trees and leaves that produced them.

    Higher scores are more anomalous. The witness of point ``i`` is the leaf
    cell reached in tree ``tree_index[i]``.
    """

    scores: np.ndarray
    tree_index: np.ndarray
    leaf_index: np.ndarray
    points: np.ndarray
    forest: Forest = field(repr=False)

    def __len__(self) -> int:
        return len(self.scores)

    def witness(self, i: int) -> Subcube:
        return self.forest._compiled().nodes[int(self.leaf_index[i])].subcube

    def witness_ranges(self, i: int, top: int | None = None) -> list[dict[str, Any]]:
        return self.forest.describe(self.witness(i), top=top)

    def __getitem__(self, i: int) -> PointScore:
        return PointScore(
            float(self.scores[i]), int(self.tree_index[i]), self.witness(i), self.witness_ranges(i)
        )


@dataclass
class Forest:
    trees: list[TreeNode]
    transform: NormalizationTransform
    params: HyperParams
    columns: tuple[AttributeSpec, ...]
    _cache: _Compiled | None = field(default=None, repr=False, compare=False)

    def score(self, points, score_by: str = "sparsity") -> ScoreReport:
        return score(self, points, score_by=score_by)

    def describe(self, cube: Subcube, top: int | None = None) -> list[dict[str, Any]]:
        """Constrained coordinates of a cell in raw units, tightest first.

        Continuous bounds at the edge of the training range are reported as
        infinite, since clipped points outside the range land in those cells.
        """
        out = []
        for j in cube.constrained:
            iv = cube.intervals[j]
            spec = self.columns[j]
            entry: dict[str, Any] = {"feature": spec.name or f"x{j}", "index": j}
            entry["log2_length"] = math.log2(iv.length)
            if iv.codes is not None:
                codes = sorted(iv.codes)
                entry["categories"] = [spec.categories[c] for c in codes] if spec.categories else codes
            elif spec.kind is Kind.CATEGORICAL_ORDERED:
                lo = int(round(iv.lo * spec.domain_size))
                hi = int(round(iv.hi * spec.domain_size)) - 1
                codes = list(range(lo, hi + 1))
                entry["categories"] = [spec.categories[c] for c in codes] if spec.categories else codes
            else:
                entry["lo"] = -math.inf if iv.lo == 0.0 else self.transform.invert(j, iv.lo)
                entry["hi"] = math.inf if iv.hi == 1.0 else self.transform.invert(j, iv.hi)
            out.append(entry)
        out.sort(key=lambda e: (e["log2_length"], e["index"]))
        return out if top is None else out[:top]

    def _compiled(self) -> _Compiled:
        if self._cache is None:
            self._cache = _compile(self.trees, self.params.max_degree)
        return self._cache


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


class _TreeBuilder:
    def __init__(self, columns: Sequence[AttributeSpec], splittable: np.ndarray, params: HyperParams):
        self.columns = tuple(columns)
        self.splittable = splittable
        self.params = params
        self.grids = [
            c.domain_size if c.kind is Kind.CATEGORICAL_ORDERED else None for c in self.columns
        ]
        self.unordered = [j for j, c in enumerate(self.columns) if c.kind is Kind.CATEGORICAL_UNORDERED]

    def grow(self, sample: np.ndarray) -> TreeNode:
        return self._grow(sample, Subcube.full(self.columns), 0)

    def _grow(self, sample: np.ndarray, cube: Subcube, depth: int) -> TreeNode:
        count = len(sample)
        score = sparsity(cube, count)
        split = None
        if count > 1 and depth <= self.params.max_depth:
            bounds = np.array(
                [(iv.lo, iv.hi) if iv.codes is None else (0.0, 1.0) for iv in cube.intervals]
            )
            cats = {j: cube.intervals[j].codes for j in self.unordered}
            split = best_split(
                sample,
                self.params.max_degree,
                bounds=bounds,
                splittable=self.splittable,
                grids=self.grids,
                categorical=cats,
                eps=self.params.eps,
                solver=self.params.solver,
            )
        if split is None:
            return TreeNode(cube, count, depth, score)

        j = split.coordinate
        iv = cube.intervals[j]
        children = []
        if split.category is not None:
            col = sample[:, j]
            alone = col == split.category
            rest = iv.codes - {split.category}
            for mask, codes in ((alone, frozenset([split.category])), (~alone, rest)):
                child_iv = Interval(codes=codes, domain_size=iv.domain_size)
                children.append(self._grow(sample[mask], cube.replace(j, child_iv), depth + 1))
        else:
            edges = (iv.lo, *split.breakpoints, iv.hi)
            which = np.searchsorted(np.asarray(split.breakpoints), sample[:, j], side="right")
            for i in range(len(edges) - 1):
                child = cube.replace(j, Interval(edges[i], edges[i + 1]))
                children.append(self._grow(sample[which == i], child, depth + 1))
        return TreeNode(
            cube, count, depth, score, j, split.breakpoints, split.category, tuple(children)
        )


def _check_usable(dataset: Dataset, transform: NormalizationTransform) -> np.ndarray:
    splittable = transform.splittable
    if dataset.n > 1 and not splittable.any():
        raise ValueError("no usable attributes")
    return splittable


def fit(dataset: Dataset, params: HyperParams | None = None, n_jobs: int = 1) -> Forest:
    """Fit ``params.num_trees`` sparsity trees on independent subsamples.

    Tree ``i`` draws ``min(samples_per_tree, n)`` points without replacement
    from a generator seeded by ``(seed, i)``; the result does not depend on
    ``n_jobs``.
    """
    params = params or HyperParams()
    if dataset.n == 0:
        raise ValueError("empty input")
    transform = fit_transform(dataset.columns)
    splittable = _check_usable(dataset, transform)
    values = transform.apply(dataset.values)
    builder = _TreeBuilder(dataset.columns, splittable, params)
    size = min(params.samples_per_tree, dataset.n)
    seeds = np.random.SeedSequence(params.seed).spawn(params.num_trees)

    def one(seed_seq: np.random.SeedSequence) -> TreeNode:
        rng = np.random.default_rng(seed_seq)
        idx = rng.choice(dataset.n, size=size, replace=False)
        return builder.grow(values[idx])

    if n_jobs == 1:
        trees = [one(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = list(pool.map(one, seeds))
    return Forest(trees, transform, params, tuple(dataset.columns))


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def _compile(trees: Sequence[TreeNode], k: int) -> _Compiled:
    nodes: list[TreeNode] = []
    roots = []
    for tree in trees:
        roots.append(len(nodes))
        nodes.extend(tree.walk())
    index = {id(node): i for i, node in enumerate(nodes)}
    n = len(nodes)
    feature = np.zeros(n, dtype=np.int64)
    thresholds = np.full((n, max(k - 1, 1)), np.inf)
    category = np.full(n, np.nan)
    first_child = np.arange(n, dtype=np.int64)
    sparsity_ = np.empty(n)
    depth_score = np.empty(n)
    max_depth = 0
    for i, node in enumerate(nodes):
        max_depth = max(max_depth, node.depth)
        sparsity_[i] = node.score
        depth_score[i] = -(node.depth + isolation_path_adjustment(node.count))
        if node.is_leaf:
            continue
        feature[i] = node.feature
        first_child[i] = index[id(node.children[0])]
        if node.category is not None:
            category[i] = node.category
        else:
            thresholds[i, : len(node.breakpoints)] = node.breakpoints
    return _Compiled(
        feature, thresholds, category, first_child, sparsity_, depth_score,
        np.asarray(roots, dtype=np.int64), nodes, max_depth,
    )


def _route(comp: _Compiled, x: np.ndarray) -> np.ndarray:
    """Leaf index reached by every (point, tree) pair; shape ``(n, t)``."""
    n, d = x.shape
    out = np.empty((len(comp.roots), n), dtype=np.intp)
    is_leaf = comp.first_child == np.arange(len(comp.first_child))
    columns = [np.ascontiguousarray(c) for c in comp.thresholds.T]
    is_cat = ~np.isnan(comp.category)
    any_cat = bool(is_cat.any())
    flat = x.ravel()
    offsets = np.arange(n, dtype=np.intp) * d
    for ti, root in enumerate(comp.roots):
        node = out[ti]
        node[:] = root
        active = np.arange(n, dtype=np.intp)
        cur = node
        while True:
            internal = ~is_leaf[cur]
            if not internal.all():
                active, cur = active[internal], cur[internal]
                if not active.size:
                    break
            val = flat[offsets[active] + comp.feature[cur]]
            step = val >= columns[0][cur]
            if len(columns) > 1:
                step = step.astype(np.intp)
                for col in columns[1:]:
                    step += val >= col[cur]
            if any_cat:
                step = np.where(is_cat[cur], val != comp.category[cur], step)
            cur = comp.first_child[cur] + step
            node[active] = cur
    return out.T


def _prepare(forest: Forest, points) -> np.ndarray:
    if isinstance(points, Dataset):
        if not same_schema(points.columns, forest.columns):
            raise SchemaError("points do not match the model schema")
        raw = points.values
    else:
        raw = np.asarray(points, dtype=np.float64)
        if raw.ndim == 1:
            raw = raw[None, :]
        if raw.ndim != 2 or raw.shape[1] != len(forest.columns):
            raise SchemaError(
                f"expected {len(forest.columns)} columns, got shape {raw.shape}"
            )
    for j, c in enumerate(forest.columns):
        if c.kind is not Kind.CONTINUOUS:
            col = raw[:, j]
            if np.any(col != np.floor(col)) or np.any(col < 0) or np.any(col >= c.domain_size):
                raise SchemaError(f"column {c.name or j!r}: invalid category code")
    return forest.transform.apply(raw)


def aggregate(per_tree: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise 75th percentile of ``(n, t)`` tree scores and the witness tree.

    The percentile interpolates linearly between order statistics. The
    witness is the tree with the smallest score at or above it, lowest
    index on ties.
    """
    per_tree = np.atleast_2d(np.asarray(per_tree, dtype=np.float64))
    pct = np.percentile(per_tree, PERCENTILE, axis=1, method="linear")
    masked = np.where(per_tree >= pct[:, None], per_tree, np.inf)
    pick = np.argmin(masked, axis=1)
    none = ~np.isfinite(masked[np.arange(len(pick)), pick])
    if none.any():
        # rounding can leave the interpolated value above every score
        pick[none] = np.argmax(per_tree[none], axis=1)
    return pct, pick


def score(
    forest: Forest, points, score_by: str = "sparsity", chunk_size: int = 32768
) -> ScoreReport:
    """75th percentile over trees of the leaf score of every point.

    ``score_by="depth"`` replaces leaf sparsity with the negative isolation
    path length (leaf depth plus the expected depth of the unresolved
    points in the leaf), for ablation.
    """
    if score_by not in ("sparsity", "depth"):
        raise ValueError("score_by must be 'sparsity' or 'depth'")
    x = _prepare(forest, points)
    comp = forest._compiled()
    table = comp.sparsity if score_by == "sparsity" else comp.depth_score
    n = len(x)
    scores = np.empty(n)
    tree_index = np.empty(n, dtype=np.int64)
    leaf_index = np.empty(n, dtype=np.int64)
    for start in range(0, n, chunk_size):
        sl = slice(start, start + chunk_size)
        leaves = _route(comp, x[sl])
        pct, pick = aggregate(table[leaves])
        scores[sl] = pct
        tree_index[sl] = pick
        leaf_index[sl] = leaves[np.arange(len(pick)), pick]
    return ScoreReport(scores, tree_index, leaf_index, x, forest)


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------


def _node_to_dict(node: TreeNode) -> dict:
    out: dict = {"count": node.count, "score": node.score}
    if not node.is_leaf:
        split: dict = {"feature": node.feature}
        if node.category is not None:
            split["category"] = node.category
        else:
            split["breakpoints"] = list(node.breakpoints)
        out["split"] = split
        out["children"] = [_node_to_dict(c) for c in node.children]
    return out


def _node_from_dict(d: dict, cube: Subcube, depth: int) -> TreeNode:
    count = int(d["count"])
    score_ = float(d["score"])
    if "split" not in d:
        return TreeNode(cube, count, depth, score_)
    split = d["split"]
    j = int(split["feature"])
    iv = cube.intervals[j]
    kids = d["children"]
    if "category" in split:
        cat = int(split["category"])
        ivs = [
            Interval(codes=frozenset([cat]), domain_size=iv.domain_size),
            Interval(codes=iv.codes - {cat}, domain_size=iv.domain_size),
        ]
        bps: tuple[float, ...] = ()
    else:
        cat = None
        bps = tuple(float(b) for b in split["breakpoints"])
        edges = (iv.lo, *bps, iv.hi)
        ivs = [Interval(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    if len(kids) != len(ivs):
        raise ModelFormatError("child count does not match split")
    children = tuple(
        _node_from_dict(kid, cube.replace(j, civ), depth + 1) for kid, civ in zip(kids, ivs)
    )
    return TreeNode(cube, count, depth, score_, j, bps, cat, children)


def to_document(forest: Forest) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "columns": [c.to_dict() for c in forest.columns],
        "transform": forest.transform.to_dict(),
        "params": asdict(forest.params),
        "trees": [_node_to_dict(t) for t in forest.trees],
    }


def serialize(forest: Forest) -> str:
    """Model document as canonical JSON text (sorted keys, no whitespace)."""
    return json.dumps(to_document(forest), sort_keys=True, separators=(",", ":"), allow_nan=False)


def deserialize(text: str) -> Forest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a pidforest model document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        columns = tuple(AttributeSpec.from_dict(c) for c in doc["columns"])
        transform = NormalizationTransform.from_dict(doc["transform"], columns)
        params = HyperParams(**doc["params"])
        root = Subcube.full(columns)
        trees = [_node_from_dict(t, root, 0) for t in doc["trees"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None
    if len(trees) != params.num_trees:
        raise ModelFormatError("tree count does not match params")
    return Forest(trees, transform, params, columns)
