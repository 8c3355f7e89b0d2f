"""Variance-maximizing interval splits of one coordinate.

Splitting a node's interval into ``k`` pieces so as to maximize the
variance of sparsity reduces to an optimal ``k``-histogram of the gap
array: the length of the cell owned by each distinct sample value.
Repeated values become a single cell with a multiplicity weight, which
turns the problem into a weighted histogram with error

    sum_j w_j (f_j / w_j - F(J) / W(J))^2 = sum_j f_j^2 / w_j - sum_J F(J)^2 / W(J)

so that maximizing ``cost = sum_J F(J)^2 / W(J)`` still minimizes the
squared error. With unit weights this is the plain histogram problem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

VARIANCE_TOL = 1e-12
MAX_DEGREE = 16


@dataclass(frozen=True)
class GapArray:
    """Cell lengths ``f`` (relative to the node interval) and absolute endpoints ``e``.

    ``w`` holds the number of sample points sharing each cell's value.
    """

    f: np.ndarray
    e: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.f, dtype=np.float64)
        e = np.asarray(self.e, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if len(e) != len(f) + 1 or len(w) != len(f):
            raise ValueError("gap array shapes disagree")
        if np.any(f <= 0) or np.any(np.diff(e) <= 0) or np.any(w <= 0):
            raise ValueError("gap array must be strictly positive and increasing")
        for name, arr in (("f", f), ("e", e), ("w", w)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def _trusted(cls, f: np.ndarray, e: np.ndarray, w: np.ndarray) -> GapArray:
        obj = object.__new__(cls)
        object.__setattr__(obj, "f", f)
        object.__setattr__(obj, "e", e)
        object.__setattr__(obj, "w", w)
        return obj

    @classmethod
    def from_lengths(cls, f, w=None) -> GapArray:
        """Gap array over ``[0, sum(f)]`` built directly from cell lengths."""
        f = np.asarray(f, dtype=np.float64)
        e = np.concatenate([[0.0], np.cumsum(f)])
        return cls(f, e, np.ones_like(f) if w is None else w)

    @property
    def m(self) -> int:
        return len(self.f)

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())


@dataclass(frozen=True)
class HistogramPartition:
    """A partition of cells ``0..m-1`` into contiguous runs.

    ``boundaries`` are the 0-based start indices of every run after the
    first, so ``(2, 5)`` means runs ``[0,2)``, ``[2,5)``, ``[5,m)``.
    """

    boundaries: tuple[int, ...]
    m: int
    cost: float

    @property
    def k(self) -> int:
        return len(self.boundaries) + 1

    def runs(self) -> list[tuple[int, int]]:
        edges = (0, *self.boundaries, self.m)
        return list(zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class SplitResult:
    """Winning split of a node.

    For threshold splits ``breakpoints`` are the interior cut positions;
    unordered categorical splits instead set ``category`` (the code split
    off on its own).
    """

    coordinate: int
    breakpoints: tuple[float, ...]
    variance: float
    category: int | None = None


def _cells(sorted_values: np.ndarray, lo: float, hi: float, grid: int | None):
    """Distinct values, multiplicities and endpoints of an already sorted column."""
    v = sorted_values
    change = np.empty(len(v), dtype=bool)
    change[0] = True
    np.not_equal(v[1:], v[:-1], out=change[1:])
    starts = np.flatnonzero(change)
    uniq = v[starts]
    bounds = np.append(starts, len(v))
    counts = (bounds[1:] - bounds[:-1]).astype(np.float64)
    if grid is None:
        mids = (uniq[:-1] + uniq[1:]) / 2
    else:
        codes = np.rint(uniq * grid - 0.5).astype(np.int64)
        mids = (np.floor((codes[:-1] + codes[1:]) / 2) + 1) / grid
    e = np.concatenate([[lo], mids, [hi]])
    return e, counts


def build_gap_array(values, lo: float = 0.0, hi: float = 1.0, grid: int | None = None) -> GapArray:
    """Gap array of sample ``values`` inside the node interval ``[lo, hi]``.

    Endpoints are the node boundaries plus midpoints of consecutive distinct
    values. With ``grid=D`` (ordered categorical codes placed at
    ``(c + 0.5) / D``) every interior endpoint is snapped to a multiple of
    ``1 / D`` so that cells stay unions of whole categories.
    """
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if hi <= lo:
        raise ValueError("empty node interval")
    if len(v) == 0 or v[0] == v[-1]:
        raise ValueError("coordinate unsplittable here")
    e, counts = _cells(v, lo, hi, grid)
    return GapArray(np.diff(e) / (hi - lo), e, counts)


def _prefix(gaps: GapArray):
    f, w = gaps.f, gaps.w
    F = np.concatenate([[0.0], np.cumsum(f)])
    W = np.concatenate([[0.0], np.cumsum(w)])
    Q = np.concatenate([[0.0], np.cumsum(f * f / w)])
    return F, W, Q


def partition_cost(gaps: GapArray, boundaries) -> float:
    """``sum over runs of F(J)^2 / W(J)``."""
    F, W, _ = _prefix(gaps)
    edges = np.array([0, *boundaries, gaps.m])
    dF = np.diff(F[edges])
    dW = np.diff(W[edges])
    return float(np.sum(dF * dF / dW))


def partition_error(gaps: GapArray, boundaries) -> float:
    """Squared l2 error of the best histogram with these runs."""
    f, w = gaps.f, gaps.w
    g = f / w
    err = 0.0
    for a, b in HistogramPartition(tuple(boundaries), gaps.m, 0.0).runs():
        mean = f[a:b].sum() / w[a:b].sum()
        err += float(np.sum(w[a:b] * (g[a:b] - mean) ** 2))
    return err


def _check_k(gaps: GapArray, k: int) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > gaps.m:
        raise ValueError("more cells than points")


def ksplit_dp(gaps: GapArray, k: int) -> HistogramPartition:
    """Exact maximum-cost partition into exactly ``k`` runs, O(m^2 k).

    Ties go to the lexicographically smallest boundary vector.
    """
    _check_k(gaps, k)
    m = gaps.m
    F, W, _ = _prefix(gaps)
    # seg[a, b] = cost of the run [a, b); -inf where b <= a
    a_idx = np.arange(m + 1)[:, None]
    b_idx = np.arange(m + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = (F[None, :] - F[:, None]) ** 2 / (W[None, :] - W[:, None])
    seg = np.where(b_idx > a_idx, seg, -np.inf)

    # suffix DP: best[p][a] = best cost of splitting [a, m) into p runs
    best = np.full((k + 1, m + 1), -np.inf)
    best[1, :m] = seg[:m, m]
    for p in range(2, k + 1):
        cand = seg[:, :m] + best[p - 1][None, :m]
        best[p] = cand.max(axis=1)
    # forward reconstruction picking the smallest feasible cut each time
    bounds = []
    a = 0
    for p in range(k, 1, -1):
        cand = seg[a, :m] + best[p - 1, :m]
        b = int(np.argmax(cand))
        bounds.append(b)
        a = b
    return HistogramPartition(tuple(bounds), m, float(best[k, 0]))


def approx_delta(eps: float, k: int) -> float:
    """Per-level geometric bucket ratio; ``(1 + delta)^k <= 1 + eps``."""
    return (1.0 + eps) ** (1.0 / max(k, 1)) - 1.0


def ksplit_approx(gaps: GapArray, k: int, eps: float = 0.1) -> HistogramPartition:
    """Near-optimal ``k``-run partition by geometric pruning of the DP frontier.

    For every level only the right end of each run of prefix lengths whose
    approximate error stays within a ``(1 + delta)`` factor of the run's
    first entry is kept as a candidate breakpoint. Since errors are
    non-decreasing in the prefix length the returned histogram has squared
    error at most ``(1 + eps)`` times the optimum.

    The frontier of a level depends only on the finished previous level, so
    each level is evaluated in one vectorized sweep instead of point by
    point; the output is the same as the streaming formulation.
    """
    _check_k(gaps, k)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    m = gaps.m
    delta = approx_delta(eps, k)
    F, W, Q = _prefix(gaps)
    idx = np.arange(m + 1)

    # err[i] = approximate error of the first i cells with p runs
    err = np.maximum(Q - F * F / np.where(W > 0, W, 1.0), 0.0)
    err[0] = np.inf
    back = np.zeros((k + 1, m + 1), dtype=np.int64)

    for p in range(2, k + 1):
        cands = _frontier(err, p - 1, m, delta)
        # candidate b is usable for prefix i when p - 1 <= b < i
        dF = F[None, :] - F[cands][:, None]
        dW = W[None, :] - W[cands][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = (Q[None, :] - Q[cands][:, None]) - dF * dF / dW
        seg = np.maximum(seg, 0.0)
        total = err[cands][:, None] + seg
        total = np.where(cands[:, None] < idx[None, :], total, np.inf)
        choice = np.argmin(total, axis=0)
        new_err = total[choice, idx]
        prev = cands[choice]
        # the streaming pass also sees the still-open run ending at i - 1
        last = np.empty(m + 1)
        last[0] = np.inf
        last[1:] = err[:-1] + np.maximum(Q[1:] - Q[:-1] - (F[1:] - F[:-1]) ** 2 / (W[1:] - W[:-1]), 0.0)
        better = last < new_err
        new_err = np.where(better, last, new_err)
        prev = np.where(better, idx - 1, prev)
        new_err[:p] = np.inf
        back[p] = prev
        err = new_err

    bounds = []
    i = m
    for p in range(k, 1, -1):
        i = int(back[p, i])
        bounds.append(i)
    bounds.reverse()
    return HistogramPartition(tuple(bounds), m, partition_cost(gaps, bounds))


def _frontier(err: np.ndarray, p: int, m: int, delta: float) -> np.ndarray:
    """Right ends of the geometric runs of ``err`` over prefixes ``p..m-1``."""
    keep: list[int] = []
    start = 0.0
    for i in range(p, m):
        e = err[i]
        if keep and e <= (1.0 + delta) * start:
            keep[-1] = i
        else:
            keep.append(i)
            start = e
    return np.asarray(keep, dtype=np.int64)


def variance_of_partition(gaps: GapArray, partition: HistogramPartition) -> float:
    """Variance of sparsity over the sample, in units of the node sparsity squared.

    ``p_i`` is the fraction of the node interval covered by run ``i`` and
    ``q_i`` the fraction of sample points in it; the value returned is
    ``sum q_i (p_i / q_i)^2 - 1``.
    """
    F, W, _ = _prefix(gaps)
    edges = np.array([0, *partition.boundaries, gaps.m])
    p = np.diff(F[edges]) / F[-1]
    q = np.diff(W[edges]) / W[-1]
    return float(max(np.sum(p * p / q) - 1.0, 0.0))


def enumerate_partitions(m: int, k: int):
    """All boundary vectors splitting ``m`` cells into exactly ``k`` runs."""
    return itertools.combinations(range(1, m), k - 1)


def best_unordered_split(codes, node_codes: frozenset[int]) -> tuple[float, int] | None:
    """Best singleton-versus-rest split of an unordered categorical node.

    Returns ``(variance, code)`` or ``None`` when fewer than two codes occur.
    """
    uniq, counts = np.unique(np.asarray(codes, dtype=np.int64), return_counts=True)
    if len(uniq) < 2 or len(node_codes) < 2:
        return None
    n = counts.sum()
    p1 = 1.0 / len(node_codes)
    q1 = counts / n
    var = p1 * p1 / q1 + (1 - p1) ** 2 / (1 - q1) - 1.0
    i = int(np.argmax(var))
    return float(max(var[i], 0.0)), int(uniq[i])


def best_split(
    sample: np.ndarray,
    k: int,
    bounds: np.ndarray | None = None,
    splittable: np.ndarray | None = None,
    grids: list[int | None] | None = None,
    categorical: dict[int, frozenset[int]] | None = None,
    eps: float = 0.1,
    solver: str = "approx",
) -> SplitResult | None:
    """Pick the coordinate and breakpoints with the largest sparsity variance.

    Args:
        sample: ``(n, d)`` normalized points of the node.
        k: maximum number of children.
        bounds: ``(d, 2)`` node interval per coordinate, default ``[0, 1]``.
        splittable: mask of coordinates allowed to split.
        grids: per-coordinate domain size for ordered categorical columns.
        categorical: node code sets of unordered categorical coordinates.
        eps: approximation parameter of the streaming solver.
        solver: ``"approx"`` or ``"dp"``.

    Returns:
        The winning split or ``None`` if no coordinate shows positive variance.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim == 1:
        sample = sample[:, None]
    n, d = sample.shape
    if n < 2:
        return None
    if not 2 <= k <= MAX_DEGREE:
        raise ValueError(f"degree must be in [2, {MAX_DEGREE}]")
    categorical = categorical or {}
    ordered = np.sort(sample, axis=0)

    best: SplitResult | None = None
    for j in range(d):
        if splittable is not None and not splittable[j]:
            continue
        col = ordered[:, j]
        if col[0] == col[-1]:
            continue
        if j in categorical:
            found = best_unordered_split(col, categorical[j])
            if found is None:
                continue
            var, code = found
            cand = SplitResult(j, (), var, category=code)
        else:
            lo, hi = (0.0, 1.0) if bounds is None else (float(bounds[j, 0]), float(bounds[j, 1]))
            e, w = _cells(col, lo, hi, None if grids is None else grids[j])
            f = np.diff(e) / (hi - lo)
            if len(f) <= k:
                # one cell per distinct value is optimal and exact
                var = float(max(np.sum(f * f / w) * n - 1.0, 0.0))
                cuts = tuple(float(t) for t in e[1:-1])
            else:
                gaps = GapArray._trusted(f, e, w)
                if solver == "approx":
                    part = ksplit_approx(gaps, k, eps)
                else:
                    part = ksplit_dp(gaps, k)
                var = variance_of_partition(gaps, part)
                cuts = tuple(float(e[b]) for b in part.boundaries)
            cand = SplitResult(j, cuts, var)
        if best is None or cand.variance > best.variance:
            best = cand
    if best is None or best.variance <= VARIANCE_TOL:
        return None
    return best
