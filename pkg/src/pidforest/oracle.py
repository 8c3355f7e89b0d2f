"""Exact brute-force partial-identification scores for small instances.

These functions enumerate every candidate and are exponential in the
dimension; they exist to provide ground truth for the forest heuristic and
the split solvers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from pidforest.core import Interval, Subcube

MAX_BOOLEAN_DIM = 20
MAX_BRUTEFORCE_DIM = 3

# relative tolerance under which two densities count as tied
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ImpostorSet:
    anchor: tuple[int, ...]
    coords: tuple[int, ...]
    members: tuple[int, ...]


@dataclass(frozen=True)
class DiscreteInterval:
    """Point indices ``lo..hi`` inclusive, 1-based as in ``I_l^u``."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not 1 <= self.lo <= self.hi:
            raise ValueError(f"invalid discrete interval [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, j: int) -> bool:
        return self.lo <= j <= self.hi


def _boolean_array(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError("boolean dataset must be 2-d")
    if arr.shape[1] > MAX_BOOLEAN_DIM:
        raise ValueError(f"d={arr.shape[1]} exceeds the oracle limit of {MAX_BOOLEAN_DIM}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("boolean dataset must contain only 0/1")
    return arr.astype(np.uint8)


def _pack(arr: np.ndarray) -> np.ndarray:
    weights = np.left_shift(np.int64(1), np.arange(arr.shape[1], dtype=np.int64))
    return arr.astype(np.int64) @ weights


def _anchor(x, arr: np.ndarray) -> np.ndarray:
    x = np.asarray(x).astype(np.uint8).ravel()
    if x.shape[0] != arr.shape[1]:
        raise ValueError("point dimension does not match dataset")
    if not (arr == x).all(axis=1).any():
        raise ValueError("point is not in the dataset")
    return x


def _mask_subsets(d: int):
    """Coordinate subsets as bitmasks, ordered by size then lexicographically."""
    for size in range(d + 1):
        for combo in itertools.combinations(range(d), size):
            mask = 0
            for j in combo:
                mask |= 1 << j
            yield combo, mask


def impostors(x, data, coords) -> ImpostorSet:
    """Points of ``data`` agreeing with ``x`` on every coordinate in ``coords``."""
    arr = _boolean_array(data)
    x = _anchor(x, arr)
    coords = tuple(sorted(coords))
    agree = (arr[:, list(coords)] == x[list(coords)]).all(axis=1) if coords else np.ones(len(arr), bool)
    return ImpostorSet(tuple(int(v) for v in x), coords, tuple(np.flatnonzero(agree).tolist()))


def _impostor_counts(x: np.ndarray, arr: np.ndarray):
    """Yield ``(S, |Imp(x, T, S)|)`` for every subset S in canonical order."""
    diff = _pack(arr) ^ int(_pack(x[None, :])[0])
    for combo, mask in _mask_subsets(arr.shape[1]):
        yield combo, int(np.count_nonzero((diff & mask) == 0))


def id_length(x, data) -> int:
    """Size of the smallest coordinate set that separates ``x`` from all other points."""
    arr = _boolean_array(data)
    if len(np.unique(_pack(arr))) != len(arr):
        raise ValueError("idLength undefined with duplicates")
    x = _anchor(x, arr)
    for combo, count in _impostor_counts(x, arr):
        if count == 1:
            return len(combo)
    raise AssertionError("unreachable: the full coordinate set always identifies x")


def pid_length_boolean(x, data) -> tuple[float, tuple[int, ...]]:
    """Minimum of ``|S| + log2 |Imp(x, T, S)|`` with its minimizing ``S``.

    Ties go to the smallest ``|S|``, then the lexicographically smallest set.
    """
    arr = _boolean_array(data)
    x = _anchor(x, arr)
    best: tuple[float, tuple[int, ...]] | None = None
    best_key = None
    for combo, count in _impostor_counts(x, arr):
        # |S| + log2(count) compared exactly as 2^|S| * count
        key = (1 << len(combo)) * count
        if best_key is None or key < best_key:
            best_key = key
            best = (len(combo) + math.log2(count), combo)
    assert best is not None
    return best


def max_boolean_subcube_sparsity(x, data) -> Fraction:
    """Largest ``|C| / |C & T|`` over Boolean subcubes ``C`` containing ``x``.

    Computed by enumerating subcubes directly, independent of the
    partial-ID length. Returned as an exact fraction.
    """
    arr = _boolean_array(data)
    x = _anchor(x, arr)
    d = arr.shape[1]
    packed = _pack(arr)
    best = Fraction(0)
    # `fixed` is the bitmask of coordinates pinned to x's values
    xbits = int(_pack(x[None, :])[0])
    for fixed in range(1 << d):
        size = 1 << (d - bin(fixed).count("1"))
        inside = int(np.count_nonzero((packed & fixed) == (xbits & fixed)))
        best = max(best, Fraction(size, inside))
    return best


# ---------------------------------------------------------------------------
# continuous setting
# ---------------------------------------------------------------------------


def candidate_endpoints(values: np.ndarray) -> np.ndarray:
    """``{0, 1}`` plus midpoints between consecutive distinct sorted values."""
    u = np.unique(np.asarray(values, dtype=np.float64))
    mids = (u[:-1] + u[1:]) / 2
    return np.unique(np.concatenate([[0.0], mids, [1.0]]))


def pidscore_bruteforce(x, data) -> tuple[float, Subcube]:
    """Maximum log2 sparsity over all candidate subcubes containing ``x``.

    ``data`` is an ``n x d`` array already in ``[0, 1]^d`` with ``d <= 3``.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    n, d = arr.shape
    if d > MAX_BRUTEFORCE_DIM:
        raise ValueError("use forest, oracle infeasible")
    if n == 0:
        raise ValueError("empty input")
    if arr.min() < 0 or arr.max() > 1:
        raise ValueError("data must lie in [0, 1]^d")
    x = np.asarray(x, dtype=np.float64).ravel()

    per_coord = []
    for j in range(d):
        ends = candidate_endpoints(arr[:, j])
        los = ends[ends <= x[j]]
        his = ends[ends >= x[j]]
        a, b = (g.ravel() for g in np.meshgrid(los, his, indexing="ij"))
        keep = b > a
        a, b = a[keep], b[keep]
        inside = (arr[None, :, j] >= a[:, None]) & (arr[None, :, j] <= b[:, None])
        per_coord.append((a, b, inside))

    if d == 1:
        # same enumeration as below, evaluated in one sweep
        a, b, inside = per_coord[0]
        vals = np.log2(b - a) - np.log2(inside.sum(axis=1))
        i = int(np.argmax(vals))
        return float(vals[i]), Subcube((Interval(float(a[i]), float(b[i])),))

    best_val = -math.inf
    best_cube = None
    for choice in itertools.product(*(range(len(p[0])) for p in per_coord)):
        mask = np.ones(n, dtype=bool)
        log_vol = 0.0
        for j, c in enumerate(choice):
            mask &= per_coord[j][2][c]
            log_vol += math.log2(per_coord[j][1][c] - per_coord[j][0][c])
        count = int(mask.sum())
        val = log_vol - math.log2(count)
        if val > best_val:
            best_val = val
            best_cube = tuple((per_coord[j][0][c], per_coord[j][1][c]) for j, c in enumerate(choice))
    assert best_cube is not None
    return best_val, Subcube(tuple(Interval(float(a), float(b)) for a, b in best_cube))


def _densest_from_prefix(prefix: np.ndarray, weights: np.ndarray):
    """Per-index densest interval given prefix sums of the values and weights.

    Density of cells ``l..u`` (0-based, inclusive) is
    ``(prefix[u+1] - prefix[l]) / (wsum[u+1] - wsum[l])``.
    """
    n = len(prefix) - 1
    wsum = np.concatenate([[0.0], np.cumsum(weights, dtype=np.float64)])

    # pass 1: exact best density per index, O(n^2)
    best = np.full(n, -np.inf)
    for lo in range(n):
        dens = (prefix[lo + 1 :] - prefix[lo]) / (wsum[lo + 1 :] - wsum[lo])
        # for j >= lo: best interval starting at lo and ending at or after j
        tail = np.maximum.accumulate(dens[::-1])[::-1]
        np.maximum(best[lo:], tail, out=best[lo:])

    # pass 2: shortest near-optimal interval, then smallest start
    thr = best - _TIE_RTOL * np.abs(best)
    lo_out = np.full(n, -1)
    hi_out = np.full(n, -1)
    pending = np.ones(n, dtype=bool)
    for length in range(1, n + 1):
        starts = np.arange(n - length + 1)
        dens = (prefix[starts + length] - prefix[starts]) / (wsum[starts + length] - wsum[starts])
        for j in np.flatnonzero(pending):
            s0 = max(0, j - length + 1)
            s1 = min(j, n - length)
            window = dens[s0 : s1 + 1]
            hit = np.flatnonzero(window >= thr[j])
            if hit.size:
                lo_out[j] = s0 + hit[0]
                hi_out[j] = lo_out[j] + length - 1
                pending[j] = False
        if not pending.any():
            break
    chosen = (prefix[hi_out + 1] - prefix[lo_out]) / (wsum[hi_out + 1] - wsum[lo_out])
    return chosen, lo_out, hi_out


def densest_interval_all(a, weights=None) -> list[tuple[float, DiscreteInterval]]:
    """For every index, the interval through it with the highest average.

    With ``weights`` the average is ``sum(a) / sum(weights)`` over the
    interval. Ties (to a relative 1e-12) prefer the shorter interval, then
    the one starting first. Indices in the result are 1-based.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("empty input")
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    prefix = np.concatenate([[0.0], np.cumsum(a)])
    _, lo, hi = _densest_from_prefix(prefix, w)
    out = []
    for j in range(a.size):
        # summed directly so a singleton reports a[j] itself, free of prefix rounding
        dens = math.fsum(a[lo[j] : hi[j] + 1]) / math.fsum(w[lo[j] : hi[j] + 1])
        out.append((dens, DiscreteInterval(int(lo[j]) + 1, int(hi[j]) + 1)))
    return out


def pidscore_1d(points) -> list[tuple[float, Interval]]:
    """Exact 1-d PIDScore for every point, with the witness interval.

    Equal values are collapsed into one position carrying their
    multiplicity. Results are returned in the order of ``points``.
    """
    x = np.asarray(points, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty input")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("points must lie in [0, 1]")
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    e = np.concatenate([[0.0], (uniq[:-1] + uniq[1:]) / 2, [1.0]])
    # prefix sums of the gap array are the endpoints themselves
    _, lo, hi = _densest_from_prefix(e, counts.astype(np.float64))
    out = []
    for j in inverse:
        a, b = e[lo[j]], e[hi[j] + 1]
        count = counts[lo[j] : hi[j] + 1].sum()
        out.append((math.log2(b - a) - math.log2(count), Interval(float(a), float(b))))
    return out
