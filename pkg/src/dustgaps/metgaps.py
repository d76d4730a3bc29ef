"""Metric pipeline: component-count profiles and gap extraction for finite
point clouds.

kappa(delta) counts the classes of the chain relation "linked when distance
<= delta" via union-find; merge_heights computes the distinct heights where
kappa jumps as the edge-weight set of a minimum spanning tree (the merge
height multiset is MST-invariant, so profiles are deterministic regardless
of tie-breaking).  Dimension 1 supports exact rational coordinates and sorts
instead of bucketing; dimensions 2 and 3 run in float64, with a relative tie
tolerance recorded whenever nearly-equal heights are grouped.
"""

from __future__ import annotations

import bisect
import csv
import io
import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .exactnum import format_rational, parse_rational
from .model import Cover, ResourceError

TIE_TOLERANCE = 1e-12
_DENSE_LIMIT = 4096
_PAIR_BUDGET = 50_000_000

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


@dataclass(frozen=True)
class PointCloud:
    """Deduplicated finite point set in dimension 1, 2, or 3.

    Exact clouds (dimension 1 only) store sorted Fractions; float clouds
    store a float64 array, sorted in dimension 1 and row-deduplicated
    otherwise.  `resolution` records the sampling error bound when the cloud
    came from an attractor cover.
    """

    dim: int
    exact: bool
    points: Union[tuple[Fraction, ...], np.ndarray]
    resolution: Optional[Union[Fraction, float]] = None

    @property
    def n(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, pts: Iterable, resolution=None) -> "PointCloud":
        rows = list(pts)
        if not rows:
            raise ValueError("point cloud must be nonempty")
        scalar = not isinstance(rows[0], (tuple, list, np.ndarray))
        if scalar:
            if all(isinstance(x, (Fraction, int)) for x in rows):
                return cls(1, True, tuple(sorted({Fraction(x) for x in rows})), resolution)
            arr = np.unique(np.asarray(rows, dtype=np.float64))
            return cls(1, False, arr, resolution)
        dim = len(rows[0])
        if dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2, or 3, got {dim}")
        if any(len(r) != dim for r in rows):
            raise ValueError("points have inconsistent dimensions")
        if dim == 1:
            return cls.from_points([r[0] for r in rows], resolution)
        arr = np.unique(np.asarray(rows, dtype=np.float64), axis=0)
        return cls(dim, False, arr, resolution)

    @classmethod
    def from_cover(cls, cover: Cover) -> "PointCloud":
        return cls.from_points(cover.points, resolution=cover.resolution)

    def as_floats(self) -> np.ndarray:
        if self.exact:
            return np.asarray([float(x) for x in self.points], dtype=np.float64)
        return self.points


def read_cloud_csv(source: Union[str, Path]) -> PointCloud:
    """One point per line, comma-separated coordinates.  A single column of
    exact rational tokens ("p/q" or integers) loads as an exact cloud;
    anything else loads as float64."""
    text = Path(source).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError("cloud file contains no points")
    cells = [[c.strip() for c in r] for r in rows]
    if all(len(r) == 1 for r in cells) and all(_RATIONAL_RE.match(r[0]) for r in cells):
        return PointCloud.from_points([parse_rational(r[0]) for r in cells])

    def _tofloat(token: str) -> float:
        try:
            return float(token)
        except ValueError:
            return float(Fraction(token))

    return PointCloud.from_points([tuple(_tofloat(c) for c in r) for r in cells])


def kappa(cloud: PointCloud, delta) -> int:
    """Number of delta-chain classes: components of the graph linking points
    at distance <= delta (closed inequality), by union-find.

    In dimension 1 consecutive sorted links realize every chain, so the
    count is one plus the number of sorted gaps exceeding delta; in higher
    dimensions candidate edges come from a uniform grid of cell size delta.
    """
    if cloud.n == 0:
        raise ValueError("point cloud must be nonempty")
    if cloud.exact:
        d = Fraction(delta)
        if d <= 0:
            raise ValueError("delta must be positive")
        pts = cloud.points
        return 1 + sum(1 for a, b in itertools.pairwise(pts) if b - a > d)
    d = float(delta)
    if d <= 0:
        raise ValueError("delta must be positive")
    if cloud.dim == 1:
        return 1 + int(np.count_nonzero(np.diff(cloud.points) > d))
    ii, jj = _grid_pairs(cloud.points, d)
    return _component_count(cloud.n, ii, jj)


def _void_keys(cells: np.ndarray) -> np.ndarray:
    # byte-equality view of integer rows; ordering is arbitrary but
    # self-consistent, which is all grouping and matching need
    c = np.ascontiguousarray(cells)
    return c.view([("", c.dtype)] * c.shape[1]).reshape(-1)


def _concat_ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    reset = np.repeat(counts.cumsum() - counts, counts)
    return np.repeat(starts, counts) + np.arange(total, dtype=np.int64) - reset


def _grid_pairs(pts: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i, j) at distance <= delta, found via cells of size delta:
    qualifying pairs live in the same or adjacent cells."""
    n, dim = pts.shape
    cells = np.floor(pts / delta).astype(np.int64)
    keys = _void_keys(cells)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    is_start = np.concatenate(([True], sk[1:] != sk[:-1]))
    starts = np.flatnonzero(is_start)
    ends = np.append(starts[1:], n)
    uniq = sk[starts]
    counts = ends - starts
    offsets = [
        off
        for off in itertools.product((-1, 0, 1), repeat=dim)
        if any(off) and next(x for x in off if x) > 0
    ]
    pair_i: list[np.ndarray] = []
    pair_j: list[np.ndarray] = []
    total_pairs = 0

    def _emit(ii: np.ndarray, jj: np.ndarray) -> None:
        nonlocal total_pairs
        if len(ii) == 0:
            return
        diff = pts[ii] - pts[jj]
        dist = np.abs(diff[:, 0]) if dim == 1 else np.sqrt((diff * diff).sum(axis=1))
        keep = dist <= delta
        pair_i.append(ii[keep])
        pair_j.append(jj[keep])

    # same-cell pairs
    big = counts[counts > 1]
    total_pairs += int((big * (big - 1) // 2).sum())
    if total_pairs > _PAIR_BUDGET:
        raise ResourceError("candidate pair count exceeded the pair budget")
    for gi in np.flatnonzero(counts > 1):
        members = order[starts[gi] : ends[gi]]
        iu, ju = np.triu_indices(len(members), k=1)
        _emit(members[iu], members[ju])
    # adjacent-cell pairs, one direction per unordered cell pair
    for off in offsets:
        shifted = _void_keys(cells + np.asarray(off, dtype=np.int64))
        pos = np.searchsorted(uniq, shifted)
        pos_c = np.clip(pos, 0, len(uniq) - 1)
        valid = np.flatnonzero(uniq[pos_c] == shifted)
        if len(valid) == 0:
            continue
        gidx = pos_c[valid]
        cnt = counts[gidx]
        total_pairs += int(cnt.sum())
        if total_pairs > _PAIR_BUDGET:
            raise ResourceError("candidate pair count exceeded the pair budget")
        ii = np.repeat(valid, cnt)
        jj = order[_concat_ranges(starts[gidx], cnt)]
        _emit(ii, jj)
    if not pair_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(pair_i), np.concatenate(pair_j)


def _component_count(n: int, ii: np.ndarray, jj: np.ndarray) -> int:
    """Connected components by vectorized union-find: hook the larger root
    onto the smaller, then compress until labels stop changing."""
    if len(ii) == 0:
        return n
    labels = np.arange(n, dtype=np.int64)
    for _ in range(10_000):
        a = labels[ii]
        b = labels[jj]
        if np.array_equal(a, b):
            break
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        np.minimum.at(labels, hi, lo)
        while True:
            nl = labels[labels]
            if np.array_equal(nl, labels):
                break
            labels = nl
    else:  # pragma: no cover - the potential argument guarantees termination
        raise RuntimeError("component labelling failed to converge")
    return len(np.unique(labels))


@dataclass(frozen=True)
class KappaProfile:
    """Right-continuous step description of delta -> kappa(delta).

    heights are the distinct merge heights ascending; counts[i] is kappa on
    [heights[i], heights[i+1]), and kappa below heights[0] is n_points.
    """

    n_points: int
    heights: tuple
    counts: tuple[int, ...]
    exact: bool
    tie_tolerance: Optional[float] = None

    def kappa_at(self, delta) -> int:
        d = Fraction(delta) if self.exact else float(delta)
        if d <= 0:
            raise ValueError("delta must be positive")
        idx = bisect.bisect_right(self.heights, d) - 1
        return self.n_points if idx < 0 else self.counts[idx]

    def to_json(self) -> dict:
        if self.exact:
            heights = [format_rational(h) for h in self.heights]
        else:
            heights = [float(h) for h in self.heights]
        return {
            "points": self.n_points,
            "heights": heights,
            "counts": list(self.counts),
            "tie_tolerance": self.tie_tolerance,
        }


def merge_heights(cloud: PointCloud, method: str = "auto") -> KappaProfile:
    """Merge heights of the single-linkage hierarchy, with multiplicities
    folded into the kappa step profile.

    Methods: "auto" sorts in dimension 1 and picks dense Prim or
    grid-accelerated Boruvka by size otherwise; "dense" forces the O(n^2)
    reference; "grid" forces bucketing.  All methods yield the same height
    multiset; floating-point heights closer than the relative tie tolerance
    are grouped and reported once.
    """
    if method not in ("auto", "dense", "grid"):
        raise ValueError(f"unknown method {method!r}")
    n = cloud.n
    if n == 0:
        raise ValueError("point cloud must be nonempty")
    if cloud.exact:
        if method == "dense":
            weights = _mst_dense_exact(cloud.points)
        else:
            weights = [b - a for a, b in itertools.pairwise(cloud.points)]
        pairs = sorted(set(weights))
        mult = {h: 0 for h in pairs}
        for w in weights:
            mult[w] += 1
        heights = tuple(pairs)
        counts = []
        remaining = n
        for h in heights:
            remaining -= mult[h]
            counts.append(remaining)
        return KappaProfile(n, heights, tuple(counts), True, None)
    pts = cloud.points
    if cloud.dim == 1:
        weights = np.diff(pts) if method != "dense" else _mst_dense_float(pts.reshape(-1, 1))
    elif method == "dense" or (method == "auto" and n <= _DENSE_LIMIT):
        weights = _mst_dense_float(pts)
    else:
        weights = _mst_grid_float(pts)
    weights = np.sort(np.asarray(weights, dtype=np.float64))
    heights: list[float] = []
    counts: list[int] = []
    remaining = n
    k = 0
    while k < len(weights):
        j = k
        while j + 1 < len(weights) and weights[j + 1] - weights[k] <= TIE_TOLERANCE * weights[j + 1]:
            j += 1
        heights.append(float(weights[k]))
        remaining -= j - k + 1
        counts.append(remaining)
        k = j + 1
    return KappaProfile(n, tuple(heights), tuple(counts), False, TIE_TOLERANCE)


def _mst_dense_exact(points: Sequence[Fraction]) -> list[Fraction]:
    """Prim over all pairs with exact arithmetic; dimension-1 reference."""
    n = len(points)
    if n == 1:
        return []
    in_tree = [False] * n
    dist: list[Optional[Fraction]] = [None] * n
    in_tree[0] = True
    for i in range(1, n):
        dist[i] = abs(points[i] - points[0])
    weights: list[Fraction] = []
    for _ in range(n - 1):
        k = min(
            (i for i in range(n) if not in_tree[i]),
            key=lambda i: dist[i],
        )
        weights.append(dist[k])
        in_tree[k] = True
        for i in range(n):
            if not in_tree[i]:
                d = abs(points[i] - points[k])
                if d < dist[i]:
                    dist[i] = d
    return weights


def _mst_dense_float(pts: np.ndarray) -> np.ndarray:
    """Vectorized Prim over all pairs; the unaccelerated float reference."""
    n, dim = pts.shape
    if n == 1:
        return np.empty(0, dtype=np.float64)

    def dist_to(k: int) -> np.ndarray:
        diff = pts - pts[k]
        return np.abs(diff[:, 0]) if dim == 1 else np.sqrt((diff * diff).sum(axis=1))

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    dist = dist_to(0)
    dist[0] = np.inf
    weights = np.empty(n - 1, dtype=np.float64)
    for t in range(n - 1):
        k = int(np.argmin(np.where(in_tree, np.inf, dist)))
        weights[t] = dist[k]
        in_tree[k] = True
        dist = np.minimum(dist, dist_to(k))
    return weights


class _UnionFind:
    """Array union-find with path halving; used by Boruvka merging."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _mst_grid_float(pts: np.ndarray) -> np.ndarray:
    """Boruvka rounds with grid bucketing: per occupied cell, expand rings of
    neighboring cells until each point's nearest different-component
    neighbor is certified by the ring radius, then merge per-component
    minimum edges (ties broken lexicographically so no cycles form)."""
    n, dim = pts.shape
    if n == 1:
        return np.empty(0, dtype=np.float64)
    span = float((pts.max(axis=0) - pts.min(axis=0)).max())
    h = span / max(1.0, n ** (1.0 / dim))
    if h <= 0:
        h = 1.0
    cells = np.floor(pts / h).astype(np.int64)
    keys = _void_keys(cells)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    is_start = np.concatenate(([True], sk[1:] != sk[:-1]))
    starts = np.flatnonzero(is_start)
    ends = np.append(starts[1:], n)
    uniq = sk[starts]
    cell_coords = cells[order[starts]]
    max_ring = int(span / h) + 2

    def cell_members(coord: np.ndarray) -> np.ndarray:
        key = _void_keys(coord.reshape(1, -1))[0]
        pos = np.searchsorted(uniq, key)
        if pos < len(uniq) and uniq[pos] == key:
            return order[starts[pos] : ends[pos]]
        return np.empty(0, dtype=np.int64)

    uf = _UnionFind(n)
    comp = np.arange(n, dtype=np.int64)
    n_comp = n
    weights: list[float] = []
    while n_comp > 1:
        best_d = np.full(n, np.inf)
        best_j = np.full(n, -1, dtype=np.int64)
        for gi in range(len(uniq)):
            members = order[starts[gi] : ends[gi]]
            base = cell_coords[gi]
            cur_d = np.full(len(members), np.inf)
            cur_j = np.full(len(members), -1, dtype=np.int64)
            for ring in range(max_ring + 1):
                if ring > max_ring - 1:
                    pool = np.arange(n, dtype=np.int64)  # exhaustive fallback
                else:
                    shells = []
                    for off in itertools.product(range(-ring, ring + 1), repeat=dim):
                        if max(abs(o) for o in off) != ring:
                            continue
                        shells.append(cell_members(base + np.asarray(off, dtype=np.int64)))
                    pool = np.concatenate(shells) if shells else np.empty(0, dtype=np.int64)
                if len(pool):
                    diff = pts[members][:, None, :] - pts[pool][None, :, :]
                    dmat = (
                        np.abs(diff[:, :, 0])
                        if dim == 1
                        else np.sqrt((diff * diff).sum(axis=2))
                    )
                    same = comp[members][:, None] == comp[pool][None, :]
                    dmat[same] = np.inf
                    am = dmat.argmin(axis=1)
                    dm = dmat[np.arange(len(members)), am]
                    better = dm < cur_d
                    cur_d[better] = dm[better]
                    cur_j[better] = pool[am[better]]
                if np.all(cur_d <= ring * h) or ring >= max_ring:
                    break
            best_d[members] = cur_d
            best_j[members] = cur_j
        valid = best_j >= 0
        idx = np.flatnonzero(valid)
        lo_idx = np.minimum(idx, best_j[idx])
        hi_idx = np.maximum(idx, best_j[idx])
        sort_order = np.lexsort((hi_idx, lo_idx, best_d[idx], comp[idx]))
        sorted_comp = comp[idx][sort_order]
        first = np.concatenate(([True], sorted_comp[1:] != sorted_comp[:-1]))
        chosen = idx[sort_order[first]]
        edges = {}
        for i in chosen:
            j = int(best_j[i])
            key2 = (min(i, j), max(i, j))
            edges.setdefault(key2, float(best_d[i]))
        for (a, b), w in sorted(edges.items(), key=lambda kv: (kv[1], kv[0])):
            if uf.union(a, b):
                weights.append(w)
                n_comp -= 1
        comp = np.asarray([uf.find(i) for i in range(n)], dtype=np.int64)
    assert len(weights) == n - 1
    return np.asarray(weights, dtype=np.float64)


@dataclass(frozen=True)
class MetricGapReport:
    """Merge heights above the noise floor, sorted descending, with
    warnings when the floor sits too close to the sampling resolution."""

    noise_floor: Union[Fraction, float]
    values: tuple
    exact: bool
    warnings: tuple[str, ...] = ()
    tie_tolerance: Optional[float] = None

    def to_json(self) -> dict:
        if self.exact:
            values = [format_rational(v) for v in self.values]
            floor = format_rational(self.noise_floor)
        else:
            values = [float(v) for v in self.values]
            floor = float(self.noise_floor)
        return {
            "noise_floor": floor,
            "values": values,
            "warnings": list(self.warnings),
            "tie_tolerance": self.tie_tolerance,
        }


def metric_gaps(
    cloud: PointCloud, noise_floor, method: str = "auto"
) -> MetricGapReport:
    """Candidate gap lengths of the sampled set: merge heights strictly above
    the noise floor.  Heights at or below twice the sampling resolution are
    indistinguishable from discretization artifacts, hence the warning."""
    floor = Fraction(noise_floor) if cloud.exact else float(noise_floor)
    if floor <= 0:
        raise ValueError("noise floor must be positive")
    profile = merge_heights(cloud, method=method)
    warnings: list[str] = []
    values = tuple(h for h in reversed(profile.heights) if h > floor)
    if cloud.resolution is not None and floor <= 2 * float(cloud.resolution):
        warnings.append(
            "noise floor is within twice the sampling resolution; "
            "gaps near the floor may be sampling artifacts"
        )
    return MetricGapReport(floor, values, cloud.exact, tuple(warnings), profile.tie_tolerance)
