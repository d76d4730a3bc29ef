"""Exact symbolic gap-length sets of hull-disjoint attractors.

For a hull-disjoint instance the bounded complementary intervals of the root
attractor decompose recursively: every gap length is a spacing between
consecutive child hulls at some vertex, rescaled by the ratio product of a
directed path from the root.  Storing the per-vertex spacing sets plus the
graph therefore represents the entire (infinite) gap length set; truncated
enumeration, exact membership, and residual splits are pruned searches over
that representation.  Gap lengths form a set: equal lengths from different
gaps collapse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .exactnum import format_rational
from .model import (
    GDInstance,
    HullList,
    ResourceError,
    SeparationReport,
    HULL_DISJOINT,
    _out_map,
    child_hulls,
    hulls,
    path_products,
    separation_check,
)

DEFAULT_VALUE_BUDGET = 10**6


class UnsupportedInstanceError(RuntimeError):
    """The exact gap pipeline requires hull-disjoint child images."""


@dataclass
class SymbolicGapSet:
    """Finite description of the full gap length set of F_root.

    level0 maps each reachable vertex to its sorted spacings between
    consecutive child hulls; any gap length of F_root equals a path ratio
    product from the root times one of these spacings.  Treat instances as
    immutable after build; `_memo` only caches derived results.
    """

    graph: GDInstance
    root: str
    level0: dict[str, tuple[Fraction, ...]]
    hull_list: HullList
    reachable: tuple[str, ...]
    _memo: dict = field(default_factory=dict, repr=False, compare=False)


@dataclass(frozen=True)
class GapEnumeration:
    """All distinct gap lengths >= cutoff, sorted descending."""

    cutoff: Fraction
    values: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "cutoff": format_rational(self.cutoff),
            "values": [format_rational(v) for v in self.values],
        }

    def csv_lines(self) -> list[str]:
        return [format_rational(v) for v in self.values]


@dataclass(frozen=True)
class ResidualSplit:
    """Gap lengths at or above delta (gamma) plus, per vertex, the rescaled
    sub-delta generators contributed by single edge steps (tails)."""

    delta: Fraction
    gamma: tuple[Fraction, ...]
    tails: dict[str, tuple[Fraction, ...]]


def build(
    g: GDInstance,
    root: Optional[str] = None,
    separation: Optional[SeparationReport] = None,
) -> SymbolicGapSet:
    """Construct the symbolic gap set rooted at `root` (default: first vertex).

    Refuses instances that are not hull-disjoint: with overlapping or merely
    SSC-separated child hulls the complement spacings at one level are no
    longer gap lengths of the attractor, so this representation would lie.
    """
    root = root if root is not None else g.vertices[0]
    if root not in g.vertices:
        raise ValueError(f"unknown root vertex {root!r}")
    if separation is None:
        separation = separation_check(g)
    if separation.verdict != HULL_DISJOINT:
        raise UnsupportedInstanceError(
            "exact gap analysis requires hull-disjoint children, got "
            f"{separation.verdict!r}; use the metric pipeline instead"
        )
    h = hulls(g)
    out = _out_map(g)
    seen = {root}
    frontier = [root]
    while frontier:
        v = frontier.pop()
        for e in out[v]:
            if e.dst not in seen:
                seen.add(e.dst)
                frontier.append(e.dst)
    reachable = tuple(v for v in g.vertices if v in seen)
    level0: dict[str, tuple[Fraction, ...]] = {}
    for v in reachable:
        ch = child_hulls(g, h, v)
        spacings = {
            ch[i + 1][1][0] - ch[i][1][1] for i in range(len(ch) - 1)
        }
        level0[v] = tuple(sorted(spacings))
    return SymbolicGapSet(g, root, level0, h, reachable)


def natural_delta(s: SymbolicGapSet) -> Fraction:
    """The smallest level-zero spacing visible from the root; every gap at
    or above it belongs to the residual head of the decomposition."""
    return min(sp[0] for v, sp in s.level0.items() if sp)


def _max_visible(s: SymbolicGapSet) -> dict[str, Fraction]:
    """Largest level-zero spacing reachable from each vertex (path products
    only shrink, so this bounds every value contributed below a vertex)."""
    if "maxvis" in s._memo:
        return s._memo["maxvis"]
    out = _out_map(s.graph)
    result: dict[str, Fraction] = {}
    for v in s.reachable:
        seen = {v}
        frontier = [v]
        best = max(s.level0[v]) if s.level0[v] else Fraction(0)
        while frontier:
            w = frontier.pop()
            for e in out[w]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    frontier.append(e.dst)
                    if s.level0[e.dst]:
                        best = max(best, max(s.level0[e.dst]))
        result[v] = best
    s._memo["maxvis"] = result
    return result


def enumerate_gaps(
    s: SymbolicGapSet,
    cutoff,
    budget: int = DEFAULT_VALUE_BUDGET,
    root: Optional[str] = None,
) -> GapEnumeration:
    """All distinct gap lengths >= cutoff, exactly.

    Walks (vertex, path product) states depth-first, pruning a subtree as
    soon as the product times the largest spacing visible below it falls
    under the cutoff; equal products at the same vertex are merged.
    """
    cutoff = Fraction(cutoff)
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    root = root if root is not None else s.root
    if root not in s.reachable:
        raise ValueError(f"vertex {root!r} is not reachable from the build root")
    key = ("enum", root, cutoff)
    if key in s._memo:
        return s._memo[key]
    maxvis = _max_visible(s)
    out = _out_map(s.graph)
    values: set[Fraction] = set()
    one = Fraction(1)
    visited: set[tuple[str, Fraction]] = {(root, one)}
    stack: list[tuple[str, Fraction]] = [(root, one)]
    while stack:
        v, r = stack.pop()
        if len(visited) > 8 * budget:
            raise ResourceError("gap enumeration exceeded its state budget")
        for sp in s.level0[v]:
            val = r * sp
            if val >= cutoff:
                values.add(val)
                if len(values) > budget:
                    raise ResourceError(
                        f"gap enumeration exceeded its budget of {budget} values"
                    )
        for e in out[v]:
            r2 = r * e.sim.ratio
            if r2 * maxvis[e.dst] >= cutoff and (e.dst, r2) not in visited:
                visited.add((e.dst, r2))
                stack.append((e.dst, r2))
    result = GapEnumeration(cutoff, tuple(sorted(values, reverse=True)))
    s._memo[key] = result
    return result


def contains(s: SymbolicGapSet, x) -> bool:
    """Exact membership of x in the full (untruncated) gap length set."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("gap lengths are positive")
    key = ("contains", x)
    if key in s._memo:
        return s._memo[key]
    result = bool(realization_vertices(s, x))
    s._memo[key] = result
    return result


def realization_vertices(s: SymbolicGapSet, x) -> tuple[str, ...]:
    """Vertices v admitting a root path with x == (path product) * spacing(v).

    Empty means x is not a gap length.  The full state space above x is
    finite for the same pruning reason as in enumerate_gaps.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("gap lengths are positive")
    key = ("realize", x)
    if key in s._memo:
        return s._memo[key]
    maxvis = _max_visible(s)
    out = _out_map(s.graph)
    found: set[str] = set()
    one = Fraction(1)
    visited: set[tuple[str, Fraction]] = {(s.root, one)}
    stack: list[tuple[str, Fraction]] = [(s.root, one)]
    while stack:
        v, r = stack.pop()
        for sp in s.level0[v]:
            if r * sp == x:
                found.add(v)
        for e in out[v]:
            r2 = r * e.sim.ratio
            if r2 * maxvis[e.dst] >= x and (e.dst, r2) not in visited:
                visited.add((e.dst, r2))
                stack.append((e.dst, r2))
    result = tuple(sorted(found))
    s._memo[key] = result
    return result


def residual_split(s: SymbolicGapSet, delta) -> ResidualSplit:
    """Split the gap set at delta: gamma holds every gap >= delta of the
    root; tails[v] holds, per vertex, the sub-delta values obtained from one
    edge step into the >= delta part at the target vertex.

    Taken together, gamma plus the path-rescaled tails regenerate the whole
    gap set, which the recursive-identity tests exercise.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    gamma = enumerate_gaps(s, delta).values
    out = _out_map(s.graph)
    per_vertex: dict[str, tuple[Fraction, ...]] = {
        v: enumerate_gaps(s, delta, root=v).values for v in s.reachable
    }
    tails: dict[str, tuple[Fraction, ...]] = {}
    for v in s.reachable:
        vals: set[Fraction] = set()
        for e in out[v]:
            for gval in per_vertex[e.dst]:
                scaled = e.sim.ratio * gval
                if scaled < delta:
                    vals.add(scaled)
        tails[v] = tuple(sorted(vals, reverse=True))
    return ResidualSplit(delta, gamma, tails)


def cycle_products(s: SymbolicGapSet, v: str, floor) -> frozenset[Fraction]:
    """Ratio products of nonempty closed paths v -> v with product >= floor.

    Every such product r certifies whole geometric ladders inside the gap
    set: if x is realized at v then x * r**k is a gap length for all k >= 0.
    """
    floor = Fraction(floor)
    key = ("cyc", v, floor)
    if key in s._memo:
        return s._memo[key]
    result = frozenset(path_products(s.graph, v, v, floor))
    s._memo[key] = result
    return result
