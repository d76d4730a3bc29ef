"""Shared test helpers: seeded random instances and independent oracles.

Oracles here deliberately avoid the library's own algorithms: gap values
come from interval-complement scans of exact covers, ranks from determinant
probing, components from edge-list union-find.
"""

import random
from fractions import Fraction

import pytest

from dustgaps import model

# ratios with 13-smooth numerator and denominator, all <= 1/2
SMOOTH_RATIOS = [
    Fraction(1, 2),
    Fraction(1, 3),
    Fraction(2, 5),
    Fraction(1, 4),
    Fraction(3, 7),
    Fraction(1, 5),
    Fraction(2, 7),
    Fraction(5, 11),
    Fraction(3, 8),
    Fraction(1, 6),
    Fraction(5, 13),
    Fraction(1, 7),
    Fraction(3, 10),
    Fraction(2, 9),
    Fraction(4, 9),
    Fraction(5, 12),
    Fraction(1, 8),
    Fraction(7, 16),
    Fraction(4, 13),
    Fraction(6, 13),
]


def random_hull_disjoint(rng: random.Random, n_maps=None, signs=True) -> model.GDInstance:
    """One-vertex instance whose child hulls tile [0,1] with strictly
    positive gaps, so hull_disjoint holds by construction."""
    n = n_maps if n_maps is not None else rng.choice([2, 2, 3, 3, 4])
    while True:
        ratios = [rng.choice(SMOOTH_RATIOS) for _ in range(n)]
        total = sum(ratios)
        if total < 1:
            break
    leftover = Fraction(1) - total
    weights = [rng.randint(1, 9) for _ in range(n - 1)]
    wsum = sum(weights)
    gaps = [leftover * w / wsum for w in weights]
    sims = []
    x = Fraction(0)
    for i, r in enumerate(ratios):
        sign = rng.choice([1, -1]) if signs else 1
        if sign == 1:
            sims.append(model.Similarity1D(r, 1, x))
        else:
            sims.append(model.Similarity1D(r, -1, x + r))
        x += r
        if i < n - 1:
            x += gaps[i]
    if len(set(sims)) < len(sims):
        # zero-width gap collisions cannot happen, but identical maps can
        return random_hull_disjoint(rng, n_maps=n_maps, signs=signs)
    return model.GDInstance.ifs(sims)


def cover_complement_gaps(g: model.GDInstance, root: str, cutoff: Fraction) -> list:
    """Brute-force oracle: gap values >= cutoff read off the complement of a
    depth-k exact interval cover with resolution below cutoff/4."""
    h = model.hulls(g)
    depth = 1
    while g.max_ratio**depth * h.diameter(root) >= cutoff / 4:
        depth += 1
    intervals = model.cover_intervals(g, root, depth)
    out = set()
    for (_, hi1), (lo2, _) in zip(intervals, intervals[1:]):
        if lo2 - hi1 >= cutoff:
            out.add(lo2 - hi1)
    return sorted(out, reverse=True)


class PlainUnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.count = n

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        self.count -= 1
        return True


def brute_components(points, delta) -> int:
    """All-pairs union-find, no grids, no MST."""
    n = len(points)
    uf = PlainUnionFind(n)
    for i in range(n):
        a = points[i]
        for j in range(i + 1, n):
            b = points[j]
            if isinstance(a, tuple):
                dist = sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5
            else:
                dist = abs(a - b)
            if dist <= delta:
                uf.union(i, j)
    return uf.count


@pytest.fixture
def rng():
    return random.Random(20260818)
