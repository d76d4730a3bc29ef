import random
from fractions import Fraction

import numpy as np
import pytest

import dustgaps
from conftest import brute_components
from dustgaps import metgaps, model
from dustgaps.metgaps import PointCloud

F = Fraction


def test_from_points_exact_dim1():
    c = PointCloud.from_points([F(1, 2), 0, F(1, 2), F(1, 3)])
    assert c.exact and c.dim == 1
    assert c.points == (F(0), F(1, 3), F(1, 2))
    assert c.n == 3


def test_from_points_float_dims():
    c = PointCloud.from_points([0.5, 0.1, 0.5])
    assert not c.exact and c.dim == 1 and c.n == 2
    c2 = PointCloud.from_points([(0.0, 1.0), (1.0, 0.0), (0.0, 1.0)])
    assert c2.dim == 2 and c2.n == 2
    c3 = PointCloud.from_points([(0.0, 1.0, 2.0), (3.0, 4.0, 5.0)])
    assert c3.dim == 3 and c3.n == 2
    with pytest.raises(ValueError):
        PointCloud.from_points([])
    with pytest.raises(ValueError):
        PointCloud.from_points([(1.0, 2.0, 3.0, 4.0)])


def test_from_cover_keeps_exactness_and_resolution():
    g = model.GDInstance.ifs(
        [model.Similarity1D(F(1, 3), 1, F(0)), model.Similarity1D(F(1, 3), 1, F(2, 3))]
    )
    cover = model.approximate(g, "u", 4)
    c = PointCloud.from_cover(cover)
    assert c.exact and c.n == 16
    assert c.resolution == F(1, 81)


def test_read_cloud_csv(tmp_path):
    p = tmp_path / "exact.csv"
    p.write_text("1/3\n0\n2/3\n")
    c = metgaps.read_cloud_csv(p)
    assert c.exact and c.points == (F(0), F(1, 3), F(2, 3))

    q = tmp_path / "floats.csv"
    q.write_text("0.25\n0.75\n")
    cf = metgaps.read_cloud_csv(q)
    assert not cf.exact and cf.dim == 1

    r = tmp_path / "plane.csv"
    r.write_text("0.0,1.0\n1.0,0.0\n1/2,1/2\n")
    c2 = metgaps.read_cloud_csv(r)
    assert c2.dim == 2 and c2.n == 3
    assert not c2.exact


def test_kappa_hand_examples():
    c = PointCloud.from_points([F(0), F(1, 10), F(1, 2), F(6, 10)])
    assert metgaps.kappa(c, F(1, 10)) == 2
    assert metgaps.kappa(c, F(1, 20)) == 4
    assert metgaps.kappa(c, F(1, 2)) == 1
    # closed inequality: delta exactly equal to a spacing merges it
    assert metgaps.kappa(c, F(4, 10)) == 1
    assert metgaps.kappa(c, F(39, 100)) == 2
    with pytest.raises(ValueError):
        metgaps.kappa(c, F(0))


def test_kappa_matches_brute_force_dim1_exact():
    rng = random.Random(31)
    pts = sorted({F(rng.randint(0, 400), 400) for _ in range(60)})
    c = PointCloud.from_points(pts)
    for _ in range(40):
        d = F(rng.randint(1, 100), 400)
        assert metgaps.kappa(c, d) == brute_components(list(c.points), d)


def test_kappa_matches_brute_force_higher_dims():
    rng = random.Random(37)
    for dim in (2, 3):
        pts = [tuple(rng.random() for _ in range(dim)) for _ in range(120)]
        c = PointCloud.from_points(pts)
        cpts = [tuple(row) for row in c.points]
        for _ in range(15):
            d = rng.random() * 0.4 + 1e-3
            assert metgaps.kappa(c, d) == brute_components(cpts, d)


def test_merge_heights_exact_dim1():
    c = PointCloud.from_points([F(0), F(1, 10), F(1, 2), F(6, 10)])
    prof = metgaps.merge_heights(c)
    assert prof.exact
    assert prof.heights == (F(1, 10), F(2, 5))
    assert prof.counts == (2, 1)
    assert prof.kappa_at(F(1, 20)) == 4
    assert prof.kappa_at(F(1, 10)) == 2
    assert prof.kappa_at(F(1)) == 1
    assert prof.n_points == 4


def test_merge_heights_single_point():
    prof = metgaps.merge_heights(PointCloud.from_points([F(1, 2)]))
    assert prof.heights == () and prof.n_points == 1
    assert prof.kappa_at(F(1)) == 1


def test_kappa_identity_against_profile_exact():
    rng = random.Random(41)
    pts = sorted({F(rng.randint(0, 1000), 1000) for _ in range(200)})
    c = PointCloud.from_points(pts)
    prof = metgaps.merge_heights(c)
    for _ in range(80):
        d = F(rng.randint(1, 300), 1000)
        assert metgaps.kappa(c, d) == prof.kappa_at(d)


def test_kappa_identity_against_profile_float_dims():
    rng = random.Random(43)
    for dim in (1, 2, 3):
        pts = (
            [rng.random() for _ in range(150)]
            if dim == 1
            else [tuple(rng.random() for _ in range(dim)) for _ in range(150)]
        )
        c = PointCloud.from_points(pts)
        prof = metgaps.merge_heights(c)
        for _ in range(40):
            d = rng.random() * 0.5 + 1e-6
            assert metgaps.kappa(c, d) == prof.kappa_at(d)


def test_mst_dense_matches_kruskal_oracle():
    # independent MST oracle: Kruskal over the sorted full edge list
    rng = random.Random(47)
    pts = [tuple(rng.random() for _ in range(2)) for _ in range(80)]
    c = PointCloud.from_points(pts)
    cpts = [tuple(row) for row in c.points]
    n = len(cpts)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            d = sum((a - b) ** 2 for a, b in zip(cpts[i], cpts[j])) ** 0.5
            edges.append((d, i, j))
    edges.sort()
    from conftest import PlainUnionFind

    uf = PlainUnionFind(n)
    weights = []
    for d, i, j in edges:
        if uf.find(i) != uf.find(j):
            uf.union(i, j)
            weights.append(d)
    prof = metgaps.merge_heights(c, method="dense")
    # compare height sets with the profile's tie tolerance
    got = list(prof.heights)
    expected = sorted(set(weights))
    assert len(got) <= len(expected)
    k = 0
    for h in got:
        assert any(abs(h - w) <= 1e-9 * max(1.0, w) for w in expected)


def test_grid_equals_dense_random_clouds():
    rng = random.Random(53)
    for dim in (2, 3):
        for n in (50, 400, 1200):
            pts = [tuple(rng.random() for _ in range(dim)) for _ in range(n)]
            c = PointCloud.from_points(pts)
            dense = metgaps.merge_heights(c, method="dense")
            grid = metgaps.merge_heights(c, method="grid")
            assert dense.heights == grid.heights
            assert dense.counts == grid.counts


def test_grid_equals_dense_clustered_cloud():
    # clusters force many empty grid cells and wide ring expansion
    rng = random.Random(59)
    pts = []
    for cx, cy in ((0.0, 0.0), (100.0, 0.0), (50.0, 80.0)):
        pts.extend(
            (cx + rng.random(), cy + rng.random()) for _ in range(60)
        )
    c = PointCloud.from_points(pts)
    dense = metgaps.merge_heights(c, method="dense")
    grid = metgaps.merge_heights(c, method="grid")
    assert dense.heights == grid.heights
    assert dense.counts == grid.counts


def test_float_tie_grouping():
    c = PointCloud.from_points([0.0, 1.0, 2.0 + 1e-15])
    prof = metgaps.merge_heights(c)
    assert len(prof.heights) == 1
    assert prof.kappa_at(prof.heights[0]) == 1


def test_merge_heights_dim1_float_identical_to_dense():
    rng = random.Random(61)
    pts = [rng.random() * 10 for _ in range(500)]
    c = PointCloud.from_points(pts)
    auto = metgaps.merge_heights(c)
    dense = metgaps.merge_heights(c, method="dense")
    assert auto.heights == dense.heights
    assert auto.counts == dense.counts


def test_metric_gaps_report():
    c = PointCloud.from_points([F(0), F(1, 10), F(1, 2), F(6, 10)])
    rep = metgaps.metric_gaps(c, F(1, 20))
    assert rep.exact
    assert rep.values == (F(2, 5), F(1, 10))
    assert rep.warnings == ()
    assert rep.to_json()["values"] == ["2/5", "1/10"]
    with pytest.raises(ValueError):
        metgaps.metric_gaps(c, F(0))
    with pytest.raises(ValueError):
        metgaps.metric_gaps(c, F(-1, 2))


def test_metric_gaps_floor_filters():
    c = PointCloud.from_points([F(0), F(1, 10), F(1, 2), F(6, 10)])
    rep = metgaps.metric_gaps(c, F(1, 5))
    assert rep.values == (F(2, 5),)


def test_metric_gaps_resolution_warning():
    g = model.GDInstance.ifs(
        [model.Similarity1D(F(1, 3), 1, F(0)), model.Similarity1D(F(1, 3), 1, F(2, 3))]
    )
    cover = model.approximate(g, "u", 4)  # resolution 1/81
    c = PointCloud.from_cover(cover)
    noisy = metgaps.metric_gaps(c, F(1, 81))
    assert noisy.warnings != ()
    clean = metgaps.metric_gaps(c, F(1, 30))
    assert clean.warnings == ()


def test_kappa_profile_json():
    c = PointCloud.from_points([F(0), F(1, 4), F(1, 2)])
    prof = metgaps.merge_heights(c)
    doc = prof.to_json()
    assert doc["points"] == 3
    assert doc["heights"] == ["1/4"]
    assert doc["counts"] == [1]


def test_grid_pair_budget():
    pts = [tuple(np.random.RandomState(67).rand(2)) for _ in range(5)]
    c = PointCloud.from_points([(0.0, 0.0), (0.1, 0.0), (0.2, 0.0)])
    # tiny budget triggers the guard
    old = metgaps._PAIR_BUDGET
    try:
        metgaps._PAIR_BUDGET = 1
        with pytest.raises(model.ResourceError):
            metgaps.kappa(PointCloud.from_points([(i * 0.01, 0.0) for i in range(50)]), 1.0)
    finally:
        metgaps._PAIR_BUDGET = old
