import json
from itertools import product

import numpy as np
import pytest

from presence_od import check_feasible, solve_lp
from presence_od.geometry import (
    ZonePolygon,
    ZoneSet,
    cost_adjacency,
    cost_centroid,
    cost_nearest_corner,
    load_zones,
    nearest_corner_pair,
    parse_zones_geojson,
    parse_zones_text,
    perturb_costs,
)


def square(zid, x, y, side=1.0):
    return ZonePolygon(zid, [(x, y), (x + side, y), (x + side, y + side), (x, y + side)])


def grid(nx, ny):
    return ZoneSet(square(f"z{i}_{j}", i, j) for j, i in product(range(ny), range(nx)))


def test_polygon_validation():
    with pytest.raises(ValueError):
        ZonePolygon("a", [(0, 0), (1, 1)])
    with pytest.raises(ValueError):
        ZonePolygon("a", [(0, 0), (1, np.nan), (2, 0)])
    with pytest.raises(ValueError):
        ZoneSet([square("a", 0, 0), square("a", 5, 5)])


def test_adjacency_shared_vertex_triangles():
    zs = ZoneSet(
        [ZonePolygon("t1", [(0, 0), (1, 0), (0, 1)]), ZonePolygon("t2", [(1, 0), (2, 0), (2, 1)])]
    )
    assert cost_adjacency(zs).tolist() == [[0.0, 0.1], [0.1, 0.0]]


def test_adjacency_single_and_disjoint():
    assert cost_adjacency(ZoneSet([square("a", 0, 0)])).tolist() == [[0.0]]
    zs = ZoneSet([square("a", 0, 0), square("b", 10, 10)])
    assert cost_adjacency(zs).tolist() == [[0, 1], [1, 0]]


def test_adjacency_snap_tolerance():
    zs = ZoneSet([square("a", 0, 0), square("b", 1.0 + 1e-9, 0)])
    assert cost_adjacency(zs)[0, 1] == 1.0
    assert cost_adjacency(zs, snap=1e-6)[0, 1] == 0.1
    assert cost_adjacency(zs, adjacent_cost=0.0, snap=1e-6)[0, 1] == 0.0


def test_adjacency_grid_levels():
    c = cost_adjacency(grid(3, 3))
    assert set(np.unique(c).tolist()) <= {0.0, 0.1, 1.0}
    # center touches all 8 neighbours (diagonal neighbours share a corner)
    assert np.sum(c[4] == 0.1) == 8
    # corner zone touches 3
    assert np.sum(c[0] == 0.1) == 3


def test_centroid_distance():
    zs = ZoneSet([square("a", 0, 0), square("b", 3, 0)])
    assert cost_centroid(zs)[0, 1] == pytest.approx(3.0, abs=1e-15)


def test_centroid_is_corner_mean():
    # corner mean differs from the area centroid for this quadrilateral
    z = ZonePolygon("q", [(0, 0), (4, 0), (4, 1), (3, 1)])
    assert z.centroid().tolist() == [2.75, 0.5]


def test_centroid_translation_invariance():
    rng = np.random.default_rng(0)
    polys = [rng.random((5, 2)) * 10 for _ in range(6)]
    zs = ZoneSet(ZonePolygon(str(i), p) for i, p in enumerate(polys))
    shifted = ZoneSet(ZonePolygon(str(i), p + [123.5, -7.25]) for i, p in enumerate(polys))
    np.testing.assert_allclose(cost_centroid(zs), cost_centroid(shifted), atol=1e-12)


def test_nearest_corner_examples():
    zs = ZoneSet([square("a", 0, 0), square("b", 3, 0)])
    assert cost_nearest_corner(zs)[0, 1] == 2.0
    touching = ZoneSet([square("a", 0, 0), square("b", 1, 1)])
    assert cost_nearest_corner(touching)[0, 1] == 0.0


def test_nearest_corner_pair_tie_breaking():
    a, b = square("a", 0, 0), square("b", 3, 0)
    # corners (1,0)-(3,0) and (1,1)-(3,1) tie at distance 2
    assert nearest_corner_pair(a, b) == (1, 0, 2.0)


def test_nearest_corner_matches_pairwise_scan():
    rng = np.random.default_rng(4)
    zs = ZoneSet(ZonePolygon(str(i), rng.random((int(rng.integers(3, 7)), 2)) * 20) for i in range(7))
    c = cost_nearest_corner(zs)
    for i, zi in enumerate(zs):
        for j, zj in enumerate(zs):
            if i == j:
                continue
            best = min(np.hypot(*(p - q)) for p in zi.corners for q in zj.corners)
            assert c[i, j] == pytest.approx(best, abs=1e-12)
            assert c[i, j] == nearest_corner_pair(zi, zj)[2]


def _random_zones(seed, n=8):
    rng = np.random.default_rng(seed)
    base = grid(3, 3).zones[:n]
    # jitter some zones off the grid so not everything is adjacent
    return ZoneSet(
        ZonePolygon(z.zone_id, z.corners + (rng.random() * 5 if k % 3 == 0 else 0.0))
        for k, z in enumerate(base)
    )


@pytest.mark.parametrize("builder", [cost_adjacency, cost_centroid, cost_nearest_corner])
def test_costs_symmetric_zero_diag_nonneg(builder):
    for seed in range(5):
        c = builder(_random_zones(seed))
        assert np.array_equal(c, c.T)
        assert np.all(np.diagonal(c) == 0)
        assert np.all(c >= 0)


def test_nearest_corner_bounds_and_zero_iff_shared():
    for seed in range(5):
        zs = _random_zones(seed)
        near = cost_nearest_corner(zs)
        adj = cost_adjacency(zs)
        pts = [z.corners for z in zs]
        for i in range(len(zs)):
            for j in range(len(zs)):
                if i == j:
                    continue
                far = max(np.hypot(*(p - q)) for p in pts[i] for q in pts[j])
                assert near[i, j] <= far
                assert (near[i, j] == 0) == (adj[i, j] == 0.1)


def test_perturb_costs():
    c = cost_adjacency(grid(3, 2))
    p = perturb_costs(c, 1e-4, seed=7)
    assert np.all(p >= c) and np.all(p - c < 1e-4)
    assert np.array_equal(p, perturb_costs(c, 1e-4, seed=7))
    with pytest.raises(ValueError):
        perturb_costs(c, 0.0, seed=1)


def test_perturb_seeds_differ():
    c = np.zeros((4, 4))
    base = perturb_costs(c, 1e-4, seed=0)
    differing = sum(not np.array_equal(base, perturb_costs(c, 1e-4, seed=s)) for s in range(1, 101))
    assert differing == 100


def test_perturbed_optimum_within_slack():
    rng = np.random.default_rng(2)
    c = cost_adjacency(grid(3, 2))
    eps = 1e-4
    for s in range(5):
        g = rng.multinomial(200, np.ones(6) / 6)
        e = rng.multinomial(200, np.ones(6) / 6)
        m = check_feasible(g, e)
        _, base = solve_lp(m, c)
        _, pert = solve_lp(m, perturb_costs(c, eps, seed=s))
        assert base - 1e-9 <= pert <= base + eps * m.k


def test_parse_zones_text():
    text = """# id;x,y;...
A;0,0;1,0;1,1;0,1

B;1,0;2,0;2,1;1,1
"""
    zs = parse_zones_text(text.splitlines())
    assert zs.ids == ["A", "B"]
    assert cost_adjacency(zs)[0, 1] == 0.1
    with pytest.raises(ValueError, match="line 1"):
        parse_zones_text(["A;0,0;1,x;1,1"])
    with pytest.raises(ValueError, match="line 1"):
        parse_zones_text(["A;0,0;1,1"])


def test_parse_zones_geojson(tmp_path):
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"id": "A"},
                "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]]},
            },
            {
                "type": "Feature",
                "properties": {"id": "B"},
                "geometry": {"type": "Polygon", "coordinates": [[[3, 0], [4, 0], [4, 1], [3, 1], [3, 0]]]},
            },
        ],
    }
    zs = parse_zones_geojson(doc)
    assert zs.ids == ["A", "B"]
    assert len(zs.zones[0].corners) == 4
    assert cost_centroid(zs)[0, 1] == pytest.approx(3.0)
    path = tmp_path / "zones.geojson"
    path.write_text(json.dumps(doc))
    assert load_zones(path).ids == ["A", "B"]
    doc["features"][0]["properties"] = {}
    with pytest.raises(ValueError, match="missing"):
        parse_zones_geojson(doc)
