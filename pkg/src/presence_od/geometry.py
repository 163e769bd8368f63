"""Cost matrices from zone polygons.

Coordinates are planar and must be projected by the caller; no geodesic
correction is applied. Zone order in a :class:`ZoneSet` fixes row/column
order of every matrix built from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

ADJACENT_COST = 0.1


@dataclass(frozen=True, eq=False)
class ZonePolygon:
    zone_id: str
    corners: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.corners, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"zone {self.zone_id!r}: corners must be (x, y) pairs")
        if pts.shape[0] < 3:
            raise ValueError(f"zone {self.zone_id!r}: need at least 3 corners, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"zone {self.zone_id!r}: non-finite coordinate")
        pts.flags.writeable = False
        object.__setattr__(self, "corners", pts)

    def centroid(self) -> np.ndarray:
        """Arithmetic mean of the corner points (not the area centroid)."""
        return self.corners.mean(axis=0)


class ZoneSet:
    """Ordered collection of zones with unique ids."""

    def __init__(self, zones):
        self.zones = list(zones)
        ids = [z.zone_id for z in self.zones]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate zone ids: {dup}")
        self._index = {zid: k for k, zid in enumerate(ids)}

    def __len__(self):
        return len(self.zones)

    def __iter__(self):
        return iter(self.zones)

    @property
    def ids(self) -> list[str]:
        return [z.zone_id for z in self.zones]

    def index(self, zone_id: str) -> int:
        return self._index[zone_id]

    def __contains__(self, zone_id) -> bool:
        return zone_id in self._index


def cost_adjacency(zs: ZoneSet, adjacent_cost: float = ADJACENT_COST, snap: float = 0.0) -> np.ndarray:
    """0 on the diagonal, ``adjacent_cost`` for zones sharing a corner, 1 otherwise.

    Corners are compared exactly unless ``snap > 0``, in which case points
    within Euclidean distance ``snap`` count as shared.
    """
    n = len(zs)
    c = np.ones((n, n))
    pts = np.concatenate([z.corners for z in zs])
    owner = np.repeat(np.arange(n), [len(z.corners) for z in zs])
    if snap > 0:
        pairs = cKDTree(pts).query_pairs(snap, output_type="ndarray")
        a, b = owner[pairs[:, 0]], owner[pairs[:, 1]]
    else:
        by_point: dict[tuple[float, float], set[int]] = {}
        for (x, y), k in zip(pts.tolist(), owner.tolist()):
            by_point.setdefault((x, y), set()).add(k)
        a_list, b_list = [], []
        for members in by_point.values():
            if len(members) > 1:
                m = sorted(members)
                for s in range(len(m)):
                    for t in range(s + 1, len(m)):
                        a_list.append(m[s])
                        b_list.append(m[t])
        a, b = np.array(a_list, dtype=int), np.array(b_list, dtype=int)
    c[a, b] = adjacent_cost
    c[b, a] = adjacent_cost
    np.fill_diagonal(c, 0.0)
    return c


def cost_centroid(zs: ZoneSet) -> np.ndarray:
    """Euclidean distance between corner-mean centroids."""
    cents = np.array([z.centroid() for z in zs])
    c = cdist(cents, cents)
    np.fill_diagonal(c, 0.0)
    return c


def nearest_corner_pair(a: ZonePolygon, b: ZonePolygon) -> tuple[int, int, float]:
    """Indices of the closest corner pair between two zones and their distance.

    Ties go to the lowest corner index of ``a``, then of ``b``.
    """
    d = cdist(a.corners, b.corners)
    flat = int(np.argmin(d))
    i, j = divmod(flat, d.shape[1])
    return i, j, float(d[i, j])


def cost_nearest_corner(zs: ZoneSet) -> np.ndarray:
    """Distance between the closest pair of corners of each two zones."""
    n = len(zs)
    pts = np.concatenate([z.corners for z in zs])
    starts = np.cumsum([0] + [len(z.corners) for z in zs])[:-1]
    c = np.zeros((n, n))
    for i, z in enumerate(zs):
        d = cdist(z.corners, pts).min(axis=0)
        c[i] = np.minimum.reduceat(d, starts)
    # each pair is computed from both sides; keep them bit-identical
    c = np.minimum(c, c.T)
    np.fill_diagonal(c, 0.0)
    return c


def perturb_costs(c, epsilon: float, seed: int) -> np.ndarray:
    """Add i.i.d. U[0, epsilon) noise to every entry, reproducibly per seed."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(c, dtype=float)
    rng = np.random.default_rng(seed)
    return c + rng.uniform(0.0, epsilon, size=c.shape)


COST_KINDS = {
    "adjacency": cost_adjacency,
    "centroid": cost_centroid,
    "nearest": cost_nearest_corner,
}


def build_cost(zs: ZoneSet, kind: str, **kw) -> np.ndarray:
    try:
        fn = COST_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown cost kind {kind!r}; choose from {sorted(COST_KINDS)}") from None
    return fn(zs, **kw)


# readers


def parse_zones_text(lines) -> ZoneSet:
    """Parse ``zone_id;x1,y1;x2,y2;...`` lines. Blank lines and ``#`` comments are skipped."""
    zones = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        zid = parts[0].strip()
        if not zid:
            raise ValueError(f"line {lineno}: empty zone id")
        try:
            corners = [tuple(float(v) for v in p.split(",")) for p in parts[1:] if p.strip()]
        except ValueError:
            raise ValueError(f"line {lineno}: bad coordinate in {line!r}") from None
        if any(len(pt) != 2 for pt in corners):
            raise ValueError(f"line {lineno}: corners must be x,y pairs")
        try:
            zones.append(ZonePolygon(zid, np.array(corners)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ZoneSet(zones)


def parse_zones_geojson(doc, id_property: str = "id") -> ZoneSet:
    """Read one Polygon feature per zone from a GeoJSON FeatureCollection.

    Only the outer ring is used; its closing point (equal to the first) is
    dropped so corners are not double-counted in centroids.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    zones = []
    for k, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        zid = props.get(id_property, feat.get("id"))
        if zid is None:
            raise ValueError(f"feature {k}: missing {id_property!r} property")
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ValueError(f"feature {k} ({zid}): expected Polygon, got {geom.get('type')}")
        ring = np.asarray(geom["coordinates"][0], dtype=float)[:, :2]
        if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
            ring = ring[:-1]
        zones.append(ZonePolygon(str(zid), ring))
    return ZoneSet(zones)


def load_zones(path) -> ZoneSet:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".json", ".geojson"):
        return parse_zones_geojson(text)
    return parse_zones_text(text.splitlines())
