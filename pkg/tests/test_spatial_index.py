import numpy as np
import pytest

from flowline_risk.geometry import BoundingBox, Point2D
from flowline_risk.spatial_index import IndexEntry, SpatialIndex


def random_entries(rng, n, extent=1000.0, max_side=20.0):
    entries = []
    for i in range(n):
        x, y = rng.uniform(0, extent, size=2)
        w, h = rng.uniform(0, max_side, size=2)
        entries.append(IndexEntry(i, BoundingBox(x, y, x + w, y + h)))
    return entries


def scan_radius(entries, p, r):
    """Brute-force oracle with the same closed-square semantics."""
    box = BoundingBox(p.x - r, p.y - r, p.x + r, p.y + r)
    return {e.item_id for e in entries if e.box.intersects(box)}


class TestBuild:
    def test_empty_index(self):
        idx = SpatialIndex.build([])
        assert len(idx) == 0
        assert idx.query_radius(Point2D(0, 0), 1e9) == set()

    def test_single_entry(self):
        idx = SpatialIndex.build([IndexEntry("a", BoundingBox(0, 0, 1, 1))])
        assert idx.query_radius(Point2D(0.5, 0.5), 0.0) == {"a"}
        assert idx.query_radius(Point2D(5, 5), 1.0) == set()

    def test_self_query_completeness(self):
        rng = np.random.default_rng(31)
        entries = random_entries(rng, 1000)
        idx = SpatialIndex.build(entries)
        for e in entries:
            center = Point2D((e.box.min_x + e.box.max_x) / 2, (e.box.min_y + e.box.max_y) / 2)
            r = max(e.box.max_x - e.box.min_x, e.box.max_y - e.box.min_y)
            assert e.item_id in idx.query_radius(center, r)

    def test_bad_fanout(self):
        with pytest.raises(ValueError):
            SpatialIndex.build([], fanout=1)

    def test_height_bound(self):
        import math

        def height(node):
            if node.entries is not None:
                return 1
            return 1 + max(height(c) for c in node.children)

        rng = np.random.default_rng(36)
        for n in (1, 15, 16, 17, 255, 1000):
            idx = SpatialIndex.build(random_entries(rng, n), fanout=16)
            bound = math.ceil(math.log(n, 16)) + 1 if n > 1 else 1
            assert height(idx._root) <= bound


class TestQueryRadius:
    def test_zero_radius_point_in_box(self):
        entries = [IndexEntry("hit", BoundingBox(0, 0, 2, 2)),
                   IndexEntry("miss", BoundingBox(5, 5, 6, 6))]
        idx = SpatialIndex.build(entries)
        assert idx.query_radius(Point2D(1, 1), 0.0) == {"hit"}

    def test_boundary_is_closed(self):
        idx = SpatialIndex.build([IndexEntry("edge", BoundingBox(10, 0, 12, 2))])
        # query square touches the box edge exactly at distance r
        assert idx.query_radius(Point2D(8, 1), 2.0) == {"edge"}
        assert idx.query_radius(Point2D(8, 1), 1.999999) == set()

    def test_negative_radius_rejected(self):
        idx = SpatialIndex.build([])
        with pytest.raises(ValueError):
            idx.query_radius(Point2D(0, 0), -1.0)

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(32)
        entries = random_entries(rng, 1000)
        idx = SpatialIndex.build(entries)
        for _ in range(200):
            p = Point2D(rng.uniform(-50, 1050), rng.uniform(-50, 1050))
            r = rng.uniform(0, 60)
            assert idx.query_radius(p, r) == scan_radius(entries, p, r)

    def test_radius_monotonicity(self):
        rng = np.random.default_rng(33)
        entries = random_entries(rng, 300)
        idx = SpatialIndex.build(entries)
        for _ in range(50):
            p = Point2D(rng.uniform(0, 1000), rng.uniform(0, 1000))
            r1, r2 = sorted(rng.uniform(0, 80, size=2))
            assert idx.query_radius(p, r1) <= idx.query_radius(p, r2)

    def test_build_determinism(self):
        rng = np.random.default_rng(34)
        entries = random_entries(rng, 500)
        a = SpatialIndex.build(entries)
        b = SpatialIndex.build(list(entries))
        qrng = np.random.default_rng(35)
        for _ in range(50):
            p = Point2D(qrng.uniform(0, 1000), qrng.uniform(0, 1000))
            r = qrng.uniform(0, 100)
            assert a.query_radius(p, r) == b.query_radius(p, r)

    def test_degenerate_point_boxes(self):
        entries = [IndexEntry(i, BoundingBox(float(i), 0.0, float(i), 0.0)) for i in range(100)]
        idx = SpatialIndex.build(entries)
        assert idx.query_radius(Point2D(50.0, 0.0), 2.5) == {48, 49, 50, 51, 52}
