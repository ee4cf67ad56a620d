"""Project geographic coordinates into the metric plane and measure geometry.

Everything downstream of ingest works in projected meters (UTM 13N on
GRS80 by default), so distances and tolerances mean what they say.
"""

from flowline_risk.crs import GeoPoint, ProjectionParams, project, unproject
from flowline_risk.geometry import (
    Point2D,
    bbox_area,
    bounding_box,
    endpoint_set,
    line_count,
    multiline,
    multiline_length,
    point_to_multiline_distance,
)

params = ProjectionParams()
print("projection defaults:", params)

# The equator point on the central meridian lands exactly on the false easting.
print("\n(0 N, 105 W)  ->", project(GeoPoint(0.0, -105.0), params))
sample = GeoPoint(39.75, -105.0)
p = project(sample, params)
print("(39.75 N, 105 W) ->", p)
print("and back         ->", unproject(p, params))

# Round trip error stays far below the 25 m matching tolerance.
q = project(GeoPoint(40.0, -105.27), params)
r = project(unproject(q, params), params)
print(f"round-trip residue: {q.distance_to(r):.2e} m")

# A two-member multiline: a dogleg plus a short spur.
g = multiline(
    [(0.0, 0.0), (120.0, 10.0), (240.0, 0.0)],
    [(240.0, 0.0), (260.0, 35.0)],
)
print("\nlength      :", round(multiline_length(g), 3), "m")
print("members     :", line_count(g))
print("segments    :", line_count(g, count_segments=True))
print("bbox area   :", round(bbox_area(bounding_box(g)), 1), "m^2")
print("endpoints   :", [(round(p.x), round(p.y)) for p in endpoint_set(g)])
print("dist from (120, 60):", round(point_to_multiline_distance(Point2D(120.0, 60.0), g), 3), "m")
