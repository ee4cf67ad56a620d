"""Spatial joins: operational-to-descriptive merging and spill attribution.

Both searches walk an ascending tolerance ladder and bind at the smallest
radius that yields a candidate whose normalized operator name agrees. An
operator mismatch never consumes a match; the search simply continues, at
this step and then at wider ones. Records that survive no step up to the
ladder maximum are excluded, which is a result, not an error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

from .crs import ProjectionParams, project
from .geometry import (
    BoundingBox,
    MultiLine,
    Point2D,
    PolyLine,
    bounding_box,
    endpoint_set,
    point_to_multiline_distance,
)
from .ingest import DescriptiveFlowline, OperationalFlowline, SpillRecord, normalize_operator
from .spatial_index import IndexEntry, SpatialIndex

DEFAULT_LADDER_STEPS = (0.0, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0)


class DegenerateLine(ValueError):
    """Operational endpoints coincide after projection."""


class DanglingReference(KeyError):
    """An attribution points at a flowline id that is not in the merge output."""


@dataclass(frozen=True)
class ToleranceLadder:
    """Ascending match radii in meters; the last step is the maximum."""

    steps: tuple[float, ...] = DEFAULT_LADDER_STEPS

    def __post_init__(self):
        if not self.steps:
            raise ValueError("ladder needs at least one step")
        if self.steps[0] < 0:
            raise ValueError("first ladder step must be >= 0")
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ValueError("ladder steps must be strictly ascending")

    @property
    def maximum(self) -> float:
        return self.steps[-1]

    @staticmethod
    def parse(text: str) -> "ToleranceLadder":
        return ToleranceLadder(tuple(float(tok) for tok in text.split(",") if tok.strip()))


@dataclass(frozen=True)
class MergedFlowline:
    """Operational attributes bound to descriptive geometry, plus match audit."""

    operational: OperationalFlowline
    descriptive_id: str
    geometry: MultiLine
    operator_name: str
    match_tolerance: float
    endpoint_distances: tuple[float, float]
    risk: int = 0

    @property
    def flowline_id(self) -> str:
        return self.operational.source_row_id


@dataclass(frozen=True)
class SpillAttribution:
    spill_id: str
    matched_flowline_id: str | None
    distance: float
    tolerance_used: float

    @property
    def matched(self) -> bool:
        return self.matched_flowline_id is not None


@dataclass(frozen=True)
class AuditRecord:
    """One row of the merge audit trail."""

    record_id: str
    step_reached: float
    n_candidates: int
    chosen_id: str | None
    d_start: float
    d_end: float


def interpolate_line(
    rec: OperationalFlowline, params: ProjectionParams = ProjectionParams()
) -> PolyLine:
    """Straight two-vertex polyline between the projected endpoints."""
    start = project(rec.start, params)
    end = project(rec.end, params)
    if start.distance_to(end) < 1e-6:
        raise DegenerateLine(
            f"record {rec.source_row_id}: projected endpoints coincide within 1e-6 m"
        )
    return PolyLine((start, end))


def _endpoint_index(descriptive: list[DescriptiveFlowline]) -> SpatialIndex:
    # One degenerate box per endpoint-set point; item_id is the record index.
    entries = []
    for i, rec in enumerate(descriptive):
        for p in endpoint_set(rec.geometry):
            entries.append(IndexEntry(i, BoundingBox(p.x, p.y, p.x, p.y)))
    return SpatialIndex.build(entries)


def _geometry_index(items: list[MultiLine]) -> SpatialIndex:
    return SpatialIndex.build(
        [IndexEntry(i, bounding_box(g)) for i, g in enumerate(items)]
    )


def _min_endpoint_distance(p: Point2D, g: MultiLine) -> float:
    return min(p.distance_to(q) for q in endpoint_set(g))


def match_flowlines(
    operational: list[OperationalFlowline],
    descriptive: list[DescriptiveFlowline],
    ladder: ToleranceLadder = ToleranceLadder(),
    params: ProjectionParams = ProjectionParams(),
    whole_geometry: bool = False,
) -> tuple[list[MergedFlowline], list[str], list[AuditRecord]]:
    """Merge operational attributes onto descriptive geometry.

    A descriptive line is a candidate at step t when it has a point within
    t of the operational start and a point within t of the operational end;
    by default "point" means the descriptive endpoint set, with
    whole_geometry=True any point of the geometry. Candidates whose
    normalized operator differs are discarded and the search continues.
    Among survivors at the first non-empty step the minimal d_start + d_end
    wins, ties to the smaller descriptive row id.

    Returns (merged records in input order, unmatched operational ids,
    audit trail).
    """
    index = _geometry_index([d.geometry for d in descriptive]) if whole_geometry \
        else _endpoint_index(descriptive)
    desc_ops = [normalize_operator(d.operator_name) for d in descriptive]
    distance_fn = point_to_multiline_distance if whole_geometry else _min_endpoint_distance

    merged: list[MergedFlowline] = []
    unmatched: list[str] = []
    audit: list[AuditRecord] = []

    for rec in operational:
        try:
            chord = interpolate_line(rec, params)
        except DegenerateLine:
            unmatched.append(rec.source_row_id)
            audit.append(AuditRecord(rec.source_row_id, ladder.maximum, 0, None, math.nan, math.nan))
            continue
        start, end = chord.vertices
        op_norm = normalize_operator(rec.operator_name)

        hit = None
        n_candidates = 0
        step_reached = ladder.maximum
        for t in ladder.steps:
            ids = index.query_radius(start, t) & index.query_radius(end, t)
            candidates = []
            for i in sorted(ids, key=lambda i: descriptive[i].source_row_id):
                d_start = distance_fn(start, descriptive[i].geometry)
                d_end = distance_fn(end, descriptive[i].geometry)
                if d_start <= t and d_end <= t:
                    candidates.append((i, d_start, d_end))
            step_reached = t
            n_candidates = len(candidates)
            survivors = [c for c in candidates if desc_ops[c[0]] == op_norm]
            if survivors:
                hit = min(survivors, key=lambda c: (c[1] + c[2], descriptive[c[0]].source_row_id))
                break

        if hit is None:
            unmatched.append(rec.source_row_id)
            audit.append(AuditRecord(rec.source_row_id, step_reached, n_candidates, None, math.nan, math.nan))
        else:
            i, d_start, d_end = hit
            desc = descriptive[i]
            merged.append(MergedFlowline(
                operational=rec,
                descriptive_id=desc.source_row_id,
                geometry=desc.geometry,
                operator_name=desc.operator_name,
                match_tolerance=step_reached,
                endpoint_distances=(d_start, d_end),
            ))
            audit.append(AuditRecord(rec.source_row_id, step_reached, n_candidates, desc.source_row_id, d_start, d_end))

    return merged, unmatched, audit


def match_spills(
    spills: list[SpillRecord],
    merged: list[MergedFlowline],
    ladder: ToleranceLadder = ToleranceLadder(),
    params: ProjectionParams = ProjectionParams(),
) -> list[SpillAttribution]:
    """Attribute each spill to the nearest operator-verified merged flowline.

    Distance is point-to-geometry: a spill can surface anywhere along a
    line, not just at its ends. No survivor up to the ladder maximum means
    the spill stays unattributed.
    """
    index = _geometry_index([m.geometry for m in merged])
    merged_ops = [normalize_operator(m.operator_name) for m in merged]

    attributions: list[SpillAttribution] = []
    for spill in spills:
        p = project(spill.location, params)
        spill_op = normalize_operator(spill.operator_name)
        hit = None
        for t in ladder.steps:
            candidates = []
            for i in sorted(index.query_radius(p, t), key=lambda i: merged[i].flowline_id):
                if merged_ops[i] != spill_op:
                    continue
                d = point_to_multiline_distance(p, merged[i].geometry)
                if d <= t:
                    candidates.append((i, d))
            if candidates:
                hit = min(candidates, key=lambda c: (c[1], merged[c[0]].flowline_id))
                break
        if hit is None:
            attributions.append(SpillAttribution(spill.spill_id, None, math.nan, ladder.maximum))
        else:
            i, d = hit
            attributions.append(SpillAttribution(spill.spill_id, merged[i].flowline_id, d, t))
    return attributions


def assign_risk(
    merged: list[MergedFlowline], attributions: list[SpillAttribution]
) -> list[MergedFlowline]:
    """Risk 1 for every flowline named by at least one attribution, else 0."""
    known = {m.flowline_id for m in merged}
    hit_ids = set()
    for a in attributions:
        if a.matched_flowline_id is None:
            continue
        if a.matched_flowline_id not in known:
            raise DanglingReference(a.matched_flowline_id)
        hit_ids.add(a.matched_flowline_id)
    return [replace(m, risk=1 if m.flowline_id in hit_ids else 0) for m in merged]


def write_audit_log(path, audit: list[AuditRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "step_reached", "n_candidates", "chosen_id", "d_start", "d_end"])
        for a in audit:
            writer.writerow([
                a.record_id,
                f"{a.step_reached:g}",
                a.n_candidates,
                a.chosen_id or "",
                "" if math.isnan(a.d_start) else f"{a.d_start:.6f}",
                "" if math.isnan(a.d_end) else f"{a.d_end:.6f}",
            ])
