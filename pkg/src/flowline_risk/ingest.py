"""Readers for the three input datasets and categorical normalization.

Parsing is total: every input row becomes either a typed record or a
row-level diagnostic, never a silent drop. Descriptive geometry travels as
GeoJSON MultiLineString features, the operational and spill datasets as
headed CSV.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
from dataclasses import dataclass, field

from .crs import GeoPoint, ProjectionParams, ZONE_HALF_WIDTH_DEG, project
from .geometry import MultiLine, Point2D, PolyLine

log = logging.getLogger(__name__)

OPERATIONAL_HEADER = [
    "row_id", "operator_number", "flowline_id", "location_id", "status",
    "flowline_action", "location_type", "fluid_type", "material",
    "diameter_in", "length_ft", "max_op_pressure", "construction_date",
    "operator_name", "start_lat", "start_lon", "end_lat", "end_lon",
]

SPILL_HEADER = ["spill_id", "operator_name", "lat", "lon", "root_cause_type", "report_date"]


class FileUnreadable(OSError):
    pass


class MissingColumn(ValueError):
    pass


class SchemaViolation(ValueError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class UnknownColumn(KeyError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    """One rejected row: which file, which row, why."""

    file: str
    row: int
    reason: str


@dataclass
class ParseResult:
    records: list
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return len(self.records)

    @property
    def rejected(self) -> int:
        return len(self.diagnostics)


@dataclass(frozen=True)
class DescriptiveFlowline:
    source_row_id: str
    operator_name: str
    geometry: MultiLine


@dataclass(frozen=True)
class OperationalFlowline:
    source_row_id: str
    operator_number: str
    flowline_id: str
    location_id: str
    status: str
    flowline_action: str
    location_type: str
    fluid_type: str
    material: str
    diameter_inches: float
    length_feet: float
    max_operating_pressure: float
    construction_date: datetime.date
    operator_name: str
    start: GeoPoint
    end: GeoPoint


@dataclass(frozen=True)
class SpillRecord:
    spill_id: str
    operator_name: str
    location: GeoPoint
    root_cause_type: str
    report_date: datetime.date


def normalize_operator(name: str) -> str:
    """Trim, collapse internal whitespace, casefold. Used for all operator equality."""
    return " ".join(name.split()).casefold()


class CategoryMap:
    """Column-wise raw-to-canonical mappings for messy categorical text.

    Patterns match case-insensitively after whitespace trimming, first match
    wins. Every canonical value maps to itself so normalization is
    idempotent; anything unmatched becomes "OTHER" with a logged warning.
    """

    def __init__(self, columns: dict[str, list[tuple[str, str]]]):
        self._patterns: dict[str, list[tuple[str, str]]] = {}
        for column, pairs in columns.items():
            seen_canonical = []
            compiled = []
            for raw, canonical in pairs:
                if canonical not in seen_canonical:
                    seen_canonical.append(canonical)
                    compiled.append((self._fold(canonical), canonical))
                compiled.append((self._fold(raw), canonical))
            self._patterns[column] = compiled

    @staticmethod
    def _fold(s: str) -> str:
        return s.strip().casefold()

    @property
    def columns(self) -> list[str]:
        return list(self._patterns)

    def normalize(self, raw: str, column: str) -> str:
        if column not in self._patterns:
            raise UnknownColumn(column)
        folded = self._fold(raw)
        for pattern, canonical in self._patterns[column]:
            if folded == pattern:
                return canonical
        log.warning("unmapped %s value %r, using OTHER", column, raw)
        return "OTHER"


def normalize_category(raw: str, column: str, category_map: CategoryMap) -> str:
    return category_map.normalize(raw, column)


def default_category_map() -> CategoryMap:
    """Fluid and material vocabularies with common misspellings folded in."""
    return CategoryMap({
        "fluid_type": [
            ("crude oil", "CRUDE_OIL"),
            ("crud oil", "CRUDE_OIL"),
            ("crude", "CRUDE_OIL"),
            ("multiphase", "MULTIPHASE"),
            ("multi-phase", "MULTIPHASE"),
            ("multi phase", "MULTIPHASE"),
            ("natural gas", "NATURAL_GAS"),
            ("nat gas", "NATURAL_GAS"),
            ("gas", "NATURAL_GAS"),
            ("other", "OTHER"),
            ("produced water", "PRODUCED_WATER"),
            ("produce water", "PRODUCED_WATER"),
            ("prod water", "PRODUCED_WATER"),
        ],
        "material": [
            ("carbon steel", "CARBON_STEEL"),
            ("carbonsteel", "CARBON_STEEL"),
            ("fiberglass", "FIBERGLASS"),
            ("fibreglass", "FIBERGLASS"),
            ("hdpe", "HDPE"),
            ("other", "OTHER"),
            ("pvc", "PVC"),
            ("steel", "STEEL"),
        ],
    })


def parse_descriptive(
    path,
    geographic: bool = False,
    params: ProjectionParams = ProjectionParams(),
) -> ParseResult:
    """Read a GeoJSON FeatureCollection of MultiLineString flowlines.

    With geographic=True the coordinates are (lon, lat) pairs and are
    projected on load; otherwise they are already metric (x, y).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileUnreadable(f"not valid JSON: {path}: {exc}") from exc

    if doc.get("type") != "FeatureCollection" or "features" not in doc:
        raise SchemaViolation(0, "expected a GeoJSON FeatureCollection")

    fname = str(path)
    records: list[DescriptiveFlowline] = []
    diagnostics: list[Diagnostic] = []
    for i, feature in enumerate(doc["features"]):
        try:
            records.append(_parse_feature(feature, i, geographic, params))
        except SchemaViolation as exc:
            diagnostics.append(Diagnostic(fname, i, exc.reason))
    return ParseResult(records, diagnostics)


def _parse_feature(feature, i, geographic, params) -> DescriptiveFlowline:
    if feature.get("type") != "Feature":
        raise SchemaViolation(i, "not a Feature")
    geom = feature.get("geometry") or {}
    if geom.get("type") != "MultiLineString":
        raise SchemaViolation(i, f"geometry type {geom.get('type')!r}, expected MultiLineString")
    props = feature.get("properties") or {}
    operator = str(props.get("operator_name", "")).strip()
    if not operator:
        raise SchemaViolation(i, "missing operator_name")
    row_id = str(feature.get("id", props.get("row_id", f"feature_{i}")))

    members = []
    for chain in geom.get("coordinates", []):
        if len(chain) < 2:
            raise SchemaViolation(i, "degenerate member")
        points = []
        for coord in chain:
            try:
                cx, cy = float(coord[0]), float(coord[1])
            except (TypeError, ValueError, IndexError):
                raise SchemaViolation(i, f"bad coordinate {coord!r}")
            if geographic:
                points.append(project(GeoPoint(cy, cx), params))
            else:
                points.append(Point2D(cx, cy))
        members.append(PolyLine(tuple(points)))
    if not members:
        raise SchemaViolation(i, "empty MultiLineString")
    return DescriptiveFlowline(row_id, operator, MultiLine(tuple(members)))


def _read_csv(path, expected_header: list[str]):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaViolation(0, "empty file")
        missing = [c for c in expected_header if c not in header]
        if missing:
            raise MissingColumn(missing[0])
        if header != expected_header:
            raise SchemaViolation(0, f"header must be exactly {','.join(expected_header)}")
        yield from enumerate(reader, start=1)


def _parse_date(raw: str, field_name: str, row: int, reference_date: datetime.date) -> datetime.date:
    raw = raw.strip()
    if not raw:
        raise SchemaViolation(row, f"missing {field_name}")
    try:
        value = datetime.date.fromisoformat(raw)
    except ValueError:
        raise SchemaViolation(row, f"bad {field_name} {raw!r}, want YYYY-MM-DD")
    if value > reference_date:
        raise SchemaViolation(row, f"{field_name} {raw} is in the future")
    return value


def _parse_number(raw: str, field_name: str, row: int, minimum: float, strict: bool) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise SchemaViolation(row, f"bad {field_name} {raw!r}")
    if not (value > minimum if strict else value >= minimum):
        op = ">" if strict else ">="
        raise SchemaViolation(row, f"{field_name} must be {op} {minimum}, got {raw}")
    return value


def _parse_geopoint(lat_raw: str, lon_raw: str, label: str, row: int, params: ProjectionParams) -> GeoPoint:
    try:
        lat, lon = float(lat_raw), float(lon_raw)
    except ValueError:
        raise SchemaViolation(row, f"bad {label} coordinates ({lat_raw!r}, {lon_raw!r})")
    try:
        point = GeoPoint(lat, lon)
    except ValueError as exc:
        raise SchemaViolation(row, f"{label}: {exc}")
    if abs(lon - params.central_meridian) >= ZONE_HALF_WIDTH_DEG:
        raise SchemaViolation(row, f"{label} longitude {lon} outside the projection window")
    return point


def parse_operational(
    path,
    category_map: CategoryMap | None = None,
    params: ProjectionParams = ProjectionParams(),
    reference_date: datetime.date | None = None,
) -> ParseResult:
    """Read the operational flowline CSV into typed, normalized records."""
    cmap = category_map if category_map is not None else default_category_map()
    today = reference_date or datetime.date.today()
    records: list[OperationalFlowline] = []
    diagnostics: list[Diagnostic] = []
    fname = str(path)
    for row_num, row in _read_csv(path, OPERATIONAL_HEADER):
        try:
            if len(row) != len(OPERATIONAL_HEADER):
                raise SchemaViolation(row_num, f"expected {len(OPERATIONAL_HEADER)} fields, got {len(row)}")
            r = dict(zip(OPERATIONAL_HEADER, row))
            operator_name = r["operator_name"].strip()
            if not operator_name:
                raise SchemaViolation(row_num, "missing operator_name")
            records.append(OperationalFlowline(
                source_row_id=r["row_id"].strip(),
                operator_number=r["operator_number"].strip(),
                flowline_id=r["flowline_id"].strip(),
                location_id=r["location_id"].strip(),
                status=r["status"].strip().upper(),
                flowline_action=r["flowline_action"].strip().upper(),
                location_type=r["location_type"].strip().upper(),
                fluid_type=cmap.normalize(r["fluid_type"], "fluid_type"),
                material=cmap.normalize(r["material"], "material"),
                diameter_inches=_parse_number(r["diameter_in"], "diameter_in", row_num, 0.0, strict=True),
                length_feet=_parse_number(r["length_ft"], "length_ft", row_num, 0.0, strict=False),
                max_operating_pressure=_parse_number(r["max_op_pressure"], "max_op_pressure", row_num, 0.0, strict=False),
                construction_date=_parse_date(r["construction_date"], "construction_date", row_num, today),
                operator_name=operator_name,
                start=_parse_geopoint(r["start_lat"], r["start_lon"], "start", row_num, params),
                end=_parse_geopoint(r["end_lat"], r["end_lon"], "end", row_num, params),
            ))
        except SchemaViolation as exc:
            diagnostics.append(Diagnostic(fname, row_num, exc.reason))
    return ParseResult(records, diagnostics)


def parse_spills(
    path,
    params: ProjectionParams = ProjectionParams(),
    reference_date: datetime.date | None = None,
) -> ParseResult:
    """Read the spill CSV into typed records."""
    today = reference_date or datetime.date.today()
    records: list[SpillRecord] = []
    diagnostics: list[Diagnostic] = []
    fname = str(path)
    for row_num, row in _read_csv(path, SPILL_HEADER):
        try:
            if len(row) != len(SPILL_HEADER):
                raise SchemaViolation(row_num, f"expected {len(SPILL_HEADER)} fields, got {len(row)}")
            r = dict(zip(SPILL_HEADER, row))
            operator_name = r["operator_name"].strip()
            if not operator_name:
                raise SchemaViolation(row_num, "missing operator_name")
            records.append(SpillRecord(
                spill_id=r["spill_id"].strip(),
                operator_name=operator_name,
                location=_parse_geopoint(r["lat"], r["lon"], "spill", row_num, params),
                root_cause_type=r["root_cause_type"].strip().upper(),
                report_date=_parse_date(r["report_date"], "report_date", row_num, today),
            ))
        except SchemaViolation as exc:
            diagnostics.append(Diagnostic(fname, row_num, exc.reason))
    return ParseResult(records, diagnostics)


def write_diagnostics(path, diagnostics: list[Diagnostic]) -> None:
    """Quarantine rejected rows to a sidecar CSV instead of aborting the run."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "row", "reason"])
        for d in diagnostics:
            writer.writerow([d.file, d.row, d.reason])
