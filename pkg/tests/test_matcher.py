import math

import pytest

from flowline_risk.crs import GeoPoint, unproject
from flowline_risk.geometry import Point2D, multiline
from flowline_risk.ingest import DescriptiveFlowline, SpillRecord
from flowline_risk.matcher import (
    DanglingReference,
    DegenerateLine,
    MergedFlowline,
    SpillAttribution,
    ToleranceLadder,
    assign_risk,
    interpolate_line,
    match_flowlines,
    match_spills,
    write_audit_log,
)
from flowline_risk.synth import REFERENCE_DATE

from conftest import make_operational

BASE = Point2D(500000.0, 4320000.0)


def geo(dx: float, dy: float) -> GeoPoint:
    return unproject(Point2D(BASE.x + dx, BASE.y + dy))


def operational(row_id, dx0, dy0, dx1, dy1, operator="Acme Energy LLC"):
    a, b = geo(dx0, dy0), geo(dx1, dy1)
    return make_operational(row_id=row_id, lat=a.latitude, lon=a.longitude,
                            lat2=b.latitude, lon2=b.longitude, operator=operator)


def descriptive(row_id, coords, operator="Acme Energy LLC"):
    chains = [[(BASE.x + dx, BASE.y + dy) for dx, dy in chain] for chain in coords]
    return DescriptiveFlowline(row_id, operator, multiline(*chains))


def spill(spill_id, dx, dy, operator="Acme Energy LLC"):
    g = geo(dx, dy)
    return SpillRecord(spill_id, operator, g, "CORROSION", REFERENCE_DATE)


class TestToleranceLadder:
    def test_default_ladder(self):
        ladder = ToleranceLadder()
        assert ladder.steps[0] == 0.0
        assert ladder.maximum == 25.0

    def test_must_ascend(self):
        with pytest.raises(ValueError):
            ToleranceLadder((0.0, 5.0, 5.0))
        with pytest.raises(ValueError):
            ToleranceLadder((-1.0, 5.0))

    def test_parse(self):
        assert ToleranceLadder.parse("0,1,2,5").steps == (0.0, 1.0, 2.0, 5.0)


class TestInterpolate:
    def test_straight_chord(self):
        rec = operational("OP1", 0.0, 0.0, 100.0, 0.0)
        chord = interpolate_line(rec)
        assert chord.length() == pytest.approx(100.0, abs=1e-5)

    def test_degenerate(self):
        rec = make_operational(lat=39.0, lon=-105.0, lat2=39.0, lon2=-105.0)
        with pytest.raises(DegenerateLine):
            interpolate_line(rec)

    def test_generator_projected_pair(self, synth_a):
        truth = synth_a.truth
        for rec in synth_a.operational[:100]:
            chord = interpolate_line(rec)
            want_start, want_end = truth.projected_endpoints[rec.source_row_id]
            assert chord.vertices[0].distance_to(want_start) < 1e-6
            assert chord.vertices[1].distance_to(want_end) < 1e-6


class TestMatchFlowlines:
    def test_exact_coincidence_binds_at_step_zero(self):
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0)]
        desc = [descriptive("D1", [[(0.0, 0.0), (100.0, 0.0)]])]
        # exact same geographic text on both sides: regenerate descriptive
        # from the operational record's projected endpoints
        chord = interpolate_line(ops[0])
        desc = [DescriptiveFlowline("D1", "Acme Energy LLC", multiline(
            [(chord.vertices[0].x, chord.vertices[0].y),
             (chord.vertices[1].x, chord.vertices[1].y)]))]
        merged, unmatched, audit = match_flowlines(ops, desc)
        assert len(merged) == 1 and not unmatched
        assert merged[0].match_tolerance == 0.0
        assert merged[0].endpoint_distances == (0.0, 0.0)

    def test_operator_mismatch_excludes_sole_candidate(self):
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0)]
        desc = [descriptive("D1", [[(3.0, 0.0), (103.0, 0.0)]], operator="Rival Oil Co")]
        merged, unmatched, audit = match_flowlines(ops, desc)
        assert merged == []
        assert unmatched == ["OP1"]
        assert audit[0].chosen_id is None
        assert audit[0].step_reached == 25.0

    def test_search_continues_past_nearer_wrong_operator(self):
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0)]
        desc = [
            descriptive("D1", [[(0.0, 3.0), (100.0, 3.0)]], operator="Rival Oil Co"),
            descriptive("D2", [[(0.0, 10.0), (100.0, 10.0)]]),
        ]
        merged, unmatched, _ = match_flowlines(ops, desc)
        assert len(merged) == 1
        assert merged[0].descriptive_id == "D2"
        assert merged[0].match_tolerance == 10.0

    def test_min_summed_distance_wins_then_row_id(self):
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0)]
        desc = [
            descriptive("D2", [[(0.0, 4.0), (100.0, 4.0)]]),
            descriptive("D1", [[(0.0, 2.0), (100.0, 2.0)]]),
        ]
        merged, _, _ = match_flowlines(ops, desc)
        assert merged[0].descriptive_id == "D1"

        # exact tie on summed distance: smaller row id wins
        desc_tie = [
            descriptive("D9", [[(0.0, 2.0), (100.0, 2.0)]]),
            descriptive("D3", [[(0.0, -2.0), (100.0, -2.0)]]),
        ]
        merged, _, _ = match_flowlines(ops, desc_tie)
        assert merged[0].descriptive_id == "D3"

    def test_endpoint_semantics_ignores_interior(self):
        # descriptive endpoints far away; only its interior passes nearby
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0)]
        desc = [descriptive("D1", [[(-500.0, 5.0), (50.0, 5.0), (600.0, 5.0)]])]
        merged, unmatched, _ = match_flowlines(ops, desc)
        assert unmatched == ["OP1"]

        merged, unmatched, _ = match_flowlines(ops, desc, whole_geometry=True)
        assert len(merged) == 1  # the flag switches to whole-geometry distance

    def test_one_to_many_is_allowed(self):
        ops = [operational("OP1", 0.0, 0.0, 100.0, 0.0),
               operational("OP2", 1.0, 1.0, 101.0, 1.0)]
        desc = [descriptive("D1", [[(0.0, 0.0), (100.0, 0.0)]])]
        merged, unmatched, _ = match_flowlines(ops, desc)
        assert len(merged) == 2 and not unmatched

    def test_invariants_on_config_a(self, synth_a):
        merged, unmatched, audit = match_flowlines(synth_a.operational, synth_a.descriptive)
        assert len(audit) == len(synth_a.operational)
        for m in merged:
            d_start, d_end = m.endpoint_distances
            assert d_start <= m.match_tolerance and d_end <= m.match_tolerance
        ops = {d.source_row_id: d.operator_name for d in synth_a.descriptive}
        from flowline_risk.ingest import normalize_operator
        for m in merged:
            assert normalize_operator(m.operational.operator_name) == \
                normalize_operator(ops[m.descriptive_id])

    def test_ladder_extension_monotonicity(self, synth_b):
        short = ToleranceLadder((0.0, 1.0, 2.0, 5.0, 10.0))
        extended = ToleranceLadder((0.0, 1.0, 2.0, 5.0, 10.0, 15.0, 25.0))
        ops = synth_b.operational[:300]
        merged_short, _, _ = match_flowlines(ops, synth_b.descriptive, short)
        merged_ext, _, _ = match_flowlines(ops, synth_b.descriptive, extended)
        chosen_short = {m.operational.source_row_id: m.descriptive_id for m in merged_short}
        chosen_ext = {m.operational.source_row_id: m.descriptive_id for m in merged_ext}
        for op_id, desc_id in chosen_short.items():
            assert chosen_ext[op_id] == desc_id  # never unmatched, never changed

    def test_determinism(self, synth_b):
        ops = synth_b.operational[:200]
        a = match_flowlines(ops, synth_b.descriptive)
        b = match_flowlines(ops, synth_b.descriptive)
        assert [m.descriptive_id for m in a[0]] == [m.descriptive_id for m in b[0]]
        assert a[1] == b[1]
        assert a[2] == b[2]


class TestMatchSpills:
    def _merged(self, desc, op_row="OP1"):
        ops = [operational(op_row, 0.0, 0.0, 100.0, 0.0, operator=desc.operator_name)]
        merged, _, _ = match_flowlines(ops, [desc])
        return merged

    def test_spill_on_line_binds_at_zero(self):
        desc = descriptive("D1", [[(0.0, 0.0), (100.0, 0.0)]])
        merged = [MergedFlowline(make_operational(row_id="OP1"), "D1", desc.geometry,
                                 desc.operator_name, 0.0, (0.0, 0.0))]
        att = match_spills([spill("S1", 50.0, 0.0)], merged)
        assert att[0].matched_flowline_id == "OP1"
        assert att[0].tolerance_used == 0.0
        assert att[0].distance < 1e-6

    def test_far_spill_unmatched(self):
        desc = descriptive("D1", [[(0.0, 0.0), (100.0, 0.0)]])
        merged = [MergedFlowline(make_operational(row_id="OP1"), "D1", desc.geometry,
                                 desc.operator_name, 0.0, (0.0, 0.0))]
        att = match_spills([spill("S1", 50.0, 30.0)], merged)
        assert att[0].matched_flowline_id is None

    def test_operator_gate(self):
        desc = descriptive("D1", [[(0.0, 0.0), (100.0, 0.0)]])
        merged = [MergedFlowline(make_operational(row_id="OP1"), "D1", desc.geometry,
                                 desc.operator_name, 0.0, (0.0, 0.0))]
        att = match_spills([spill("S1", 50.0, 5.0, operator="Rival Oil Co")], merged)
        assert att[0].matched_flowline_id is None

    def test_config_a_attribution_rate(self, synth_a):
        merged, _, _ = match_flowlines(synth_a.operational, synth_a.descriptive)
        att = match_spills(synth_a.spills, merged)
        truth = synth_a.truth
        correct = sum(1 for a in att
                      if a.matched and truth.spill_matches[a.spill_id] == a.matched_flowline_id)
        assert correct / len(att) >= 0.95


class TestAssignRisk:
    def _merged_pair(self):
        g = multiline([(0.0, 0.0), (100.0, 0.0)])
        return [
            MergedFlowline(make_operational(row_id="OP1"), "D1", g, "Acme", 0.0, (0.0, 0.0)),
            MergedFlowline(make_operational(row_id="OP2"), "D2", g, "Acme", 0.0, (0.0, 0.0)),
        ]

    def test_no_attributions(self):
        labeled = assign_risk(self._merged_pair(), [])
        assert [m.risk for m in labeled] == [0, 0]

    def test_two_spills_one_line_idempotent(self):
        atts = [SpillAttribution("S1", "OP1", 1.0, 5.0),
                SpillAttribution("S2", "OP1", 2.0, 5.0)]
        labeled = assign_risk(self._merged_pair(), atts)
        assert [m.risk for m in labeled] == [1, 0]

    def test_dangling_reference(self):
        with pytest.raises(DanglingReference):
            assign_risk(self._merged_pair(), [SpillAttribution("S1", "NOPE", 1.0, 5.0)])

    def test_unmatched_attribution_is_ignored(self):
        labeled = assign_risk(self._merged_pair(),
                              [SpillAttribution("S1", None, math.nan, 25.0)])
        assert [m.risk for m in labeled] == [0, 0]


class TestAuditLog:
    def test_csv_shape(self, tmp_path, synth_a):
        merged, _, audit = match_flowlines(synth_a.operational[:20], synth_a.descriptive)
        path = tmp_path / "audit.csv"
        write_audit_log(path, audit)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "record_id,step_reached,n_candidates,chosen_id,d_start,d_end"
        assert len(lines) == 21
