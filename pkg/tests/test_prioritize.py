"""
Tests for crosswalk mapping, technique enumeration, thresholds and composite scoring.
"""
import json
from collections import defaultdict

import pytest

from isadm.core import dfd, intel, layers, prioritize, stride
from isadm.core.exceptions import ConfigError, CrosswalkError, IntegrityError
from isadm.core.prioritize import All, ImpactTable, MinScore, ScoredTechnique, TopN
from isadm.core.stride import StrideCategory as C, ThreatFinding


@pytest.fixture
def financial(fixture_bytes):
    return intel.load_dataset(fixture_bytes("financial_dataset.json"))


@pytest.fixture
def merged(fixture_bytes):
    return layers.import_navigator(fixture_bytes("financial_merged_layer.navigator.json"))


@pytest.fixture
def crosswalk(fixture_bytes):
    return prioritize.load_crosswalk(fixture_bytes("crosswalk.json"))


@pytest.fixture
def backup_findings(fixture_bytes):
    model = dfd.parse_model(fixture_bytes("branch_office_model.json"))
    matrix = stride.load_matrix(fixture_bytes("branch_office_matrix.json"))
    return [f for f in stride.elicit_threats(model, matrix) if f.element_id in {"DF7", "P9", "DS4"}]


def _cells(rows):
    cells = defaultdict(dict)
    for r in rows:
        cells[(r.stride_category, r.tactic_name)][r.technique_id] = r.frequency
    return dict(cells)


def _row(tid, freq, element="P1", category=C.TAMPERING, tactic="Execution"):
    return ScoredTechnique(element, category, tactic, tid, tid, freq)


# ============================================================================
# Crosswalk
# ============================================================================

class TestCrosswalk:
    def test_shipped_equals_default(self, crosswalk):
        assert crosswalk == prioritize.default_crosswalk()

    def test_missing_category(self):
        doc = json.loads('{"S": ["Initial Access"], "T": ["Execution"], "R": ["Defense Evasion"], "I": ["Collection"], "D": ["Impact"]}')
        with pytest.raises(CrosswalkError) as exc_info:
            prioritize.load_crosswalk(json.dumps(doc))
        assert "ElevationOfPrivilege" in str(exc_info.value)

    def test_empty_tactic_list(self):
        doc = {c.letter: ["Impact"] for c in C}
        doc["S"] = []
        with pytest.raises(CrosswalkError):
            prioritize.load_crosswalk(json.dumps(doc))

    def test_unknown_category(self):
        doc = {c.letter: ["Impact"] for c in C}
        doc["Q"] = ["Impact"]
        with pytest.raises(CrosswalkError):
            prioritize.load_crosswalk(json.dumps(doc))

    def test_ds4_spoofing_and_p9_repudiation(self, crosswalk, backup_findings):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        assert tmap.rows[("DS4", C.SPOOFING)] == ("Initial Access", "Credential Access")
        assert tmap.rows[("P9", C.REPUDIATION)] == ("Defense Evasion",)
        assert len(tmap.rows) == 8

    def test_no_findings(self, crosswalk):
        assert prioritize.map_findings([], crosswalk, "empty").rows == {}


# ============================================================================
# Threshold policies
# ============================================================================

class TestPolicies:
    @pytest.mark.parametrize("text,expected", [
        ("min:5", MinScore(5)),
        ("top:3", TopN(3)),
        ("ALL", All()),
        (" min:0 ", MinScore(0)),
    ])
    def test_parse(self, text, expected):
        assert prioritize.parse_policy(text) == expected

    def test_parse_global_scope(self):
        assert prioritize.parse_policy("top:2", "global") == TopN(2, scope="global")

    @pytest.mark.parametrize("text", ["top:0", "min:-1", "max:3", "top:", "", "top:x"])
    def test_parse_invalid(self, text):
        with pytest.raises(ConfigError):
            prioritize.parse_policy(text)

    def test_str_roundtrip(self):
        for policy in (MinScore(5), TopN(4), All()):
            assert prioritize.parse_policy(str(policy)) == policy


# ============================================================================
# enumerate_techniques
# ============================================================================

class TestEnumerate:
    def test_ds4_slice(self, crosswalk, backup_findings, merged, financial):
        ds4 = [f for f in backup_findings if f.element_id == "DS4"]
        tmap = prioritize.map_findings(ds4, crosswalk, "backup")
        cells = _cells(prioritize.enumerate_techniques(tmap, merged, financial, MinScore(5)))
        assert cells == {
            (C.SPOOFING, "Initial Access"): {"T1566.001": 15, "T1189": 6},
            (C.SPOOFING, "Credential Access"): {"T1003.001": 6, "T1110": 5},
            (C.ELEVATION_OF_PRIVILEGE, "Privilege Escalation"): {
                "T1053.005": 10, "T1547.001": 7, "T1543.003": 7, "T1078": 6,
            },
        }

    def test_backup_subsystem(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        cells = _cells(prioritize.enumerate_techniques(tmap, merged, financial, MinScore(5)))
        assert cells[(C.TAMPERING, "Execution")] == {
            "T1204.002": 16, "T1059.001": 13, "T1059.005": 10, "T1059.003": 10,
            "T1059.007": 6, "T1106": 6, "T1203": 5, "T1569.002": 5,
        }
        assert cells[(C.TAMPERING, "Persistence")] == {"T1053.005": 10}
        assert cells[(C.REPUDIATION, "Defense Evasion")] == {
            "T1027": 8, "T1078": 6, "T1036.005": 6, "T1218.001": 6,
            "T1070.004": 5, "T1055": 5, "T1112": 5,
        }
        assert (C.TAMPERING, "Impact") not in cells
        assert (C.DENIAL_OF_SERVICE, "Impact") not in cells

    def test_rows_within_cell_by_score_then_id(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        rows = [
            r for r in prioritize.enumerate_techniques(tmap, merged, financial, MinScore(5))
            if r.element_id == "DF7" and r.tactic_name == "Execution"
        ]
        assert [r.technique_id for r in rows] == [
            "T1204.002", "T1059.001", "T1059.003", "T1059.005",
            "T1059.007", "T1106", "T1203", "T1569.002",
        ]

    def test_top_n_per_cell(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        cells = _cells(prioritize.enumerate_techniques(tmap, merged, financial, TopN(2)))
        assert cells[(C.TAMPERING, "Execution")] == {"T1204.002": 16, "T1059.001": 13}
        assert all(len(v) <= 2 for v in cells.values())

    def test_top_n_global(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        rows = prioritize.enumerate_techniques(tmap, merged, financial, TopN(2, scope="global"))
        assert {r.technique_id for r in rows} == {"T1204.002", "T1566.001"}

    def test_all_includes_low_scores(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        cells = _cells(prioritize.enumerate_techniques(tmap, merged, financial, All()))
        assert cells[(C.TAMPERING, "Impact")] == {"T1486": 3}

    def test_threshold_above_every_score(self, crosswalk, backup_findings, merged, financial):
        tmap = prioritize.map_findings(backup_findings, crosswalk, "backup")
        assert prioritize.enumerate_techniques(tmap, merged, financial, MinScore(100)) == []

    def test_technique_listed_once_per_element_category(self, financial):
        crosswalk = prioritize.TacticCrosswalk({
            **prioritize.default_crosswalk().tactics,
            C.ELEVATION_OF_PRIVILEGE: ("Persistence", "Privilege Escalation"),
        })
        tmap = prioritize.map_findings([ThreatFinding("P9", C.ELEVATION_OF_PRIVILEGE)], crosswalk, "s")
        rows = prioritize.enumerate_techniques(tmap, layers.Layer("m", {"T1053.005": 10}), financial, All())
        assert [(r.tactic_name, r.technique_id) for r in rows] == [("Persistence", "T1053.005")]

    def test_layer_ids_missing_from_dataset_warn(self, crosswalk, financial, warnings_seen):
        tmap = prioritize.map_findings([ThreatFinding("P1", C.TAMPERING)], crosswalk, "s")
        rows = prioritize.enumerate_techniques(
            tmap, layers.Layer("m", {"T1204.002": 3, "T1999": 4}), financial, All()
        )
        assert [r.technique_id for r in rows] == ["T1204.002"]
        assert any("T1999" in w for w in warnings_seen)


# ============================================================================
# apply_threshold / composite_score / bands
# ============================================================================

class TestThresholdAndComposite:
    def test_min_score_keeps_order(self):
        rows = [_row("T1001", 3), _row("T1002", 9), _row("T1003", 5)]
        assert [r.technique_id for r in prioritize.apply_threshold(rows, MinScore(5))] == ["T1002", "T1003"]

    def test_top_n_ties_break_by_id(self):
        rows = [_row("T1003", 5), _row("T1001", 5), _row("T1002", 5)]
        kept = prioritize.apply_threshold(rows, TopN(2))
        assert [r.technique_id for r in kept] == ["T1001", "T1002"]

    def test_all_and_empty(self):
        rows = [_row("T1001", 1)]
        assert prioritize.apply_threshold(rows, All()) == rows
        assert prioritize.apply_threshold([], TopN(3)) == []

    def test_composite_key_requires_composites(self):
        with pytest.raises(ConfigError):
            prioritize.apply_threshold([_row("T1001", 3)], TopN(1), key="composite")

    def test_fair_composites(self):
        rows = [
            _row("T1204.002", 16),
            _row("T1566.001", 15, element="P14", category=C.SPOOFING, tactic="Initial Access"),
            _row("T1078", 6, element="P15", category=C.REPUDIATION, tactic="Defense Evasion"),
            _row("T1070.004", 5, element="P15", category=C.REPUDIATION, tactic="Defense Evasion"),
            _row("T1003.001", 6, element="P14", category=C.SPOOFING, tactic="Credential Access"),
        ]
        impacts = ImpactTable({"T1204.002": 5, "T1566.001": 5, "T1078": 5, "T1070.004": 4, "T1003.001": 3})
        scored = prioritize.composite_score(rows, impacts)
        assert [(r.technique_id, r.composite) for r in scored] == [
            ("T1204.002", 80),
            ("T1566.001", 75),
            ("T1078", 30),
            ("T1070.004", 20),
            ("T1003.001", 18),
        ]
        assert [r.rank for r in scored] == [1, 2, 3, 4, 5]

    def test_composite_tie_prefers_frequency(self):
        scored = prioritize.composite_score([_row("T1001", 5), _row("T1002", 10)], ImpactTable({"T1001": 2}))
        assert [r.technique_id for r in scored] == ["T1002", "T1001"]

    def test_default_impact(self):
        scored = prioritize.composite_score([_row("T1001", 7)], ImpactTable())
        assert scored[0].impact == 1
        assert scored[0].composite == 7

    def test_composite_invariant(self):
        with pytest.raises(IntegrityError):
            ScoredTechnique("P1", C.TAMPERING, "Execution", "T1001", "x", 5, impact=2, composite=11)

    @pytest.mark.parametrize("value", [0, 6])
    def test_impact_range(self, value):
        with pytest.raises(CrosswalkError):
            ImpactTable({"T1001": value})

    def test_load_impacts_fixture(self, fixture_bytes):
        table = prioritize.load_impacts(fixture_bytes("bangladesh_impacts.json"))
        assert table.impact("T1070.004") == 4
        assert table.impact("T1105") == 1

    def test_load_impacts_bad_id(self):
        with pytest.raises(CrosswalkError):
            prioritize.load_impacts('{"impacts": {"1204": 3}}')

    @pytest.mark.parametrize("freq,label", [(16, "High"), (10, "High"), (9, "Medium"), (5, "Medium"), (4, "Low")])
    def test_bands(self, freq, label):
        assert prioritize.band_label(freq) == label

    def test_inverted_bands(self):
        with pytest.raises(ConfigError):
            prioritize.FrequencyBands(high=3, medium=5)
