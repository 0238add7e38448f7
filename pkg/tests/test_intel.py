"""
Tests for the intelligence dataset: loading, group search, allow-lists, fetch.
"""
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from isadm.core import intel
from isadm.core.exceptions import (
    ConfigError,
    DatasetError,
    FetchError,
    IntegrityError,
    OfflineError,
    UnknownIdError,
)

BANK_GROUPS = {"Andariel", "APT38", "Cobalt Group", "DarkVishnya", "Silence", "Indrik Spider", "RTM", "GCMAN"}


@pytest.fixture
def financial(fixture_bytes):
    return intel.load_dataset(fixture_bytes("financial_dataset.json"))


def _names(dataset, hits):
    return {dataset.groups[h.group_id].name for h in hits}


def _dataset_doc(**overrides):
    doc = {
        "version_label": "test",
        "techniques": [{"id": "T1566.001", "name": "Spearphishing Attachment", "tactics": ["Initial Access"]}],
        "groups": [{"id": "G0001", "name": "One", "techniques": ["T1566.001"]}],
    }
    doc.update(overrides)
    return json.dumps(doc)


# ============================================================================
# load_dataset
# ============================================================================

class TestLoadDataset:
    def test_financial_fixture(self, financial):
        assert len(financial.groups) == 16
        assert financial.version_label.startswith("enterprise-attack")
        assert financial.techniques["T1566.001"].is_subtechnique
        assert not financial.techniques["T1105"].is_subtechnique

    def test_minimal(self):
        dataset = intel.load_dataset(_dataset_doc())
        assert dataset.group("G0001").technique_ids == frozenset({"T1566.001"})

    def test_dangling_technique_names_group_and_technique(self):
        text = _dataset_doc(groups=[{"id": "G0001", "name": "One", "techniques": ["T9999"]}])
        with pytest.raises(IntegrityError) as exc_info:
            intel.load_dataset(text)
        assert "G0001" in str(exc_info.value)
        assert "T9999" in str(exc_info.value)

    def test_duplicate_group_id(self):
        group = {"id": "G0001", "name": "One", "techniques": []}
        with pytest.raises(IntegrityError):
            intel.load_dataset(_dataset_doc(groups=[group, dict(group, name="Two")]))

    def test_malformed_technique_id(self):
        with pytest.raises(DatasetError):
            intel.load_dataset(_dataset_doc(techniques=[{"id": "1566", "name": "x", "tactics": ["Execution"]}]))

    def test_technique_without_tactics(self):
        with pytest.raises(DatasetError):
            intel.load_dataset(_dataset_doc(techniques=[{"id": "T1566.001", "name": "x", "tactics": []}]))

    def test_not_json(self):
        with pytest.raises(DatasetError):
            intel.load_dataset(b"\x00not json")

    def test_unknown_group(self, financial):
        with pytest.raises(UnknownIdError):
            financial.group("G9999")

    def test_serialize_roundtrip(self, financial):
        assert intel.load_dataset(intel.serialize_dataset(financial)) == financial


# ============================================================================
# search_groups / allow-list
# ============================================================================

class TestSearchGroups:
    def test_bank(self, financial):
        assert _names(financial, intel.search_groups(financial, ["bank"])) == BANK_GROUPS

    def test_banking(self, financial):
        assert _names(financial, intel.search_groups(financial, ["banking"])) == {"Silence", "Indrik Spider", "RTM"}

    def test_financial_column(self, financial):
        names = _names(financial, intel.search_groups(financial, ["financial"]))
        assert {"OilRig", "APT41", "Carbanak"} <= names
        assert "GCMAN" not in names

    def test_all_keywords_find_sixteen(self, financial):
        hits = intel.search_groups(financial, ["bank", "banking", "financial"])
        assert len(hits) == 16
        silence = next(h for h in hits if financial.groups[h.group_id].name == "Silence")
        assert silence.matched_keywords == ("bank", "banking", "financial")

    def test_sorted_by_name(self, financial):
        hits = intel.search_groups(financial, ["financial"])
        names = [financial.groups[h.group_id].name.lower() for h in hits]
        assert names == sorted(names)

    def test_case_insensitive(self, financial):
        upper = intel.search_groups(financial, ["BANK"])
        lower = intel.search_groups(financial, ["bank"])
        assert upper
        assert [h.group_id for h in upper] == [h.group_id for h in lower]
        assert all(h.matched_keywords == ("BANK",) for h in upper)

    def test_alias_match(self, financial):
        assert _names(financial, intel.search_groups(financial, ["evil corp"])) == {"Indrik Spider"}

    def test_no_match(self, financial):
        assert intel.search_groups(financial, ["zzzz-no-such-sector"]) == []

    @pytest.mark.parametrize("keywords", [[], ["  "], ["bank", ""]])
    def test_blank_keywords(self, financial, keywords):
        with pytest.raises(ConfigError):
            intel.search_groups(financial, keywords)

    def test_allow_list_narrows(self, financial):
        hits = intel.search_groups(financial, ["bank"])
        kept = intel.apply_allow_list(hits, frozenset({"G0091"}), financial)
        assert [h.group_id for h in kept] == ["G0091"]

    def test_allow_list_unknown_id_warns(self, financial, warnings_seen):
        hits = intel.search_groups(financial, ["bank"])
        kept = intel.apply_allow_list(hits, frozenset({"G0091", "G9999"}), financial)
        assert [h.group_id for h in kept] == ["G0091"]
        assert any("G9999" in w for w in warnings_seen)

    def test_shipped_allow_list_covers_all(self, financial, fixture_bytes):
        allowed = intel.load_allow_list(fixture_bytes("financial_allow_list.json"))
        assert allowed == frozenset(financial.groups)

    def test_partition_by_first_keyword(self, financial):
        keywords = ["bank", "banking", "financial"]
        parts = intel.partition_by_keyword(intel.search_groups(financial, keywords), keywords)
        assert list(parts) == ["bank", "financial"]
        assert len(parts["bank"]) == 8
        assert len(parts["financial"]) == 8


# ============================================================================
# group_layer
# ============================================================================

class TestGroupLayer:
    def test_unit_scores(self, financial):
        for gid, group in financial.groups.items():
            layer = intel.group_layer(financial, gid)
            assert set(layer.scores) == set(group.technique_ids)
            assert set(layer.scores.values()) <= {1}
            assert layer.name == group.name

    def test_group_without_techniques(self):
        dataset = intel.load_dataset(_dataset_doc(groups=[{"id": "G0001", "name": "One"}]))
        assert len(intel.group_layer(dataset, "G0001")) == 0

    def test_unknown_group(self, financial):
        with pytest.raises(UnknownIdError):
            intel.group_layer(financial, "G9999")


# ============================================================================
# fetch_dataset
# ============================================================================

@pytest.fixture
def stub_server(fixture_bytes):
    body = fixture_bytes("financial_dataset.json")

    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):
            if self.path == "/enterprise.json":
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self.send_response(404)
                self.send_header("Content-Length", "0")
                self.end_headers()

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


class TestFetch:
    def test_offline_by_default(self, tmp_path):
        dest = tmp_path / "raw.json"
        with pytest.raises(OfflineError) as exc_info:
            intel.fetch_dataset("https://example.org/enterprise.json", dest)
        assert exc_info.value.exit_code == 4
        assert not dest.exists()

    def test_downloads_when_online(self, stub_server, tmp_path, monkeypatch, fixture_bytes):
        monkeypatch.setenv("ISADM_OFFLINE", "0")
        monkeypatch.setenv("NO_PROXY", "127.0.0.1,localhost")
        dest = tmp_path / "raw" / "enterprise.json"
        size = intel.fetch_dataset(f"{stub_server}/enterprise.json", dest)
        assert size == len(fixture_bytes("financial_dataset.json"))
        assert len(intel.load_dataset(dest.read_bytes()).groups) == 16

    def test_http_error(self, stub_server, tmp_path, monkeypatch):
        monkeypatch.setenv("ISADM_OFFLINE", "0")
        monkeypatch.setenv("NO_PROXY", "127.0.0.1,localhost")
        with pytest.raises(FetchError) as exc_info:
            intel.fetch_dataset(f"{stub_server}/missing.json", tmp_path / "raw.json")
        assert "404" in str(exc_info.value)

    def test_bad_url(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ISADM_OFFLINE", "0")
        with pytest.raises(ConfigError):
            intel.fetch_dataset("ftp://example.org/x", tmp_path / "raw.json")
