"""
Tests for the isadm command line.
"""
import json

import pytest
from click.testing import CliRunner

from isadm import cli as cli_module
from isadm.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


# ============================================================================
# validate / elicit
# ============================================================================

class TestValidate:
    def test_valid_model(self, runner, fixtures):
        result = runner.invoke(cli, ["validate", "--model", str(fixtures / "branch_office_model.json")])
        assert result.exit_code == 0, result.output
        assert "valid" in result.output

    def test_dangling_reference_exits_2(self, runner, write_json):
        path = write_json("model.json", {"elements": [
            {"id": "P9", "kind": "process", "name": "Backup"},
            {"id": "DF7", "kind": "data_flow", "name": "Stream", "source": "P9", "sink": "DS99"},
        ]})
        result = runner.invoke(cli, ["validate", "--model", str(path)])
        assert result.exit_code == 2
        assert "DANGLING_REF" in result.output

    def test_broken_json_exits_3(self, runner, write_json):
        path = write_json("model.json", '{"elements": [')
        result = runner.invoke(cli, ["validate", "--model", str(path)])
        assert result.exit_code == 3

    def test_missing_file_exits_1(self, runner, tmp_path):
        result = runner.invoke(cli, ["validate", "--model", str(tmp_path / "nope.json")])
        assert result.exit_code == 1


class TestElicit:
    def test_lists_categories(self, runner, fixtures):
        result = runner.invoke(cli, [
            "elicit",
            "--model", str(fixtures / "branch_office_model.json"),
            "--matrix", str(fixtures / "branch_office_matrix.json"),
        ])
        assert result.exit_code == 0, result.output
        assert "Spoofing" in result.output
        assert "DS4, EE1, P1, P2, P3" in result.output


# ============================================================================
# groups / merge / fetch
# ============================================================================

class TestGroups:
    def test_banking(self, runner, fixtures):
        result = runner.invoke(cli, [
            "groups", "--dataset", str(fixtures / "financial_dataset.json"), "--keywords", "banking",
        ])
        assert result.exit_code == 0, result.output
        for name in ("Silence", "Indrik Spider", "RTM"):
            assert name in result.output
        assert "3 group(s) matched" in result.output


class TestMerge:
    def test_writes_layer(self, runner, fixtures, tmp_path, fixture_bytes):
        out = tmp_path / "merged.json"
        result = runner.invoke(cli, [
            "merge",
            "--dataset", str(fixtures / "financial_dataset.json"),
            "--keywords", "bank,banking,financial",
            "--allow-list", str(fixtures / "financial_allow_list.json"),
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_bytes())["techniques"] == \
            json.loads(fixture_bytes("financial_merged_layer.navigator.json"))["techniques"]
        assert "T1204.002    16" in result.output

    def test_groups_mode(self, runner, fixtures, tmp_path):
        out = tmp_path / "merged.json"
        result = runner.invoke(cli, [
            "merge", "--dataset", str(fixtures / "financial_dataset.json"),
            "--groups", "G0138,G0082", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_needs_groups_or_keywords(self, runner, fixtures, tmp_path):
        result = runner.invoke(cli, [
            "merge", "--dataset", str(fixtures / "financial_dataset.json"), "--out", str(tmp_path / "m.json"),
        ])
        assert result.exit_code == 1
        assert not (tmp_path / "m.json").exists()


class TestFetch:
    def test_offline_by_default(self, runner, tmp_path):
        result = runner.invoke(cli, ["fetch", "--url", "https://example.org/x.json", "--out", str(tmp_path / "x")])
        assert result.exit_code == 4
        assert not (tmp_path / "x").exists()


# ============================================================================
# analyze
# ============================================================================

class TestAnalyze:
    def test_writes_outputs(self, runner, fixtures, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(cli, ["analyze", "--config", str(fixtures / "backup_run.json"), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in out.iterdir()) == [
            "merged_layer.navigator.json", "report.json", "report.md",
        ]

    def test_overrides(self, runner, fixtures, tmp_path):
        out = tmp_path / "report"
        result = runner.invoke(cli, [
            "analyze", "--config", str(fixtures / "branch_office_run.json"), "--out", str(out),
            "--subsystem", "atm", "--threshold", "top:3",
        ])
        assert result.exit_code == 0, result.output
        doc = json.loads((out / "report.json").read_bytes())
        assert [s["id"] for s in doc["subsystems"]] == ["atm"]
        assert doc["run"]["threshold"] == "top:3"

    def test_bad_threshold_exits_1(self, runner, fixtures, tmp_path):
        result = runner.invoke(cli, [
            "analyze", "--config", str(fixtures / "backup_run.json"), "--out", str(tmp_path / "o"),
            "--threshold", "best:3",
        ])
        assert result.exit_code == 1
        assert not (tmp_path / "o").exists()

    def test_bad_rank_by_exits_1(self, runner, fixtures):
        result = runner.invoke(cli, ["analyze", "--config", str(fixtures / "backup_run.json"), "--rank-by", "impact"])
        assert result.exit_code == 1

    def test_missing_config_exits_1(self, runner, tmp_path):
        result = runner.invoke(cli, ["analyze", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 1

    def test_locked_output_exits_4(self, runner, fixtures, tmp_path):
        out = tmp_path / "report"
        out.mkdir()
        (out / ".isadm.lock").write_text("1")
        result = runner.invoke(cli, [
            "analyze", "--config", str(fixtures / "backup_run.json"), "--out", str(out), "--lock-timeout", "0.1",
        ])
        assert result.exit_code == 4


# ============================================================================
# Group behaviour
# ============================================================================

class TestCliGroup:
    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "isadm" in result.output

    def test_missing_required_option_exits_1(self, runner):
        result = runner.invoke(cli, ["validate"])
        assert result.exit_code == 1

    def test_unknown_command_exits_1(self, runner):
        result = runner.invoke(cli, ["frobnicate"])
        assert result.exit_code == 1

    def test_main_handles_keyboard_interrupt(self, monkeypatch):
        def interrupted():
            raise KeyboardInterrupt

        monkeypatch.setattr(cli_module, "cli", interrupted)
        with pytest.raises(SystemExit) as exc_info:
            cli_module.main()
        assert exc_info.value.code == 130
