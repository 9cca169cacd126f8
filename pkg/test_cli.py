#!/usr/bin/env python3
"""
Tests for the command line and the settings layer
"""

import csv
import io
import json
import logging

import pytest

from cli import (
    EXIT_BUDGET,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_USAGE,
    TABLE_FIELDS,
    monotone_violations,
    run_command,
)
from config import ConfigError, Settings, load_settings, settings_from_mapping
from formulas import s_Zn3


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for var in ("TINDEP_BUDGET", "TINDEP_THREADS", "TINDEP_MAX_ORDER", "TINDEP_LOG_LEVEL"):
        monkeypatch.delenv(var, raising=False)


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), out=out)
    return code, out.getvalue()


# ============================================================================
# SINGLE QUERIES
# ============================================================================

class TestQueries:
    def test_independence_number(self):
        assert run("ind", "--group", "30", "--set", "1,2,4,8,16") == (EXIT_OK, "2\n")

    def test_weak_independence_number(self):
        assert run("wind", "--group", "30", "--set", "1,2,4,8") == (EXIT_OK, "inf\n")
        assert run("wind", "--group", "30", "--set", "1,2,4,8,16") == (EXIT_OK, "3\n")

    def test_check_reports_violation(self):
        code, out = run("check", "--group", "11", "--set", "1,3", "--t", "4")
        assert code == EXIT_OK
        assert out.startswith("dependent (-3,1)")
        code, out = run("check", "--group", "8", "--set", "1,5", "--t", "3")
        assert out == "independent\n"

    def test_check_json(self):
        code, out = run("check", "--group", "30", "--set", "1,2,4,8", "--t", "inf", "--weak", "--json")
        data = json.loads(out)
        assert data["independent"] is True
        assert data["t"] == "inf"
        assert data["mode"] == "weak"

    def test_maxima(self):
        assert run("smax", "--group", "9", "--t", "3") == (EXIT_OK, "1\n")
        assert run("smax", "--group", "7", "--t", "2", "--witness") == (EXIT_OK, "3\n1;2;3\n")
        assert run("wmax", "--group", "2x2x2", "--t", "inf") == (EXIT_OK, "3\n")
        assert run("sfmax", "--group", "7") == (EXIT_OK, "2\n")

    def test_search_json(self):
        code, out = run("smax", "--group", "4", "--t", "3", "--json")
        data = json.loads(out)
        assert data["max_size"] == 1
        assert data["status"] == "exact"

    def test_budget_exhaustion_exit_code(self):
        code, out = run("smax", "--group", "30", "--t", "4", "--budget", "2")
        assert code == EXIT_BUDGET
        assert "budget exhausted" in out

    def test_construct(self):
        code, out = run("construct", "three", "--group", "8")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "1;5"
        assert "verified" in out

    def test_construct_json(self):
        code, out = run("construct", "cyclic", "--group", "101", "--t", "4", "--json")
        data = json.loads(out)
        assert data["produced"] == [[17], [21], [23], [24]]
        assert data["verified"] is True

    def test_bounds(self):
        code, out = run("bounds", "s", "--group", "11", "--t", "4")
        data = json.loads(out)
        assert code == EXIT_OK
        assert data["upper"] == 2
        counted = [p for p in data["provenance"] if p["tag"] == "sumset-count"]
        assert counted and "pairwise distinct" in counted[0]["statement"]
        code, out = run("bounds", "sf", "--group", "7")
        assert json.loads(out)["lower"] == 2


# ============================================================================
# ERRORS AND EXIT CODES
# ============================================================================

class TestExitCodes:
    def test_domain_errors(self, capsys):
        assert run("construct", "cyclic", "--group", "2x4", "--t", "3")[0] == EXIT_ERROR
        assert run("ind", "--group", "1", "--set", "0")[0] == EXIT_ERROR
        assert run("ind", "--group", "7", "--set", "1,8")[0] == EXIT_ERROR
        assert "Error:" in capsys.readouterr().err

    def test_unreduced_coordinates_are_rejected(self, capsys):
        assert run("ind", "--group", "7", "--set", "9")[0] == EXIT_ERROR
        assert run("check", "--group", "2x4", "--set", "(0,1),(2,1)", "--t", "2")[0] == EXIT_ERROR
        assert "outside [0, " in capsys.readouterr().err

    def test_usage_errors(self, capsys):
        assert run()[0] == EXIT_USAGE
        assert run("frobnicate")[0] == EXIT_USAGE
        assert run("smax", "--group", "9")[0] == EXIT_USAGE
        assert run("smax", "--group", "9", "--t", "x")[0] == EXIT_USAGE
        assert run("smax", "--group", "9", "--t", "3", "--budget", "many")[0] == EXIT_USAGE
        assert run("bounds", "s", "--group", "9")[0] == EXIT_USAGE
        assert "usage:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        missing = tmp_path / "none.json"
        assert run("smax", "--group", "9", "--t", "3", "--config", str(missing))[0] == EXIT_ERROR


# ============================================================================
# TABLES
# ============================================================================

class TestTables:
    def test_cyclic_three_table(self):
        code, out = run("table", "--cyclic", "2..20", "--t", "3")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == ",".join(TABLE_FIELDS)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 19
        for row in rows:
            assert int(row["value"]) == s_Zn3(int(row["n"])), f"Z{row['n']}"
            assert row["status"] == "exact"
            assert row["sandwich"] == "ok"

    def test_csv_and_json_agree(self):
        _, csv_out = run("table", "--groups", "8,2x4,9", "--t", "2,3")
        _, json_out = run("table", "--groups", "8,2x4,9", "--t", "2,3", "--format", "json")
        csv_rows = list(csv.DictReader(io.StringIO(csv_out)))
        json_rows = json.loads(json_out)
        assert len(csv_rows) == len(json_rows) == 6
        for left, right in zip(csv_rows, json_rows):
            assert left == {key: str(value) for key, value in right.items()}

    def test_sum_free_table_needs_no_t(self):
        code, out = run("table", "--cyclic", "2..8", "--mode", "sumfree")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK
        assert [int(r["value"]) for r in rows] == [1, 1, 2, 2, 3, 2, 4]

    def test_monotone_report(self):
        code, out = run("table", "--cyclic", "2..16", "--t", "4", "--monotone-report")
        assert code == EXIT_OK
        comments = [line for line in out.splitlines() if line.startswith("#")]
        assert comments == ["# monotone t=4 even: nondecreasing", "# monotone t=4 odd: nondecreasing"]

    def test_monotone_report_finds_known_decrease(self):
        code, out = run("table", "--cyclic", "18..20", "--t", "5", "--monotone-report")
        assert code == EXIT_OK
        values = {int(row["n"]): int(row["value"]) for row in csv.DictReader(
            line for line in out.splitlines() if not line.startswith("#"))}
        assert (values[18], values[20]) == (2, 1)
        assert "# monotone t=5 even: 1 decrease(s): 18->20 (2->1)" in out.splitlines()

    def test_monotone_violations(self):
        rows = [
            {"n": 10, "group": "10", "t": "4", "value": 2, "status": "exact"},
            {"n": 12, "group": "12", "t": "4", "value": 1, "status": "exact"},
            {"n": 14, "group": "14", "t": "4", "value": 3, "status": "exact"},
            {"n": 11, "group": "11", "t": "4", "value": 1, "status": "exact"},
        ]
        report = monotone_violations(rows)
        assert report[("4", "even")] == [(10, 12, 2, 1)]
        assert report[("4", "odd")] == []

    def test_bad_table_requests(self):
        assert run("table", "--cyclic", "2..5")[0] == EXIT_USAGE
        assert run("table", "--cyclic", "2..5", "--t", ",")[0] == EXIT_USAGE
        assert run("table", "--cyclic", "9..5", "--t", "3")[0] == EXIT_USAGE


# ============================================================================
# VERIFICATION
# ============================================================================

class TestVerify:
    def test_small_cap_passes(self):
        code, out = run("verify", "--cap", "8", "--t-cap", "3")
        assert code == EXIT_OK, out
        assert "PASS s-exact" in out
        assert "FAIL" not in out

    def test_json_report(self):
        code, out = run("verify", "--cap", "5", "--t-cap", "2", "--json")
        names = {check["name"] for check in json.loads(out)}
        assert {"s-exact", "w-exact", "sf-sandwich", "construct-two"} <= names


# ============================================================================
# SETTINGS
# ============================================================================

class TestSettings:
    def test_defaults(self):
        settings = Settings()
        assert settings.budget == 10 ** 8
        assert settings.threads == 1
        assert settings.validate() is settings

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "settings.yaml"
        path.write_text("budget: 500\nthreads: 2\nnegation_pruning: false\n")
        settings = load_settings(str(path), environ={})
        assert (settings.budget, settings.threads, settings.negation_pruning) == (500, 2, False)

    def test_environment_overrides(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"budget": 500}))
        settings = load_settings(str(path), environ={"TINDEP_BUDGET": "42", "TINDEP_LOG_LEVEL": "INFO"})
        assert settings.budget == 42
        assert settings.log_level == "INFO"

    def test_unknown_keys_warn(self, caplog):
        with caplog.at_level(logging.WARNING, logger="config"):
            settings = settings_from_mapping({"budget": 7, "colour": "blue"})
        assert settings.budget == 7
        assert "colour" in caplog.text

    def test_invalid_values(self, tmp_path):
        with pytest.raises(ConfigError):
            load_settings(environ={"TINDEP_THREADS": "lots"})
        with pytest.raises(ConfigError):
            load_settings(environ={"TINDEP_BUDGET": "0"})
        with pytest.raises(ConfigError):
            load_settings(str(tmp_path / "missing.yaml"))
        broken = tmp_path / "broken.json"
        broken.write_text("{")
        with pytest.raises(ConfigError):
            load_settings(str(broken))
