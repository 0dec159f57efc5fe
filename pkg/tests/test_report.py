"""Deterministic JSON reports with full-precision floats."""

import json

import numpy as np
import pytest

from dpkit.report import dumps_report, format_float, write_report


def test_floats_carry_17_significant_digits():
    x = 0.1 + 0.2
    assert format_float(x) == "0.30000000000000004"
    assert float(format_float(np.pi)) == np.pi


def test_nonfinite_floats_become_strings():
    assert format_float(np.inf) == '"inf"'
    assert format_float(-np.inf) == '"-inf"'
    assert format_float(np.nan) == '"nan"'


def test_keys_sorted_and_stable():
    a = dumps_report({"b": 1, "a": 2, "c": {"z": 0, "y": 1}}, timestamp=False)
    b = dumps_report({"c": {"y": 1, "z": 0}, "a": 2, "b": 1}, timestamp=False)
    assert a == b
    assert a.index('"a"') < a.index('"b"') < a.index('"c"')


def test_output_parses_as_json():
    data = {
        "name": "run",
        "values": [1.5, 2, True, None, "text"],
        "nested": {"flag": False, "arr": np.array([1.0, 2.0])},
        "count": np.int64(5),
        "x": np.float64(0.25),
    }
    parsed = json.loads(dumps_report(data, timestamp=False))
    assert parsed["nested"]["arr"] == [1.0, 2.0]
    assert parsed["count"] == 5
    assert parsed["values"][2] is True and parsed["values"][3] is None


def test_timestamp_toggle():
    with_ts = json.loads(dumps_report({"a": 1}))
    without = json.loads(dumps_report({"a": 1}, timestamp=False))
    assert "generated_at" in with_ts
    assert "generated_at" not in without


def test_identical_bytes_without_timestamp():
    data = {"pi": np.pi, "list": [1, 2, 3]}
    assert dumps_report(data, timestamp=False) == dumps_report(data, timestamp=False)


def test_rejects_non_string_keys():
    with pytest.raises(TypeError):
        dumps_report({1: "x"}, timestamp=False)


def test_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps_report({"x": object()}, timestamp=False)


def test_write_report_creates_directories(tmp_path):
    path = write_report(tmp_path / "deep" / "dir" / "report.json", {"ok": True})
    assert path.exists()
    assert json.loads(path.read_text())["ok"] is True
