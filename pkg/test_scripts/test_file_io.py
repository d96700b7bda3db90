"""
Tests for input parsing, estimate streaming and staged output directories.
"""
import json

import numpy as np
import pandas as pd
import pytest

from app.core.error_handler import DataValidationError, TraceParseError, UsageError
from app.models.estimate import EstimateBlock
from app.utils.file_parser import FileParser
from app.utils.file_writer import EstimateWriter, FileWriter, StagedOutput
from conftest import step_trace


def two_appliance_block(start=0, rows=3):
    timestamps = np.arange(start, start + rows)
    decided = np.array([[True, False]] * rows)
    return EstimateBlock(
        timestamps=timestamps,
        appliance_ids=("A0001", "A0002"),
        on_powers=np.array([200.0, 800.0]),
        on_probability=np.array([[0.9, 0.1]] * rows),
        decided=decided,
        estimated_power=decided * np.array([200.0, 800.0])
    )


def empty_block(start, rows):
    return EstimateBlock(
        timestamps=np.arange(start, start + rows),
        appliance_ids=(),
        on_powers=np.zeros(0),
        on_probability=np.zeros((rows, 0)),
        decided=np.zeros((rows, 0), dtype=bool),
        estimated_power=np.zeros((rows, 0))
    )


def test_trace_csv_header_is_checked(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("time,watts\n0,1\n", encoding="utf-8")
    with pytest.raises(TraceParseError) as excinfo:
        FileParser().read_trace_csv(str(path))
    assert excinfo.value.line_number == 1


def test_trace_csv_bad_value_reports_line(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("timestamp,power_w\n0,1\n1,2\n2,oops\n", encoding="utf-8")
    with pytest.raises(TraceParseError) as excinfo:
        FileParser().read_trace_csv(str(path))
    assert excinfo.value.line_number == 4


def test_trace_csv_round_trip_keeps_appliance_columns(tmp_path):
    trace = step_trace([(0, 5), (200, 5)])
    trace.per_appliance = {"fridge": trace.aggregate.copy()}
    path = FileWriter().write_trace_csv(trace, str(tmp_path / "trace.csv"), include_appliances=True)

    parsed = FileParser().read_trace_csv(path)
    assert parsed.labels == ["fridge"]
    assert np.array_equal(parsed.aggregate, trace.aggregate)


def test_spec_error_names_the_field(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps({"appliances": [
        {"label": "fridge", "on_power": 200, "mean_on_duration": 600, "activations_per_day": 4},
        {"label": "kettle", "on_power": -1, "mean_on_duration": 120, "activations_per_day": 2}
    ]}), encoding="utf-8")

    with pytest.raises(DataValidationError) as excinfo:
        FileParser().read_specs(str(path))
    assert "appliances.1.on_power" in str(excinfo.value)


def test_empty_spec_list_is_rejected(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text("[]", encoding="utf-8")
    with pytest.raises(DataValidationError):
        FileParser().read_specs(str(path))


@pytest.mark.parametrize("content, expected", [
    ("[800, 200]", [200.0, 800.0]),
    ('{"states_w": [100, 390]}', [100.0, 390.0]),
])
def test_reference_state_formats(tmp_path, content, expected):
    path = tmp_path / "reference.json"
    path.write_text(content, encoding="utf-8")
    assert FileParser().read_reference_states(str(path)) == expected


@pytest.mark.parametrize("content", ["", "[]", '{"states_w": []}'])
def test_empty_reference_states(tmp_path, content):
    path = tmp_path / "reference.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(UsageError):
        FileParser().read_reference_states(str(path))


def test_estimate_csv_has_total_per_sample(tmp_path):
    path = tmp_path / "estimates.csv"
    with EstimateWriter(str(path), "csv") as writer:
        writer(empty_block(0, 2))
        writer(two_appliance_block(start=2))

    frame = pd.read_csv(path)
    totals = frame[frame["appliance_id"] == "TOTAL"]
    assert totals["timestamp"].tolist() == [0, 1, 2, 3, 4]
    assert totals["estimated_power_w"].tolist() == [0.0, 0.0, 200.0, 200.0, 200.0]
    assert writer.samples_written == 5
    assert writer.energy_kwh == pytest.approx(600.0 / 3.6e6)


@pytest.mark.parametrize("output_format", ["csv", "jsonl"])
def test_estimates_read_back(tmp_path, output_format):
    path = tmp_path / f"estimates.{output_format}"
    with EstimateWriter(str(path), output_format) as writer:
        writer(empty_block(0, 86400))
        writer(two_appliance_block(start=86400))

    stream, states_per_day = FileParser().read_estimates(str(path))

    assert len(stream) == 86403
    assert stream.appliance_ids == ["A0001", "A0002"]
    assert stream.total_power[-1] == 200.0
    assert stream.power_by_appliance()["A0001"][:86400].sum() == 0.0
    assert states_per_day == {0: [], 1: [200.0, 800.0]}


def test_jsonl_records_are_typed(tmp_path):
    path = tmp_path / "estimates.jsonl"
    with EstimateWriter(str(path), "jsonl") as writer:
        writer(two_appliance_block(rows=1))

    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert [record["type"] for record in records] == ["estimate", "estimate", "total"]
    assert records[0]["decided_state"] == "on"
    assert records[2]["total_estimated_power_w"] == 200.0


def test_staged_output_commits_on_success(tmp_path):
    out = tmp_path / "out"
    with StagedOutput(str(out)) as output:
        FileWriter().write_json({"ok": True}, output.path("summary.json"))
        assert not out.exists()

    assert json.loads((out / "summary.json").read_text(encoding="utf-8")) == {"ok": True}
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".nilm-staging-")] == []


def test_staged_output_discards_on_failure(tmp_path):
    out = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with StagedOutput(str(out)) as output:
            FileWriter().write_json({"ok": False}, output.path("summary.json"))
            raise RuntimeError("stage failed")

    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == []


def test_write_table_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        FileWriter().write_table([{"a": 1}], str(tmp_path / "t.xml"), "xml", "row")


@pytest.mark.parametrize("output_format", ["csv", "jsonl"])
def test_update_states_keep_last_snapshot_per_day(tmp_path, output_format):
    rows = [
        {"day": 0, "model_count": 2, "model_powers": "A0001:200.0 A0002:800.5"},
        {"day": 0, "model_count": 1, "model_powers": "A0001:201.25"},
        {"day": 1, "model_count": 0, "model_powers": ""}
    ]
    path = tmp_path / f"update_reports.{output_format}"
    FileWriter().write_table(rows, str(path), output_format, "update", ["day", "model_count", "model_powers"])

    assert FileParser().read_update_states(str(path)) == {0: [201.25], 1: []}


def test_malformed_update_snapshot_is_data_error(tmp_path):
    path = tmp_path / "update_reports.csv"
    path.write_text("day,model_powers\n0,A0001\n", encoding="utf-8")
    with pytest.raises(DataValidationError):
        FileParser().read_update_states(str(path))
