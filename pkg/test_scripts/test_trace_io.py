"""
Tests for trace loading, resampling and synthetic trace generation.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.error_handler import ConfigurationError, DataValidationError, TraceParseError
from app.core.trace_io import (
    clamp_negative,
    generate_synthetic,
    load_channel_files,
    load_redd_house,
    resample_channel,
    validate_trace
)
from app.models.trace import GroundTruthTrace
from conftest import spec


def write_channel(path, rows):
    with open(path, 'w', encoding='utf-8') as channel_file:
        for timestamp, power in rows:
            channel_file.write(f"{timestamp} {power}\n")
    return str(path)


def test_two_constant_channels_sum(tmp_path):
    first = write_channel(tmp_path / "channel_1.dat", [(t, 100.0) for t in range(1000, 1060)])
    second = write_channel(tmp_path / "channel_2.dat", [(t, 200.0) for t in range(1000, 1060)])

    trace = load_channel_files([first, second], [0, 1], ["lamp", "fridge"])

    assert len(trace) == 60
    assert np.all(trace.aggregate == 300.0)
    assert trace.labels == ["lamp", "fridge"]
    validate_trace(trace)


def test_resample_forward_fills_short_gap():
    resampled, gaps = resample_channel(
        np.array([0, 1, 3]), np.array([100.0, 100.0, 100.0]), np.arange(4), "lamp"
    )

    assert resampled.tolist() == [100.0, 100.0, 100.0, 100.0]
    assert gaps == []


def test_resample_reports_long_gap_and_zeroes_it():
    timestamps = np.array([0, 1, 30, 31])
    resampled, gaps = resample_channel(timestamps, np.full(4, 50.0), np.arange(32), "oven", max_fill_gap=20)

    assert len(gaps) == 1
    assert (gaps[0].start, gaps[0].end) == (1, 30)
    assert np.all(resampled[2:30] == 0.0)
    assert resampled[0] == resampled[1] == resampled[30] == resampled[31] == 50.0


def test_resample_drops_duplicate_timestamps_keeping_first():
    resampled, _ = resample_channel(np.array([0, 1, 1, 2]), np.array([10.0, 20.0, 99.0, 30.0]), np.arange(3))
    assert resampled.tolist() == [10.0, 20.0, 30.0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 20), st.floats(0, 3000)), min_size=2, max_size=60))
def test_resampling_preserves_energy_of_gap_free_channel(steps):
    timestamps = np.cumsum([0] + [delta for delta, _ in steps[:-1]])
    power = np.array([value for _, value in steps])
    grid = np.arange(timestamps[0], timestamps[-1] + 1)

    resampled, gaps = resample_channel(timestamps, power, grid)

    expected = float(np.sum(power[:-1] * np.diff(timestamps)) + power[-1])
    assert gaps == []
    assert abs(resampled.sum() - expected) <= power.max() + 1e-6


def test_clamp_negative_counts_readings():
    clamped, count = clamp_negative(np.array([5.0, -1.0, 0.0, -0.5]), "mains")
    assert count == 2
    assert clamped.tolist() == [5.0, 0.0, 0.0, 0.0]


def test_negative_readings_are_clamped_on_load(tmp_path):
    path = write_channel(tmp_path / "channel_1.dat", [(0, 10.0), (1, -3.0), (2, 10.0)])
    trace = load_channel_files([path], [0])
    assert trace.clamped_count == 1
    assert trace.aggregate.tolist() == [10.0, 0.0, 10.0]


def test_empty_channel_selection_is_rejected(tmp_path):
    path = write_channel(tmp_path / "channel_1.dat", [(0, 1.0)])
    with pytest.raises(ConfigurationError):
        load_channel_files([path], [])


def test_out_of_range_channel_is_rejected(tmp_path):
    path = write_channel(tmp_path / "channel_1.dat", [(0, 1.0)])
    with pytest.raises(ConfigurationError):
        load_channel_files([path], [0, 3])


def test_malformed_line_names_file_and_line(tmp_path):
    path = tmp_path / "channel_1.dat"
    path.write_text("0 10\n1 ten\n2 10\n", encoding="utf-8")

    with pytest.raises(TraceParseError) as excinfo:
        load_channel_files([str(path)], [0])
    assert excinfo.value.line_number == 2
    assert str(path) in str(excinfo.value)


def test_redd_house_directory(tmp_path):
    write_channel(tmp_path / "channel_3.dat", [(t, 2000.0) for t in range(100, 200)])
    write_channel(tmp_path / "channel_5.dat", [(t, 150.0) for t in range(90, 190)])

    trace = load_redd_house(str(tmp_path), [3, 5], ["oven", "refrigerator"])

    # Grid is the common span of the selected channels
    assert trace.start == 100
    assert len(trace) == 90
    assert np.all(trace.aggregate == 2150.0)


def test_never_active_appliance_gives_noise_only():
    trace = generate_synthetic([spec("idle", 500.0, noise_stddev=2.0)], days=1, seed=3)

    assert len(trace) == 86400
    assert np.all(trace.per_appliance["idle"] == 0.0)
    assert np.all(np.abs(trace.aggregate) <= trace.noise_bound)
    validate_trace(trace)


def test_overlapping_appliances_add_up():
    specs = [
        spec("fridge", 200.0, mean_on_duration=4000, activations_per_day=30),
        spec("kettle", 800.0, mean_on_duration=4000, activations_per_day=30)
    ]
    trace = generate_synthetic(specs, days=1, seed=5)

    both = (trace.per_appliance["fridge"] > 0) & (trace.per_appliance["kettle"] > 0)
    assert both.any()
    assert np.all(trace.aggregate[both] == 1000.0)


def test_same_seed_gives_identical_traces(week_specs):
    first = generate_synthetic(week_specs, days=1, seed=42)
    second = generate_synthetic(week_specs, days=1, seed=42)

    assert np.array_equal(first.aggregate, second.aggregate)
    for label in first.labels:
        assert np.array_equal(first.per_appliance[label], second.per_appliance[label])


def test_generator_preconditions():
    with pytest.raises(ConfigurationError):
        generate_synthetic([spec("a", 100.0)], days=0, seed=0)
    with pytest.raises(ConfigurationError):
        generate_synthetic([], days=1, seed=0)


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_aggregate_stays_within_noise_bound_of_appliance_sum(seed):
    specs = [
        spec("fridge", 200.0, mean_on_duration=900, activations_per_day=8, noise_stddev=3.0),
        spec("heater", 1500.0, mean_on_duration=900, activations_per_day=8, noise_stddev=4.0)
    ]
    trace = generate_synthetic(specs, days=1, seed=seed)

    residual = np.abs(trace.aggregate - sum(trace.per_appliance.values()))
    assert trace.noise_bound == pytest.approx(6 * 5.0)
    assert residual.max() <= trace.noise_bound + 1e-9
    validate_trace(trace)


def test_validator_rejects_broken_grid():
    trace = GroundTruthTrace(timestamps=np.array([0, 1, 3]), aggregate=np.zeros(3))
    with pytest.raises(DataValidationError):
        validate_trace(trace)


def test_validator_rejects_negative_power():
    trace = GroundTruthTrace(timestamps=np.arange(3), aggregate=np.array([0.0, -1.0, 0.0]))
    with pytest.raises(DataValidationError):
        validate_trace(trace)


def test_validator_checks_sum_only_when_asked():
    trace = GroundTruthTrace(
        timestamps=np.arange(3),
        aggregate=np.array([10.0, 10.0, 10.0]),
        per_appliance={"lamp": np.zeros(3)}
    )
    with pytest.raises(DataValidationError):
        validate_trace(trace)
    validate_trace(trace, check_sum=False)
