"""
Tests for median de-noising, smoothing and segment splitting.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.error_handler import ConfigurationError
from app.core.preprocess import median_filter, moving_average, smooth, split_segments
from app.models.settings import FilterConfig

plateaus = st.lists(
    st.tuples(st.integers(0, 3000).map(float), st.integers(31, 80)),
    min_size=1,
    max_size=4
)


def piecewise(segments):
    return np.concatenate([np.full(length, value) for value, length in segments])


def test_constant_input_is_unchanged():
    assert np.all(median_filter(np.full(100, 100.0), 31) == 100.0)


def test_single_spike_is_removed():
    samples = np.full(200, 100.0)
    samples[50] = 2000.0
    assert np.all(median_filter(samples, 31) == 100.0)


def test_spike_at_the_edges_is_removed():
    samples = np.full(100, 100.0)
    samples[[1, 98]] = 2000.0
    assert np.all(median_filter(samples, 31) == 100.0)


def test_clean_step_is_preserved_in_place():
    samples = np.concatenate([np.zeros(100), np.full(100, 500.0)])
    filtered = median_filter(samples, 31)

    assert np.array_equal(filtered, samples)
    assert int(np.flatnonzero(np.diff(filtered))[0]) + 1 == 100


@pytest.mark.parametrize("window", [2, 1, 30])
def test_invalid_window_sizes(window):
    with pytest.raises(ConfigurationError):
        median_filter(np.zeros(100), window)


def test_window_longer_than_input():
    with pytest.raises(ConfigurationError):
        median_filter(np.zeros(20), 31)


def test_smoothing_none_equals_median_filter():
    rng = np.random.default_rng(1)
    samples = 300.0 + rng.normal(0.0, 5.0, 500)
    config = FilterConfig(smoothing="none")
    assert np.array_equal(smooth(samples, config), median_filter(samples, config.median_window))


def test_smoothing_reduces_noise_on_constant_load():
    rng = np.random.default_rng(2)
    samples = 300.0 + rng.normal(0.0, 5.0, 2000)
    smoothed = smooth(samples)
    assert np.abs(smoothed - 300.0).max() < np.abs(samples - 300.0).max()


def test_moving_average_shrinks_at_the_ends():
    averaged = moving_average(np.array([0.0, 10.0, 20.0, 30.0, 40.0]), 5)
    assert averaged.tolist() == [0.0, 10.0, 20.0, 30.0, 40.0]
    averaged = moving_average(np.array([0.0, 0.0, 30.0, 0.0, 0.0]), 3)
    assert averaged.tolist() == [0.0, 10.0, 10.0, 10.0, 0.0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 5000), min_size=31, max_size=300))
def test_output_stays_within_input_range(values):
    samples = np.array(values)
    smoothed = smooth(samples)

    assert len(smoothed) == len(samples)
    assert smoothed.min() >= samples.min()
    assert smoothed.max() <= samples.max()


@settings(max_examples=60, deadline=None)
@given(plateaus)
def test_median_filter_is_idempotent_on_long_plateaus(segments):
    samples = piecewise(segments)
    once = median_filter(samples, 31)

    assert np.array_equal(median_filter(once, 31), once)
    assert np.array_equal(once, samples)


def test_split_segments_on_timestamp_jump():
    assert split_segments([0, 1, 2, 5, 6]) == [(0, 3), (3, 5)]


def test_split_segments_on_invalid_samples():
    valid = [True, True, False, False, True]
    assert split_segments([0, 1, 2, 3, 4], valid) == [(0, 2), (4, 5)]


def test_split_segments_empty():
    assert split_segments([]) == []
