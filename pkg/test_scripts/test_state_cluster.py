"""
Tests for the edge-pair histogram and its segmentation into power states.
"""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from app.core.state_cluster import build_histogram, segment
from app.models.edges import EdgePair
from app.models.settings import ClusterConfig
from app.models.states import StateHistogram


def pairs_of(magnitudes, duration=60):
    return [EdgePair(on_time=0, off_time=duration, magnitude=float(m)) for m in magnitudes]


def histogram_with(counts_by_bin):
    histogram = StateHistogram()
    for index, count in counts_by_bin.items():
        histogram.counts[index] = count
    return histogram


def test_empty_pairs_give_empty_histogram():
    histogram = build_histogram([])
    assert histogram.n_bins == 600
    assert histogram.counts.sum() == 0
    assert histogram.overflow_count == 0


def test_bin_assignment_by_hand():
    histogram = build_histogram(pairs_of([198, 202, 795]))
    assert histogram.counts[39] == 1
    assert histogram.counts[40] == 1
    assert histogram.counts[159] == 1
    assert histogram.counts.sum() == 3


def test_out_of_range_magnitude_overflows():
    histogram = build_histogram(pairs_of([3200]))
    assert histogram.overflow_count == 1
    assert histogram.counts.sum() == 0
    assert histogram.total == 1


def test_bin_index_matches_floor_for_every_watt():
    magnitudes = np.arange(0, 3000)
    histogram = build_histogram(pairs_of(magnitudes))

    assert all(histogram.bin_index(float(m)) == m // 5 for m in magnitudes)
    assert np.all(histogram.counts == 5)


def test_durations_accumulate_per_bin():
    histogram = build_histogram(pairs_of([200, 201], duration=100) + pairs_of([202], duration=50))
    assert histogram.duration_sums[40] == 250.0


def test_empty_histogram_has_no_states():
    assert segment(StateHistogram()) == []


def test_weighted_mean_of_adjacent_bins():
    (state,) = segment(histogram_with({39: 4, 40: 6}), ClusterConfig(min_support=2))
    assert state.nominal_power == pytest.approx((197.5 * 4 + 202.5 * 6) / 10)
    assert state.nominal_power == pytest.approx(200.5)
    assert state.support == 10
    assert state.bin_span == (39, 40)


def test_low_support_cluster_is_dropped():
    states = segment(histogram_with({40: 5, 160: 1}), ClusterConfig(min_support=2))
    assert len(states) == 1
    assert states[0].nominal_power == pytest.approx(202.5)


def test_gap_of_fewer_empty_bins_joins_clusters():
    # Bins 40 and 42 have one empty bin between them, 42 and 46 have three
    states = segment(histogram_with({40: 2, 42: 2, 46: 2}), ClusterConfig(gap_bins=2))
    assert [state.bin_span for state in states] == [(40, 42), (46, 46)]


def test_planted_states_are_recovered():
    rng = np.random.default_rng(0)
    planted = [200.0, 800.0, 1500.0]
    magnitudes = np.concatenate([rng.normal(power, 5.0, 30) for power in planted])

    states = segment(build_histogram(pairs_of(magnitudes)))

    assert len(states) == 3
    for state, power in zip(states, planted):
        assert abs(state.nominal_power - power) <= 10.0


@given(st.lists(st.floats(0, 3500), max_size=80), st.integers(1, 4), st.integers(1, 4))
def test_support_is_conserved(magnitudes, min_support, gap_bins):
    config = ClusterConfig(min_support=min_support, gap_bins=gap_bins)
    histogram = build_histogram(pairs_of(magnitudes), config)
    states = segment(histogram, config)
    again = segment(histogram, config)

    assert histogram.total == len(magnitudes)
    assert sum(state.support for state in states) <= histogram.counts.sum()
    assert [state.nominal_power for state in states] == sorted(state.nominal_power for state in states)
    assert all(state.support >= min_support for state in states)
    assert states == again
