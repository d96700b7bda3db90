"""
Tests for the online pipeline: causal model updates, streaming equivalence,
gap handling, error wrapping and the end-to-end acceptance runs.
"""
import numpy as np
import pytest

from app.core.error_handler import InputError, OrderingError, StageError
from app.core.evaluation import evaluate
from app.core.pipeline import OnlinePipeline, gap_mask, run_online
from app.models.trace import GapReport
from conftest import PLANTED_POWERS, small_config, step_trace

# Three 500 W activations in one hour
HOUR_OF_ACTIVATIONS = [(0, 300), (500, 600), (0, 600), (500, 600), (0, 600), (500, 600), (0, 300)]


def test_flat_zero_learns_nothing():
    result = run_online(step_trace([(0, 7200)]), small_config())

    assert len(result.database) == 0
    assert len(result.windows) == 2
    assert not result.estimates.total_power.any()
    assert len(result.estimates) == 7200


def test_first_window_runs_without_models():
    trace = step_trace(HOUR_OF_ACTIVATIONS * 2)
    result = run_online(trace, small_config())

    first, second = result.estimates.blocks
    assert first.appliance_ids == ()
    assert len(first) == 3600
    assert second.appliance_ids == ("A0001",)
    assert second.on_powers[0] == pytest.approx(500.0, abs=5.0)

    per_sample = list(result.estimates.estimates())
    assert [estimate.timestamp for estimate in per_sample] == list(range(7200))
    assert per_sample[3600].per_appliance["A0001"].on_power == second.on_powers[0]


def test_update_is_visible_from_next_sample():
    trace = step_trace(HOUR_OF_ACTIVATIONS * 2)
    pipeline = OnlinePipeline(small_config())

    for timestamp, power in zip(trace.timestamps[:3599].tolist(), trace.aggregate[:3599].tolist()):
        pipeline.push(timestamp, power)
    assert len(pipeline.database) == 0

    last = pipeline.push(3599, float(trace.aggregate[3599]))
    assert last.per_appliance == {}
    assert len(pipeline.database) == 1

    following = pipeline.push(3600, float(trace.aggregate[3600]))
    assert list(following.per_appliance) == ["A0001"]


def test_push_and_feed_agree():
    trace = step_trace(HOUR_OF_ACTIVATIONS * 2 + [(0, 900)])

    streamed = OnlinePipeline(small_config())
    pushed = [
        streamed.push(sample.timestamp, sample.power).total_estimated_power for sample in trace.samples()
    ]
    streamed.finish()

    batch = OnlinePipeline(small_config())
    batch.feed(trace.timestamps, trace.aggregate)
    batch.finish()

    assert pushed == batch.estimates.total_power.tolist()
    assert [w.model_powers for w in streamed.windows] == [w.model_powers for w in batch.windows]
    assert streamed.database == batch.database


def test_feed_in_uneven_chunks_matches_one_feed():
    trace = step_trace(HOUR_OF_ACTIVATIONS * 3)

    whole = OnlinePipeline(small_config())
    whole.feed(trace.timestamps, trace.aggregate)

    chunked = OnlinePipeline(small_config())
    for start, stop in [(0, 1000), (1000, 3600), (3600, 3601), (3601, 10800)]:
        chunked.feed(trace.timestamps[start:stop], trace.aggregate[start:stop])

    assert np.array_equal(whole.estimates.total_power, chunked.estimates.total_power)
    assert whole.database == chunked.database


def test_out_of_order_sample_is_rejected():
    pipeline = OnlinePipeline(small_config())
    pipeline.push(10, 0.0)
    with pytest.raises(OrderingError):
        pipeline.push(10, 0.0)
    with pytest.raises(OrderingError):
        pipeline.feed([20, 15], [0.0, 0.0])


def test_same_config_gives_identical_runs():
    trace = step_trace(HOUR_OF_ACTIVATIONS * 3)
    first = run_online(trace, small_config())
    second = run_online(trace, small_config())

    assert np.array_equal(first.estimates.total_power, second.estimates.total_power)
    assert first.database == second.database


def test_negative_power_names_the_failing_stage():
    trace = step_trace([(0, 100), (-5, 1), (0, 100)])
    with pytest.raises(StageError) as excinfo:
        run_online(trace, small_config())

    assert excinfo.value.stage == "disaggregate"
    assert isinstance(excinfo.value.cause, InputError)


def test_no_pair_straddles_a_gap():
    # On at 300 s, the off edge falls inside the gap; two clean 800 W activations follow
    trace = step_trace([(0, 300), (500, 700), (0, 1100), (800, 300), (0, 300), (800, 300), (0, 600)])
    trace.gaps = [GapReport(channel="mains", start=800, end=1500)]
    assert not gap_mask(trace)[801:1500].any()

    result = run_online(trace, small_config(), disaggregate=False)
    pairs = result.windows[0].pairs

    assert len(pairs) == 2
    assert all(pair.magnitude == pytest.approx(800.0, abs=5.0) for pair in pairs)
    assert not any(pair.on_time < 1500 and pair.off_time > 800 for pair in pairs)
    assert any(edge.is_rising and abs(edge.time - 300) <= 20 for edge in result.windows[0].edges)


def test_activation_across_window_boundary_is_paired_once():
    trace = step_trace([(0, 3000), (700, 1200), (0, 3000)])
    result = run_online(trace, small_config(), disaggregate=False)

    assert result.windows[0].pairs == []
    (pair,) = result.windows[1].pairs
    assert abs(pair.on_time - 3000) <= 20
    assert abs(pair.off_time - 4200) <= 20
    assert pair.magnitude == pytest.approx(700.0, abs=5.0)


def test_short_tail_is_not_learned():
    result = run_online(step_trace([(0, 3600 + 300)]), small_config())
    assert len(result.windows) == 1


def test_long_enough_tail_is_learned():
    result = run_online(step_trace(HOUR_OF_ACTIVATIONS + [(0, 900)]), small_config())
    assert len(result.windows) == 2
    assert result.windows[-1].end == 4500


def test_sink_receives_estimates():
    received = []
    result = run_online(step_trace(HOUR_OF_ACTIVATIONS * 2), small_config(), sink=received.append)

    assert sum(len(block) for block in received) == 7200
    assert len(result.estimates) == 0


def test_learning_recovers_planted_states(week_learning):
    second_day = week_learning.windows[1]
    powers = sorted(power for _, power in second_day.model_powers)

    assert len(powers) == 3
    for power, planted in zip(powers, PLANTED_POWERS):
        assert abs(power - planted) <= 25.0

    assert len(week_learning.database) == 3
    assert len(week_learning.reports) == 7
    assert [report.day for report in week_learning.reports] == list(range(7))


@pytest.mark.slow
def test_week_energy_is_accounted(week_run, week_trace):
    report = evaluate(week_run.estimates, week_trace, PLANTED_POWERS,
                      states_per_day=week_run.states_per_day())

    assert report.energy_error_fraction <= 0.05
    assert report.unknown_share <= 0.15
    assert all(report.states_assignable_per_day[day] == 3 for day in range(1, 7))
