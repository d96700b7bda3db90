"""
Edge detection on the filtered stream, LIFO edge pairing and the sliding
time windows the detection runs on.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.models.edges import EdgeDirection, EdgeEvent, EdgePair
from app.models.settings import EdgeConfig

logger = logging.getLogger(__name__)

# Samples adjacent to the steepest difference still belong to the transition
# while they move the same way by at least this share of the threshold
TRANSITION_FRACTION = 0.1


@dataclass(frozen=True)
class TraceWindow:
    """One sliding window; `start`/`stop` are half-open sample indices."""
    index: int
    start_time: int
    end_time: int
    start: int
    stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


def level_differences(filtered: np.ndarray, ma_window: int) -> np.ndarray:
    """
    Moving-average level change at every sample boundary.

    Entry j compares the mean of the `ma_window` samples from j + 1 onwards with
    the mean of the `ma_window` samples up to j; both windows shrink at the ends.
    """
    n = len(filtered)
    if n < 2:
        return np.zeros(0)

    cumulative = np.concatenate(([0.0], np.cumsum(filtered)))
    k = np.arange(1, n)
    left = np.minimum(ma_window, k)
    right = np.minimum(ma_window, n - k)
    after = (cumulative[k + right] - cumulative[k]) / right
    before = (cumulative[k] - cumulative[k - left]) / left
    return after - before


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open index ranges of the True runs in `mask`."""
    padded = np.concatenate(([False], mask, [False]))
    changes = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(changes[::2].tolist(), changes[1::2].tolist()))


def _transition(steps: np.ndarray, pivot: int, sign: float, minimum_step: float) -> Tuple[int, int]:
    """Widen the boundary `pivot` over neighbouring steps that move the same way."""
    first, last = pivot, pivot
    while first > 0 and sign * steps[first - 1] >= minimum_step:
        first -= 1
    while last < len(steps) - 1 and sign * steps[last + 1] >= minimum_step:
        last += 1
    return first, last


def _run_transitions(steps: np.ndarray, run_start: int, run_stop: int, sign: float,
                     threshold: float) -> List[Tuple[int, int]]:
    """
    Transitions inside one above-threshold run.

    The steepest step always yields a transition. Further transitions are kept
    when their own summed step reaches the threshold, so a short plateau between
    two steps in the same direction still gives two edges.
    """
    minimum_step = threshold * TRANSITION_FRACTION
    pivot = run_start + int(np.argmax(sign * steps[run_start:run_stop]))
    if sign * steps[pivot] <= 0:
        return []

    transitions = [_transition(steps, pivot, sign, minimum_step)]
    j = run_start
    while j < run_stop:
        if sign * steps[j] < minimum_step or any(first <= j <= last for first, last in transitions):
            j += 1
            continue
        first, last = _transition(steps, j, sign, minimum_step)
        if sign * steps[first:last + 1].sum() >= threshold:
            transitions.append((first, last))
        j = last + 1
    return sorted(transitions)


def detect_edges(timestamps, filtered, edge_config: Optional[EdgeConfig] = None) -> List[EdgeEvent]:
    """
    Detect rising and falling edges by moving-average thresholding.

    Each run of boundaries whose level change exceeds the threshold with one
    sign yields an edge at its steepest single-sample step, plus one edge for
    every other same-direction transition in the run that reaches the threshold
    on its own. A transition is widened over neighbouring steps in the same
    direction; pre/post levels are `ma_window` means on either side of it,
    clipped at the neighbouring transitions of the run.

    Args:
        timestamps: Sample timestamps (1 Hz, gap-free)
        filtered: Preprocessed power in watts
        edge_config (EdgeConfig, optional): Detection settings

    Returns:
        List[EdgeEvent]: Edges in time order, each with magnitude >= edge_threshold
    """
    edge_config = edge_config or EdgeConfig()
    timestamps = np.asarray(timestamps, dtype=np.int64)
    filtered = np.asarray(filtered, dtype=np.float64)
    n = len(filtered)
    if n < 2:
        return []

    threshold = edge_config.edge_threshold
    w = edge_config.ma_window
    steps = np.diff(filtered)
    levels = level_differences(filtered, w)

    edges = []
    for sign in (1.0, -1.0):
        for run_start, run_stop in _runs(sign * levels >= threshold):
            # levels[j] and steps[j] both describe the boundary between samples j and j+1
            transitions = _run_transitions(steps, run_start, run_stop, sign, threshold)
            for k, (first, last) in enumerate(transitions):
                before_end = first
                after_start = last + 1
                before_floor = transitions[k - 1][1] + 1 if k > 0 else 0
                after_ceiling = transitions[k + 1][0] + 1 if k + 1 < len(transitions) else n
                pre_level = float(filtered[max(before_floor, before_end - w + 1):before_end + 1].mean())
                post_level = float(filtered[after_start:min(after_ceiling, after_start + w)].mean())
                magnitude = abs(post_level - pre_level)

                if magnitude < threshold or sign * (post_level - pre_level) <= 0:
                    continue

                edges.append(EdgeEvent(
                    time=int(timestamps[after_start]),
                    direction=EdgeDirection.RISING if sign > 0 else EdgeDirection.FALLING,
                    magnitude=magnitude,
                    pre_level=pre_level,
                    post_level=post_level
                ))

    edges.sort(key=lambda edge: (edge.time, edge.direction.value))
    return edges


def pair_edges(edges: Sequence[EdgeEvent],
               edge_config: Optional[EdgeConfig] = None) -> Tuple[List[EdgePair], List[EdgeEvent]]:
    """
    Match falling edges to earlier rising edges of compatible magnitude.

    Rising edges go on a stack. A falling edge takes the most recent stacked
    rising edge whose magnitude differs by at most
    max(pair_tolerance_w, pair_tolerance_fraction * larger magnitude);
    incompatible rising edges stay on the stack for later falling edges.

    Args:
        edges (Sequence[EdgeEvent]): Edges sorted by time
        edge_config (EdgeConfig, optional): Pairing tolerances

    Returns:
        Tuple[List[EdgePair], List[EdgeEvent]]: Pairs in order of their falling
        edge, and the unmatched edges sorted by time
    """
    edge_config = edge_config or EdgeConfig()
    stack: List[EdgeEvent] = []
    pairs: List[EdgePair] = []
    unmatched: List[EdgeEvent] = []

    for edge in edges:
        if edge.is_rising:
            stack.append(edge)
            continue

        match = None
        for position in range(len(stack) - 1, -1, -1):
            rising = stack[position]
            tolerance = edge_config.pair_tolerance(max(rising.magnitude, edge.magnitude))
            if abs(rising.magnitude - edge.magnitude) <= tolerance and edge.time > rising.time:
                match = stack.pop(position)
                break

        if match is None:
            unmatched.append(edge)
        else:
            pairs.append(EdgePair.from_edges(match, edge))

    unmatched.extend(stack)
    unmatched.sort(key=lambda edge: edge.time)
    return pairs, unmatched


def sliding_windows(timestamps, window_length: int, step: Optional[int] = None,
                    min_tail: int = 3600) -> Iterator[TraceWindow]:
    """
    Split a trace into consecutive windows of `window_length` seconds.

    Windows start every `step` seconds (tumbling when step equals the length).
    A final partial window is yielded when it adds at least `min_tail`
    seconds not covered by an earlier window.

    Args:
        timestamps: Sorted sample timestamps
        window_length (int): Window length in seconds
        step (int, optional): Window step in seconds, defaults to the length
        min_tail (int): Shortest partial window worth yielding

    Yields:
        TraceWindow: Windows in chronological order
    """
    step = step or window_length
    if step > window_length:
        raise ValueError("step must not exceed window_length")

    timestamps = np.asarray(timestamps, dtype=np.int64)
    if len(timestamps) == 0:
        return

    origin = int(timestamps[0])
    last_time = int(timestamps[-1]) + 1
    index = 0
    covered_until = origin
    window_start = origin

    while window_start + window_length <= last_time:
        window_end = window_start + window_length
        yield _window(timestamps, index, window_start, window_end)
        covered_until = window_end
        index += 1
        window_start += step

    if last_time - covered_until >= min_tail:
        yield _window(timestamps, index, window_start, last_time)


def _window(timestamps: np.ndarray, index: int, start_time: int, end_time: int) -> TraceWindow:
    start, stop = np.searchsorted(timestamps, [start_time, end_time])
    return TraceWindow(index=index, start_time=start_time, end_time=end_time, start=int(start), stop=int(stop))
