"""
Online pipeline: window-wise learning (filter, edges, pairs, histogram,
states, database update) interleaved with per-sample particle filtering.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from app.core.appliance_db import ApplianceDatabase, snapshot_powers
from app.core.disaggregator import ParticleFilter
from app.core.edge_detect import detect_edges, pair_edges
from app.core.error_handler import OrderingError, StageError
from app.core.preprocess import smooth, split_segments
from app.core.state_cluster import build_histogram, segment
from app.models.appliance import UpdateReport
from app.models.edges import EdgeEvent, EdgePair
from app.models.estimate import DisaggregationEstimate, EstimateBlock, EstimateStream
from app.models.settings import PipelineConfig
from app.models.states import PowerState, StateHistogram
from app.models.trace import GroundTruthTrace
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400

EstimateSink = Callable[[EstimateBlock], None]


@dataclass
class WindowSummary:
    """What the learning stages saw and changed in one window."""
    index: int
    start: int
    end: int
    day: int
    edges: List[EdgeEvent] = field(default_factory=list)
    pairs: List[EdgePair] = field(default_factory=list)
    histogram: Optional[StateHistogram] = None
    states: List[PowerState] = field(default_factory=list)
    report: Optional[UpdateReport] = None
    model_powers: List[Tuple[str, float]] = field(default_factory=list)

    def state_rows(self):
        return [
            {"window": self.index, "day": self.day, **state.to_dict()}
            for state in self.states
        ]


@dataclass
class PipelineResult:
    """Outcome of a full run."""
    estimates: EstimateStream
    database: ApplianceDatabase
    reports: List[UpdateReport] = field(default_factory=list)
    windows: List[WindowSummary] = field(default_factory=list)

    @property
    def histogram(self) -> Optional[StateHistogram]:
        """All windows' histograms summed."""
        histograms = [window.histogram for window in self.windows if window.histogram is not None]
        if not histograms:
            return None
        total = histograms[0]
        for histogram in histograms[1:]:
            total = total.merge(histogram)
        return total

    def states_per_day(self) -> Dict[int, List[float]]:
        """Model on-powers held after the last update of each day."""
        per_day = {}
        for window in self.windows:
            per_day[window.day] = sorted(power for _, power in window.model_powers)
        return per_day


class _Stage:
    """Wraps failures of one stage into a StageError naming it."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, StageError):
            return False
        raise StageError(self.name, exc) from exc


class OnlinePipeline(LoggerMixin):
    """
    Streaming disaggregator.

    Samples are filtered with the FHMM of the current database. Whenever a
    window closes, its samples are run through the learning stages and the
    database update becomes visible to the filter from the next sample on.
    `push` and `feed` share one code path, so streaming and batch replay
    give identical results.
    """

    def __init__(self, pipeline_config: Optional[PipelineConfig] = None,
                 initial_db: Optional[ApplianceDatabase] = None,
                 sink: Optional[EstimateSink] = None, disaggregate: bool = True,
                 keep_edges: bool = True):
        self.config = pipeline_config or PipelineConfig()
        self.database = initial_db if initial_db is not None else ApplianceDatabase(self.config.db)
        self.sink = sink
        self.disaggregate = disaggregate
        self.keep_edges = keep_edges

        self.filter = ParticleFilter(self.database.compose_fhmm(), self.config.pf) if disaggregate else None
        self.estimates = EstimateStream()
        self.reports: List[UpdateReport] = []
        self.windows: List[WindowSummary] = []

        self._base_day = self.database.current_day
        self._origin: Optional[int] = None
        self._last_timestamp: Optional[int] = None
        self._next_end: Optional[int] = None
        self._covered_until: Optional[int] = None
        self._buffer: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._carry: List[EdgeEvent] = []
        self._carry_until: Optional[int] = None

    @property
    def window_length(self) -> int:
        return self.config.edges.window_length

    @property
    def window_step(self) -> int:
        return self.config.edges.step

    def push(self, timestamp: int, power: float, valid: bool = True) -> DisaggregationEstimate:
        """
        Process one sample and return its estimate.

        Args:
            timestamp (int): Sample time in seconds, strictly increasing
            power (float): Aggregate power in watts
            valid (bool): False for samples inside a recording gap

        Returns:
            DisaggregationEstimate: Estimate made with the models known before this sample
        """
        blocks = self._process(
            np.array([timestamp], dtype=np.int64),
            np.array([power], dtype=np.float64),
            np.array([valid], dtype=bool)
        )
        if blocks:
            return blocks[0].estimate_at(0)
        return DisaggregationEstimate(timestamp=int(timestamp))

    def feed(self, timestamps, powers, valid=None) -> List[EstimateBlock]:
        """Process a run of samples; same semantics as pushing them one by one."""
        timestamps = np.asarray(timestamps, dtype=np.int64)
        powers = np.asarray(powers, dtype=np.float64)
        valid = np.ones(len(timestamps), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
        if not (len(timestamps) == len(powers) == len(valid)):
            raise ValueError("timestamps, powers and valid flags must have equal lengths")
        return self._process(timestamps, powers, valid)

    def _process(self, timestamps: np.ndarray, powers: np.ndarray, valid: np.ndarray) -> List[EstimateBlock]:
        if len(timestamps) == 0:
            return []
        self._check_order(timestamps)

        if self._origin is None:
            self._origin = int(timestamps[0])
            self._next_end = self._origin + self.window_length
            self._covered_until = self._origin

        blocks = []
        position = 0
        while position < len(timestamps):
            # Samples up to the end of the open window run under the current models
            stop = position + int(np.searchsorted(timestamps[position:], self._next_end))
            if stop > position:
                chunk = (timestamps[position:stop], powers[position:stop], valid[position:stop])
                self._buffer.append(chunk)
                block = self._estimate(chunk[0], chunk[1])
                if block is not None:
                    blocks.append(block)
                position = stop
            if position < len(timestamps) or self._last_buffered() == self._next_end - 1:
                self._close_window(self._next_end)

        self._last_timestamp = int(timestamps[-1])
        return blocks

    def _check_order(self, timestamps: np.ndarray):
        if len(timestamps) > 1 and np.any(np.diff(timestamps) <= 0):
            raise OrderingError("sample timestamps must be strictly increasing")
        if self._last_timestamp is not None and timestamps[0] <= self._last_timestamp:
            raise OrderingError(
                f"sample at {int(timestamps[0])} does not follow the previous sample at {self._last_timestamp}"
            )

    def _last_buffered(self) -> Optional[int]:
        return int(self._buffer[-1][0][-1]) if self._buffer else None

    def _estimate(self, timestamps: np.ndarray, powers: np.ndarray) -> Optional[EstimateBlock]:
        if self.filter is None:
            return None
        with _Stage("disaggregate"):
            block = self.filter.run_block(timestamps, powers)
        if self.sink is not None:
            self.sink(block)
        else:
            self.estimates.append(block)
        return block

    def _window_samples(self, start: int, end: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self._buffer:
            empty = np.zeros(0)
            return empty.astype(np.int64), empty, empty.astype(bool)
        timestamps = np.concatenate([chunk[0] for chunk in self._buffer])
        powers = np.concatenate([chunk[1] for chunk in self._buffer])
        valid = np.concatenate([chunk[2] for chunk in self._buffer])
        keep = (timestamps >= start) & (timestamps < end)
        return timestamps[keep], powers[keep], valid[keep]

    def _close_window(self, end: int):
        start = end - self.window_length
        timestamps, powers, valid = self._window_samples(start, end)
        self._learn(max(start, self._origin), end, timestamps, powers, valid)
        self._covered_until = end
        self._next_end = end + self.window_step

        # Keep only what the next window still needs
        next_start = self._next_end - self.window_length
        self._buffer = [
            tuple(part[chunk[0] >= next_start] for part in chunk)
            for chunk in self._buffer
        ]
        self._buffer = [chunk for chunk in self._buffer if len(chunk[0])]

    def finish(self) -> Optional[WindowSummary]:
        """
        Learn from the trailing partial window when it adds at least
        `min_partial_window` seconds; its update only affects later use of the database.
        """
        if self._last_timestamp is None:
            return None
        end = self._last_timestamp + 1
        if end - self._covered_until < self.config.edges.min_partial_window:
            return None
        start = self._next_end - self.window_length
        timestamps, powers, valid = self._window_samples(start, end)
        summary = self._learn(max(start, self._origin), end, timestamps, powers, valid)
        self._covered_until = end
        return summary

    def _learn(self, start: int, end: int, timestamps: np.ndarray, powers: np.ndarray,
               valid: np.ndarray) -> WindowSummary:
        started = time.time()
        day = self._base_day + (end - 1 - self._origin) // SECONDS_PER_DAY
        summary = WindowSummary(index=len(self.windows), start=start, end=end, day=day)

        edges, pairs = self._detect(timestamps, powers, valid)

        with _Stage("cluster"):
            histogram = build_histogram(pairs, self.config.cluster)
            states = segment(histogram, self.config.cluster)

        with _Stage("update"):
            report = self.database.update(states, day)

        if self.filter is not None:
            with _Stage("compose"):
                self.filter.rebind(self.database.compose_fhmm())

        if self.keep_edges:
            summary.edges = edges
            summary.pairs = pairs
        summary.histogram = histogram
        summary.states = states
        summary.report = report
        summary.model_powers = snapshot_powers(self.database)
        self.windows.append(summary)
        self.reports.append(report)

        self.logger.info(
            f"Window {summary.index} (day {day}): {len(edges)} edges, {len(pairs)} pairs, "
            f"{len(states)} states, {report.model_count} models ({time.time() - started:.2f} s)"
        )
        return summary

    def _detect(self, timestamps: np.ndarray, powers: np.ndarray,
                valid: np.ndarray) -> Tuple[List[EdgeEvent], List[EdgePair]]:
        """
        Filter, detect and pair per gap-free segment.

        Rising edges left open at a contiguous window end carry over to the next window once.
        """
        edges_found: List[EdgeEvent] = []
        pairs: List[EdgePair] = []
        segments = split_segments(timestamps, valid)
        window = self.config.filter.median_window
        carry, carry_until = self._carry, self._carry_until
        self._carry, self._carry_until = [], None

        for number, (first, stop) in enumerate(segments):
            if stop - first < window:
                self.logger.warning(
                    f"Skipped {stop - first}-sample segment at {int(timestamps[first])}: shorter than "
                    f"the {window}-sample median window"
                )
                continue

            with _Stage("preprocess"):
                filtered = smooth(powers[first:stop], self.config.filter)

            with _Stage("detect"):
                edges = detect_edges(timestamps[first:stop], filtered, self.config.edges)

            edges_found.extend(edges)
            candidates = edges
            # Carried edges only join a segment that continues right where they were left open
            if carry and carry_until is not None and int(timestamps[first]) == carry_until:
                candidates = carry + edges
            carry = []

            with _Stage("pair"):
                segment_pairs, unmatched = pair_edges(candidates, self.config.edges)
            pairs.extend(segment_pairs)

            reaches_end = number == len(segments) - 1 and stop == len(timestamps)
            if reaches_end and self.window_step == self.window_length:
                # Edges that already carried over once expire here
                fresh = set(edges)
                self._carry = [edge for edge in unmatched if edge.is_rising and edge in fresh]
                self._carry_until = int(timestamps[stop - 1]) + 1

        return edges_found, pairs

    def result(self) -> PipelineResult:
        return PipelineResult(
            estimates=self.estimates,
            database=self.database,
            reports=list(self.reports),
            windows=list(self.windows)
        )


def gap_mask(trace: GroundTruthTrace) -> np.ndarray:
    """True for samples outside every recorded loader gap."""
    valid = np.ones(len(trace), dtype=bool)
    for start, end in trace.gap_intervals:
        valid &= ~((trace.timestamps > start) & (trace.timestamps < end))
    return valid


def run_online(trace: GroundTruthTrace, pipeline_config: Optional[PipelineConfig] = None,
               initial_db: Optional[ApplianceDatabase] = None, sink: Optional[EstimateSink] = None,
               disaggregate: bool = True, keep_edges: bool = True) -> PipelineResult:
    """
    Run the full online pipeline over a trace.

    Args:
        trace (GroundTruthTrace): Input trace (only the aggregate is used)
        pipeline_config (PipelineConfig, optional): Stage settings
        initial_db (ApplianceDatabase, optional): Database to start from, empty if omitted
        sink (callable, optional): Receives every estimate block instead of the result
        disaggregate (bool): False runs only the learning stages
        keep_edges (bool): Keep per-window edges and pairs in the summaries

    Returns:
        PipelineResult: Estimates, final database, update reports and window summaries

    Raises:
        StageError: Naming the stage that failed
    """
    pipeline = OnlinePipeline(pipeline_config, initial_db, sink, disaggregate, keep_edges)
    started = time.time()

    pipeline.feed(trace.timestamps, trace.aggregate, gap_mask(trace))
    pipeline.finish()

    elapsed = time.time() - started
    logger.info(
        f"Processed {len(trace)} samples in {elapsed:.2f} s: {len(pipeline.windows)} windows, "
        f"{len(pipeline.database)} models"
    )
    return pipeline.result()
