"""
Trace input/output: REDD channel loading with 1 Hz resampling, the synthetic
ground-truth generator, and the PowerSample invariant validator.
"""
import logging
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.core.error_handler import ConfigurationError, DataValidationError
from app.models.trace import ApplianceSpec, GapReport, GroundTruthTrace
from app.utils.file_parser import FileParser

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
MAX_FILL_GAP = 20
NOISE_BOUND_SIGMAS = 6.0


def clamp_negative(power: np.ndarray, channel: str = "") -> Tuple[np.ndarray, int]:
    """Clamp negative readings to 0 W; returns the clamped series and how many were clamped."""
    negative = power < 0
    count = int(negative.sum())
    if count:
        logger.warning(f"Clamped {count} negative readings to 0 W in channel {channel or '<unnamed>'}")
        power = np.where(negative, 0.0, power)
    return power, count


def resample_channel(timestamps: np.ndarray, power: np.ndarray, grid: np.ndarray,
                     channel: str = "", max_fill_gap: int = MAX_FILL_GAP) -> Tuple[np.ndarray, List[GapReport]]:
    """
    Resample one channel onto an exact 1 Hz grid.

    Readings are forward-filled across gaps of at most `max_fill_gap` seconds;
    longer gaps are reported and their interior is set to 0 W.

    Args:
        timestamps (np.ndarray): Raw integer timestamps
        power (np.ndarray): Raw readings
        grid (np.ndarray): Target 1 Hz timestamps
        channel (str): Channel name used in gap reports
        max_fill_gap (int): Longest gap (seconds) that is forward-filled

    Returns:
        Tuple[np.ndarray, List[GapReport]]: Power on the grid and the gap reports
    """
    series = pd.Series(power, index=pd.Index(timestamps, name="timestamp"))
    series = series[~series.index.duplicated(keep="first")].sort_index()

    dropped = len(power) - len(series)
    if dropped:
        logger.warning(f"Dropped {dropped} duplicate timestamps in channel {channel or '<unnamed>'}")

    resampled = series.reindex(pd.Index(grid)).ffill()

    gaps = []
    stamps = series.index.to_numpy()
    deltas = np.diff(stamps)
    for i in np.flatnonzero(deltas > max_fill_gap):
        start, end = int(stamps[i]), int(stamps[i + 1])
        gaps.append(GapReport(channel=channel, start=start, end=end))
        inside = (grid > start) & (grid < end)
        resampled[inside] = 0.0

    if gaps:
        logger.warning(f"Channel {channel or '<unnamed>'}: {len(gaps)} gaps longer than {max_fill_gap} s")

    # Grid points before the first reading have nothing to fill from
    return resampled.fillna(0.0).to_numpy(dtype=np.float64), gaps


def load_channel_files(paths: Sequence[str], channel_selection: Sequence[int],
                       labels: Optional[Sequence[str]] = None,
                       max_fill_gap: int = MAX_FILL_GAP) -> GroundTruthTrace:
    """
    Load REDD-style channel files and build an aggregate trace on a 1 Hz grid.

    Args:
        paths (Sequence[str]): Channel file paths
        channel_selection (Sequence[int]): Indices into `paths` to aggregate
        labels (Sequence[str], optional): Appliance label per selected channel
        max_fill_gap (int): Longest forward-filled gap in seconds

    Returns:
        GroundTruthTrace: Aggregate = per-sample sum of the selected channels

    Raises:
        ConfigurationError: Empty or out-of-range selection
        TraceParseError: Malformed line in a channel file
    """
    if not channel_selection:
        raise ConfigurationError("channel selection must not be empty")
    for index in channel_selection:
        if index < 0 or index >= len(paths):
            raise ConfigurationError(f"channel index {index} out of range for {len(paths)} files")
    if labels is not None and len(labels) != len(channel_selection):
        raise ConfigurationError("labels must match the channel selection one-to-one")

    parser = FileParser()
    raw = []
    clamped_total = 0
    for position, index in enumerate(channel_selection):
        path = paths[index]
        label = labels[position] if labels else os.path.splitext(os.path.basename(path))[0]
        timestamps, power = parser.read_channel_file(path)
        if len(timestamps) == 0:
            raise DataValidationError(f"{path}: channel file has no readings")
        power, clamped = clamp_negative(power, label)
        clamped_total += clamped
        raw.append((label, timestamps, power))

    # Common span of all selected channels
    start = max(int(t.min()) for _, t, _ in raw)
    end = min(int(t.max()) for _, t, _ in raw)
    if end < start:
        raise DataValidationError("selected channels do not overlap in time")
    grid = np.arange(start, end + 1, dtype=np.int64)

    per_appliance = {}
    gaps = []
    for label, timestamps, power in raw:
        resampled, channel_gaps = resample_channel(timestamps, power, grid, label, max_fill_gap)
        per_appliance[label] = resampled
        gaps.extend(channel_gaps)

    aggregate = np.sum(list(per_appliance.values()), axis=0)

    logger.info(f"Loaded {len(channel_selection)} channels, {len(grid)} samples "
                f"({len(grid) / SECONDS_PER_DAY:.2f} days), {len(gaps)} gaps")

    return GroundTruthTrace(
        timestamps=grid,
        aggregate=aggregate,
        per_appliance=per_appliance,
        gaps=gaps,
        clamped_count=clamped_total
    )


def load_redd_house(house_dir: str, channels: Sequence[int],
                    labels: Optional[Sequence[str]] = None,
                    max_fill_gap: int = MAX_FILL_GAP) -> GroundTruthTrace:
    """Load `channel_<n>.dat` files of one REDD house directory."""
    paths = [os.path.join(house_dir, f"channel_{channel}.dat") for channel in channels]
    return load_channel_files(paths, list(range(len(paths))), labels, max_fill_gap)


def generate_synthetic(specs: Sequence[ApplianceSpec], days: int, seed: int,
                       start_timestamp: int = 0) -> GroundTruthTrace:
    """
    Generate a synthetic aggregate trace with exact per-appliance ground truth.

    Per day and appliance the number of activations is Poisson, start times are
    uniform over the day and on-durations exponential (at least 1 s). The
    aggregate is the sum plus zero-mean Gaussian noise with stddev
    sqrt(sum(noise_stddev^2)), clipped to 6 stddev, and clamped at 0 W.

    Args:
        specs (Sequence[ApplianceSpec]): Appliances to simulate
        days (int): Number of days (>= 1)
        seed (int): Seed; equal seeds give bit-identical traces
        start_timestamp (int): Timestamp of the first sample

    Returns:
        GroundTruthTrace: Trace whose `noise_bound` is the declared |P - sum p_i| bound
    """
    if days < 1:
        raise ConfigurationError("days must be >= 1")
    if not specs:
        raise ConfigurationError("at least one appliance spec is required")
    labels = [spec.label for spec in specs]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("appliance labels must be unique")

    rng = np.random.default_rng(seed)
    n_samples = days * SECONDS_PER_DAY
    timestamps = np.arange(start_timestamp, start_timestamp + n_samples, dtype=np.int64)

    per_appliance = {}
    for spec in specs:
        series = np.zeros(n_samples, dtype=np.float64)
        for day in range(days):
            count = rng.poisson(spec.activations_per_day)
            starts = rng.integers(0, SECONDS_PER_DAY, size=count)
            durations = np.maximum(1, np.rint(rng.exponential(spec.mean_on_duration, size=count))).astype(np.int64)
            for offset, duration in zip(starts.tolist(), durations.tolist()):
                begin = day * SECONDS_PER_DAY + offset
                series[begin:min(begin + duration, n_samples)] = spec.on_power
        per_appliance[spec.label] = series

    sigma = float(np.sqrt(sum(spec.noise_stddev ** 2 for spec in specs)))
    bound = NOISE_BOUND_SIGMAS * sigma
    noise = np.clip(rng.normal(0.0, sigma, size=n_samples), -bound, bound) if sigma > 0 else np.zeros(n_samples)
    aggregate = np.maximum(np.sum(list(per_appliance.values()), axis=0) + noise, 0.0)

    logger.info(f"Generated synthetic trace: {len(specs)} appliances, {days} days, seed {seed}")

    return GroundTruthTrace(
        timestamps=timestamps,
        aggregate=aggregate,
        per_appliance=per_appliance,
        noise_bound=bound
    )


def validate_trace(trace: GroundTruthTrace, check_sum: bool = True) -> GroundTruthTrace:
    """
    Check the PowerSample invariants of a trace.

    Powers are finite and >= 0, timestamps step by exactly 1 s, per-appliance
    series share the grid, and (when `check_sum` and appliances are present)
    |aggregate - sum| <= noise_bound at every sample.

    Raises:
        DataValidationError: Naming the first violated invariant
    """
    timestamps = trace.timestamps
    if len(timestamps) and not np.all(np.diff(timestamps) == 1):
        raise DataValidationError("timestamps must increase by exactly 1 s")

    for label, series in [("aggregate", trace.aggregate)] + list(trace.per_appliance.items()):
        if len(series) != len(timestamps):
            raise DataValidationError(f"series '{label}' is not on the trace grid")
        if not np.all(np.isfinite(series)):
            raise DataValidationError(f"series '{label}' has non-finite power values")
        if np.any(series < 0):
            raise DataValidationError(f"series '{label}' has negative power values")

    if check_sum and trace.per_appliance:
        residual = np.abs(trace.aggregate - np.sum(list(trace.per_appliance.values()), axis=0))
        # Float summation slack
        if np.any(residual > trace.noise_bound + 1e-6):
            raise DataValidationError(
                f"aggregate deviates from the appliance sum by {residual.max():.3f} W "
                f"(bound {trace.noise_bound:.3f} W)"
            )

    return trace
