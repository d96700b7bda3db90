"""
Signal preprocessing: median de-noising, optional moving-average smoothing and
splitting of a stream into gap-free segments.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from app.core.error_handler import ConfigurationError
from app.models.settings import FilterConfig

logger = logging.getLogger(__name__)


def median_filter(samples, window: int) -> np.ndarray:
    """
    Centered running median with symmetric window shrinking at the ends.

    Sample i near the start uses the 2i+1 samples around it (and likewise at the
    end), so no readings are padded in.

    Args:
        samples: Power readings in watts
        window (int): Odd window size, 3 <= window <= len(samples)

    Returns:
        np.ndarray: Filtered readings, same length as the input

    Raises:
        ConfigurationError: If the window is even, below 3 or longer than the input
    """
    values = np.asarray(samples, dtype=np.float64)
    n = len(values)

    if window < 3 or window % 2 == 0:
        raise ConfigurationError(f"median window must be odd and >= 3, got {window}")
    if window > n:
        raise ConfigurationError(f"median window {window} is longer than the input ({n} samples)")

    half = window // 2
    filtered = ndimage.median_filter(values, size=window, mode="nearest")

    for i in range(half):
        filtered[i] = np.median(values[:2 * i + 1])
        filtered[n - 1 - i] = np.median(values[n - 1 - 2 * i:])

    return filtered


def moving_average(samples, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends. Even sizes are widened by one."""
    values = np.asarray(samples, dtype=np.float64)
    n = len(values)
    if window <= 1 or n == 0:
        return values.copy()

    half = window // 2
    index = np.arange(n)
    reach = np.minimum(half, np.minimum(index, n - 1 - index))
    cumulative = np.concatenate(([0.0], np.cumsum(values)))
    averaged = (cumulative[index + reach + 1] - cumulative[index - reach]) / (2 * reach + 1)

    # Float round-off must not push a value outside the input range
    return np.clip(averaged, values.min(), values.max())


def smooth(samples, filter_config: Optional[FilterConfig] = None) -> np.ndarray:
    """
    Median filter followed by the optional moving average.

    Args:
        samples: Power readings in watts
        filter_config (FilterConfig, optional): Filter settings, defaults if omitted

    Returns:
        np.ndarray: Smoothed readings, same length as the input
    """
    filter_config = filter_config or FilterConfig()
    filtered = median_filter(samples, filter_config.median_window)
    if filter_config.smoothing == "moving_average":
        filtered = moving_average(filtered, filter_config.smoothing_window)
    return filtered


def split_segments(timestamps, valid=None) -> List[Tuple[int, int]]:
    """
    Split a stream into maximal gap-free runs.

    A run ends where the timestamps jump by more than one second or where
    `valid` is False (samples inside a loader gap).

    Returns:
        List[Tuple[int, int]]: Half-open index ranges [start, stop)
    """
    timestamps = np.asarray(timestamps)
    n = len(timestamps)
    if n == 0:
        return []

    valid = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)

    breaks = np.ones(n + 1, dtype=bool)
    breaks[1:n] = (np.diff(timestamps) != 1) | (valid[1:] != valid[:-1])
    bounds = np.flatnonzero(breaks)

    return [
        (int(start), int(stop))
        for start, stop in zip(bounds[:-1], bounds[1:])
        if valid[start]
    ]
