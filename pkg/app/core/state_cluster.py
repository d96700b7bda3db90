"""
State clustering: the edge-pair magnitude histogram and its segmentation into
candidate appliance power states.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from app.models.edges import EdgePair
from app.models.settings import ClusterConfig
from app.models.states import PowerState, StateHistogram

logger = logging.getLogger(__name__)


def build_histogram(pairs: Sequence[EdgePair], cluster_config: Optional[ClusterConfig] = None) -> StateHistogram:
    """
    Count edge-pair magnitudes in fixed-width bins.

    A pair of magnitude m lands in bin floor(m / bin_width); magnitudes at or
    above `max_power` are counted as overflow. Each bin also sums the on-durations
    of its pairs.

    Args:
        pairs (Sequence[EdgePair]): Pairs of one window
        cluster_config (ClusterConfig, optional): Bin layout

    Returns:
        StateHistogram: Counts and duration sums per bin
    """
    cluster_config = cluster_config or ClusterConfig()
    histogram = StateHistogram(bin_width=cluster_config.bin_width, max_power=cluster_config.max_power)
    if not pairs:
        return histogram

    magnitudes = np.array([pair.magnitude for pair in pairs], dtype=np.float64)
    durations = np.array([pair.duration for pair in pairs], dtype=np.float64)

    in_range = magnitudes < histogram.max_power
    bins = np.floor(magnitudes[in_range] / histogram.bin_width).astype(np.int64)
    # Division can round a magnitude just below max_power up to n_bins
    bins = np.minimum(bins, histogram.n_bins - 1)

    histogram.counts = np.bincount(bins, minlength=histogram.n_bins).astype(np.int64)
    histogram.duration_sums = np.bincount(bins, weights=durations[in_range], minlength=histogram.n_bins)
    histogram.overflow_count = int((~in_range).sum())

    if histogram.overflow_count:
        logger.debug(f"{histogram.overflow_count} pairs at or above {histogram.max_power:.0f} W")
    return histogram


def segment(histogram: StateHistogram, cluster_config: Optional[ClusterConfig] = None) -> List[PowerState]:
    """
    Segment a histogram into power states.

    Non-empty bins separated by fewer than `gap_bins` empty bins belong to one
    cluster. Clusters below `min_support` are dropped. The nominal power is the
    count-weighted mean of the bin centers.

    Returns:
        List[PowerState]: States sorted by nominal power, ascending
    """
    cluster_config = cluster_config or ClusterConfig()
    occupied = np.flatnonzero(histogram.counts > 0)
    if len(occupied) == 0:
        return []

    # A jump of more than gap_bins indices means at least gap_bins empty bins between
    splits = np.flatnonzero(np.diff(occupied) > cluster_config.gap_bins) + 1
    centers = histogram.bin_centers

    states = []
    for members in np.split(occupied, splits):
        low, high = int(members[0]), int(members[-1])
        counts = histogram.counts[low:high + 1]
        support = int(counts.sum())
        if support < cluster_config.min_support:
            logger.debug(f"Dropped cluster at bins {low}-{high} with support {support}")
            continue

        states.append(PowerState(
            nominal_power=float(np.dot(centers[low:high + 1], counts) / support),
            support=support,
            bin_span=(low, high),
            total_duration=float(histogram.duration_sums[low:high + 1].sum())
        ))

    return states
