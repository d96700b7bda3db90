"""
Evaluation against ground truth: state mapping, RMSE, energy shares with an
unknown bucket, and virtual appliance grouping.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.error_handler import AlignmentError, EmptyReportError, UsageError
from app.models.estimate import EstimateStream
from app.models.report import UNKNOWN, EvaluationReport, StateMapping, VirtualAppliances
from app.models.settings import EvaluationConfig
from app.models.states import PowerState
from app.models.trace import GroundTruthTrace

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
JOULES_PER_KWH = 3.6e6
# Readings above this count as an appliance being on when finding its dominant power
ON_POWER_FLOOR = 10.0


def _power(state: Union[PowerState, float]) -> float:
    return float(state.nominal_power) if isinstance(state, PowerState) else float(state)


def map_states(detected: Sequence[Union[PowerState, float]], reference: Sequence[float],
               threshold: float = 75.0) -> StateMapping:
    """
    Assign each detected state to its nearest reference state within `threshold`.

    Equal distances go to the lower reference; states with no reference in
    range map to None (the unknown bucket).

    Raises:
        UsageError: If the reference list is empty
    """
    if not reference:
        raise UsageError("reference state list is empty")

    references = sorted(float(value) for value in reference)
    assignments = {}
    for state in detected:
        power = _power(state)
        best, best_distance = None, None
        for candidate in references:
            distance = abs(power - candidate)
            if best_distance is None or distance < best_distance:
                best, best_distance = candidate, distance
        assignments[power] = best if best_distance <= threshold else None

    return StateMapping(assignments=assignments, distance_threshold=threshold)


def rmse(estimated, actual) -> float:
    """
    Root-mean-square error between two aligned power series.

    Raises:
        AlignmentError: If the lengths differ
        EmptyReportError: If both are empty
    """
    estimated = np.asarray(estimated, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if estimated.shape != actual.shape:
        raise AlignmentError(f"series lengths differ: {len(estimated)} vs {len(actual)}")
    if len(estimated) == 0:
        raise EmptyReportError("cannot compute RMSE of empty series")
    return float(np.sqrt(np.mean((estimated - actual) ** 2)))


def dominant_power(series) -> float:
    """Median of the readings above the on-power floor, 0 W for a never-on series."""
    series = np.asarray(series, dtype=np.float64)
    on = series[series > ON_POWER_FLOOR]
    return float(np.median(on)) if len(on) else 0.0


def virtual_appliance_grouping(per_appliance: Dict[str, np.ndarray],
                               merge_threshold: float = 50.0) -> VirtualAppliances:
    """
    Combine ground-truth appliances whose dominant on-powers are closer than `merge_threshold`.

    Appliances are chained in order of dominant power, so 190, 220 and 250 W
    with a 50 W threshold form one group. A group's label joins its members'
    labels with '+', its series is their sum and its power the mean of theirs.
    """
    powers = {label: dominant_power(series) for label, series in per_appliance.items()}
    ordered = sorted(powers, key=lambda label: (powers[label], label))

    groups: List[List[str]] = []
    for label in ordered:
        if groups and powers[label] - powers[groups[-1][-1]] < merge_threshold:
            groups[-1].append(label)
        else:
            groups.append([label])

    virtual = VirtualAppliances()
    for members in groups:
        label = "+".join(members)
        virtual.series[label] = np.sum([per_appliance[member] for member in members], axis=0)
        virtual.dominant_power[label] = float(np.mean([powers[member] for member in members]))
        virtual.members[label] = list(members)

    if len(groups) < len(per_appliance):
        logger.info(f"Grouped {len(per_appliance)} appliances into {len(groups)} virtual appliances")
    return virtual


def _overlap(estimates: EstimateStream, ground_truth: GroundTruthTrace) -> Tuple[slice, slice]:
    """Index ranges of the common time span; the two series must agree sample for sample there."""
    est_times = estimates.timestamps
    gt_times = ground_truth.timestamps
    if len(est_times) == 0 or len(gt_times) == 0:
        raise EmptyReportError("no samples to evaluate")

    start = max(est_times[0], gt_times[0])
    end = min(est_times[-1], gt_times[-1])
    if end < start:
        raise EmptyReportError("estimates and ground truth do not overlap in time")

    est_slice = slice(*np.searchsorted(est_times, [start, end + 1]))
    gt_slice = slice(*np.searchsorted(gt_times, [start, end + 1]))
    if not np.array_equal(est_times[est_slice], gt_times[gt_slice]):
        raise AlignmentError("estimate timestamps are not aligned with the ground-truth grid")
    return est_slice, gt_slice


def energy_report(estimates: EstimateStream, ground_truth: GroundTruthTrace, mapping: StateMapping,
                  virtual: Optional[VirtualAppliances] = None, skip_days: int = 0) -> EvaluationReport:
    """
    Energy accounting of a run against ground truth.

    Each estimated appliance is routed to the virtual appliance its on-power maps
    to under `mapping`; unmapped estimated energy goes to the `unknown` bucket.
    Power is integrated with a 1 s step.

    Args:
        estimates (EstimateStream): Estimates of the run
        ground_truth (GroundTruthTrace): Aggregate and per-appliance ground truth
        mapping (StateMapping): On-power to virtual appliance power assignments
        virtual (VirtualAppliances, optional): Grouped ground truth; identity grouping if omitted
        skip_days (int): Leading days excluded from scoring

    Returns:
        EvaluationReport: Energies, shares and per-label RMSE

    Raises:
        AlignmentError: If the overlapping timestamps differ
        EmptyReportError: If nothing is left to evaluate
    """
    if virtual is None:
        virtual = virtual_appliance_grouping(ground_truth.per_appliance, merge_threshold=0.0)

    est_slice, gt_slice = _overlap(estimates, ground_truth)
    gt_times = ground_truth.timestamps[gt_slice]
    keep = gt_times >= ground_truth.start + skip_days * SECONDS_PER_DAY
    if not keep.any():
        raise EmptyReportError(f"no samples left after skipping {skip_days} days")

    # Estimated power routed to labels
    routed: Dict[str, np.ndarray] = {label: np.zeros(len(estimates)) for label in virtual.labels}
    routed[UNKNOWN] = np.zeros(len(estimates))
    offset = 0
    for block in estimates.blocks:
        for i, on_power in enumerate(block.on_powers.tolist()):
            reference = mapping.reference_for(on_power)
            label = virtual.label_for_power(reference) if reference is not None else None
            routed[label or UNKNOWN][offset:offset + len(block)] += block.estimated_power[:, i]
        offset += len(block)
    routed = {label: series[est_slice][keep] for label, series in routed.items()}

    actual = {label: series[gt_slice][keep] for label, series in virtual.series.items()}
    if actual:
        actual_total_series = np.sum(list(actual.values()), axis=0)
    else:
        actual_total_series = ground_truth.aggregate[gt_slice][keep]

    report = EvaluationReport(samples=int(keep.sum()))
    report.energy_per_label = {label: float(series.sum() / JOULES_PER_KWH) for label, series in routed.items()}
    report.actual_energy_per_label = {
        label: float(series.sum() / JOULES_PER_KWH) for label, series in actual.items()
    }
    report.total_energy_estimated = float(sum(report.energy_per_label.values()))
    report.total_energy_actual = float(actual_total_series.sum() / JOULES_PER_KWH)

    if report.total_energy_actual > 0:
        report.energy_error_fraction = (
            abs(report.total_energy_estimated - report.total_energy_actual) / report.total_energy_actual
        )
    else:
        report.energy_error_fraction = 0.0 if report.total_energy_estimated == 0 else float("inf")

    report.energy_shares = _shares(report.energy_per_label, empty_label=UNKNOWN)
    report.actual_energy_shares = _shares(report.actual_energy_per_label)
    report.per_appliance_rmse = {label: rmse(routed[label], actual[label]) for label in actual}
    return report


def _shares(energies: Dict[str, float], empty_label: Optional[str] = None) -> Dict[str, float]:
    """Fractions of the total; with no energy at all the whole share sits under `empty_label`."""
    total = sum(energies.values())
    if total <= 0:
        shares = {label: 0.0 for label in energies}
        if empty_label is not None:
            shares[empty_label] = 1.0
        return shares
    return {label: value / total for label, value in energies.items()}


def assignable_counts(states_per_day: Dict[int, List[float]], reference: Sequence[float],
                      threshold: float = 75.0) -> Tuple[Dict[int, int], Dict[int, int]]:
    """Per-day numbers of known power states that do and do not map to a reference state."""
    assignable, unassignable = {}, {}
    for day, powers in sorted(states_per_day.items()):
        mapping = map_states(powers, reference, threshold)
        assignable[day] = mapping.assignable_count
        unassignable[day] = mapping.unassignable_count
    return assignable, unassignable


def evaluate(estimates: EstimateStream, ground_truth: GroundTruthTrace, reference: Sequence[float],
             evaluation_config: Optional[EvaluationConfig] = None,
             states_per_day: Optional[Dict[int, List[float]]] = None,
             skip_days: Optional[int] = None) -> EvaluationReport:
    """
    Full scoring of one run.

    Ground truth is grouped into virtual appliances, every estimated on-power
    is mapped to the nearest virtual appliance power, energies are compared, and
    the per-day state counts are checked against `reference`.
    """
    evaluation_config = evaluation_config or EvaluationConfig()
    skip_days = evaluation_config.skip_days if skip_days is None else skip_days

    virtual = virtual_appliance_grouping(ground_truth.per_appliance, evaluation_config.virtual_merge_threshold)
    on_powers = sorted({power for block in estimates.blocks for power in block.on_powers.tolist()})
    if virtual.dominant_power:
        mapping = map_states(on_powers, list(virtual.dominant_power.values()),
                             evaluation_config.distance_threshold)
    else:
        mapping = StateMapping(distance_threshold=evaluation_config.distance_threshold)

    report = energy_report(estimates, ground_truth, mapping, virtual, skip_days)

    if states_per_day:
        report.states_assignable_per_day, report.states_unassignable_per_day = assignable_counts(
            states_per_day, reference, evaluation_config.distance_threshold
        )

    logger.info(
        f"Evaluated {report.samples} samples: estimated {report.total_energy_estimated:.3f} kWh, "
        f"actual {report.total_energy_actual:.3f} kWh, unknown share {report.unknown_share:.3f}"
    )
    return report
