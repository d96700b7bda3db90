"""
Appliance database: creates two-state HMMs from detected power states, merges
similar ones, prunes rarely used ones and persists the result.
"""
import copy
import json
import logging
import math
import os
from typing import Dict, Iterable, List, Optional, Tuple

from app.core.error_handler import IntegrityError, InvalidStateError, OrderingError
from app.models.appliance import FHMM, ApplianceMetadata, ApplianceModel, UpdateReport
from app.models.settings import DbConfig
from app.models.states import PowerState
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)

DB_FORMAT = "nilm-appliance-db"
DB_VERSION = 1
ROW_SUM_TOLERANCE = 1e-9


def make_hmm(state: PowerState, stay_probability: float, model_id: str = "", day: int = 0) -> ApplianceModel:
    """
    Build the two-state HMM for one power state.

    Args:
        state (PowerState): Detected state; its nominal power is the ON observation
        stay_probability (float): Probability s of keeping the current state, 0 < s < 1
        model_id (str): Identifier of the new model
        day (int): Day the state was observed

    Returns:
        ApplianceModel: Transition [[s, 1-s], [1-s, s]], starting OFF

    Raises:
        InvalidStateError: For a non-positive power or a degenerate stay probability
    """
    power = state.nominal_power
    if not math.isfinite(power) or power <= 0:
        raise InvalidStateError(f"appliance on-power must be positive, got {power}")
    if not 0.0 < stay_probability < 1.0:
        raise InvalidStateError(f"stay probability must lie strictly between 0 and 1, got {stay_probability}")

    switch = 1.0 - stay_probability
    metadata = ApplianceMetadata(first_seen_day=day, last_seen_day=day)
    return ApplianceModel(
        id=model_id,
        on_power=power,
        transition=((stay_probability, switch), (switch, stay_probability)),
        metadata=metadata
    )


class ApplianceDatabase(LoggerMixin):
    """
    The evolving set of appliance models.

    Single writer: `update` must be called with non-decreasing days. Readers take
    immutable snapshots through `compose_fhmm`.
    """

    def __init__(self, db_config: Optional[DbConfig] = None, models: Iterable[ApplianceModel] = (),
                 current_day: int = 0, next_id: int = 1):
        self.config = db_config or DbConfig()
        self.models: Dict[str, ApplianceModel] = {model.id: model for model in models}
        self.current_day = current_day
        self.next_id = next_id

    def __len__(self):
        return len(self.models)

    def __eq__(self, other):
        if not isinstance(other, ApplianceDatabase):
            return NotImplemented
        return (
            self.models == other.models
            and self.current_day == other.current_day
            and self.next_id == other.next_id
            and self.config == other.config
        )

    @property
    def on_powers(self) -> Dict[str, float]:
        return {model_id: model.on_power for model_id, model in self.models.items()}

    def _new_id(self) -> str:
        model_id = f"A{self.next_id:04d}"
        self.next_id += 1
        return model_id

    def update(self, states: List[PowerState], day: int) -> UpdateReport:
        """
        Fold one window's power states into the database.

        Each state is matched to the nearest existing model whose on-power is
        closer than `merge_threshold` (ties go to the lower power) and pulls it
        towards its own power with weight `ema_weight`; unmatched states become
        new models. Models left closer than the threshold are then merged
        nearest pair first, and rarely used stale models are pruned.

        Args:
            states (List[PowerState]): States detected in the window
            day (int): Day index of the window

        Returns:
            UpdateReport: Created, merged, absorbed and pruned ids

        Raises:
            OrderingError: If `day` is before the database's current day
        """
        if day < self.current_day:
            raise OrderingError(f"database update for day {day} after day {self.current_day}")

        report = UpdateReport(day=day)
        threshold = self.config.merge_threshold

        # Matching is against the models as they were before this batch, so the
        # result does not depend on the order of `states`
        existing = sorted(self.models.values(), key=lambda model: (model.on_power, model.id))
        matched: Dict[str, List[PowerState]] = {}
        unmatched: List[PowerState] = []
        for state in sorted(states, key=lambda s: (s.nominal_power, s.support)):
            target = self._nearest(existing, state.nominal_power, threshold)
            if target is None:
                unmatched.append(state)
            else:
                matched.setdefault(target.id, []).append(state)

        weight = self.config.ema_weight
        for model_id, model_states in matched.items():
            model = self.models[model_id]
            for state in model_states:
                model.on_power = (1.0 - weight) * model.on_power + weight * state.nominal_power
                model.metadata.record(day, state.support, state.total_duration, model.on_power)
            report.merged.append(model_id)

        for state in unmatched:
            model = make_hmm(state, self.config.stay_probability, self._new_id(), day)
            model.metadata.record(day, state.support, state.total_duration, model.on_power)
            self.models[model.id] = model
            report.created.append(model.id)

        self._resolve_conflicts(report)

        report.pruned = self._prune(day)
        self.current_day = day
        report.merged = sorted(set(report.merged) & set(self.models))
        report.model_count = len(self.models)

        self.logger.info(
            f"Day {day}: {len(report.created)} created, {len(report.merged)} merged, "
            f"{len(report.absorbed)} absorbed, {len(report.pruned)} pruned, {report.model_count} models"
        )
        return report

    @staticmethod
    def _nearest(models: List[ApplianceModel], power: float, threshold: float) -> Optional[ApplianceModel]:
        best, best_distance = None, threshold
        for model in models:
            distance = abs(model.on_power - power)
            # Strict comparison keeps the lower-power model on ties
            if distance < best_distance:
                best, best_distance = model, distance
        return best

    def _resolve_conflicts(self, report: UpdateReport):
        """Merge models closer than the threshold, nearest pair first, until separation holds."""
        threshold = self.config.merge_threshold
        while len(self.models) > 1:
            ordered = sorted(self.models.values(), key=lambda model: (model.on_power, model.id))
            gaps = [
                (upper.on_power - lower.on_power, lower.on_power, lower, upper)
                for lower, upper in zip(ordered, ordered[1:])
            ]
            distance, _, lower, upper = min(gaps, key=lambda gap: (gap[0], gap[1]))
            if distance >= threshold:
                break

            survivor, absorbed = sorted((lower, upper), key=lambda model: model.id)
            survivor.on_power = self._weighted_power(survivor, absorbed)
            survivor.metadata.absorb(absorbed.metadata)
            del self.models[absorbed.id]

            if absorbed.id in report.created:
                report.created.remove(absorbed.id)
            else:
                report.absorbed.append(absorbed.id)
            report.merged.append(survivor.id)
            self.logger.debug(f"Merged {absorbed.id} into {survivor.id} ({distance:.1f} W apart)")

    @staticmethod
    def _weighted_power(first: ApplianceModel, second: ApplianceModel) -> float:
        a, b = first.metadata.total_appearances, second.metadata.total_appearances
        if a + b == 0:
            return (first.on_power + second.on_power) / 2.0
        return (a * first.on_power + b * second.on_power) / (a + b)

    def _prune(self, day: int) -> List[str]:
        """Drop models unseen for more than `prune_stale_days` and used fewer than the minimum times."""
        stale_before = day - self.config.prune_stale_days
        pruned = [
            model.id for model in self.models.values()
            if model.metadata.last_seen_day < stale_before
            and model.metadata.total_appearances < self.config.prune_min_total_appearances
        ]
        for model_id in pruned:
            del self.models[model_id]
        return sorted(pruned)

    def compose_fhmm(self) -> FHMM:
        """Immutable FHMM snapshot, models ordered by (on_power, id)."""
        ordered = sorted(self.models.values(), key=lambda model: (model.on_power, model.id))
        return FHMM(models=tuple(copy.deepcopy(model) for model in ordered))

    def to_dict(self):
        return {
            "format": DB_FORMAT,
            "version": DB_VERSION,
            "current_day": self.current_day,
            "next_id": self.next_id,
            "config": self.config.model_dump(),
            "models": [model.to_dict() for model in sorted(self.models.values(), key=lambda m: m.id)]
        }

    def save(self, path: str) -> str:
        """Write the database as a versioned JSON document."""
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as db_file:
            json.dump(self.to_dict(), db_file, indent=2)
            db_file.write("\n")
        self.logger.info(f"Saved {len(self.models)} appliance models to {path}")
        return path

    @classmethod
    def load(cls, path: str, db_config: Optional[DbConfig] = None) -> "ApplianceDatabase":
        """
        Read a database written by `save` and check every model invariant.

        An empty file yields an empty database. `db_config` overrides the stored
        configuration.

        Raises:
            FileNotFoundError: If the file does not exist
            IntegrityError: Naming the first violated invariant
        """
        if not os.path.exists(path):
            raise FileNotFoundError(f"Database file not found: {path}")

        with open(path, 'r', encoding='utf-8') as db_file:
            content = db_file.read()
        if not content.strip():
            return cls(db_config)

        try:
            document = json.loads(content)
        except json.JSONDecodeError as e:
            raise IntegrityError("format", f"{path} is not valid JSON ({e})")

        return cls.from_dict(document, db_config)

    @classmethod
    def from_dict(cls, document, db_config: Optional[DbConfig] = None) -> "ApplianceDatabase":
        if not isinstance(document, dict) or document.get("format", DB_FORMAT) != DB_FORMAT:
            raise IntegrityError("format", "not an appliance database document")
        if document.get("version", DB_VERSION) > DB_VERSION:
            raise IntegrityError("version", f"unsupported version {document.get('version')}")

        if db_config is None:
            try:
                db_config = DbConfig.model_validate(document.get("config", {}))
            except ValueError as e:
                raise IntegrityError("config", str(e))

        try:
            models = [ApplianceModel.from_dict(item) for item in document.get("models", [])]
        except (KeyError, TypeError, ValueError) as e:
            raise IntegrityError("model-record", f"malformed model record ({e})")

        _check_models(models, db_config.merge_threshold)

        next_id = int(document.get("next_id", _next_free_id(models)))
        database = cls(db_config, models, int(document.get("current_day", 0)), next_id)
        logger.info(f"Loaded appliance database with {len(models)} models")
        return database


def _next_free_id(models: List[ApplianceModel]) -> int:
    numbers = [int(model.id[1:]) for model in models if model.id[1:].isdigit()]
    return max(numbers, default=0) + 1


def _check_models(models: List[ApplianceModel], merge_threshold: float):
    ids = [model.id for model in models]
    if len(set(ids)) != len(ids):
        raise IntegrityError("unique-ids", "duplicate model ids")

    for model in models:
        if not math.isfinite(model.on_power) or model.on_power <= 0:
            raise IntegrityError("positive-on-power", f"{model.id} has on_power {model.on_power}")
        rows = model.transition
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise IntegrityError("row-stochastic", f"{model.id} transition is not 2x2")
        for row in rows:
            if any(not 0.0 <= value <= 1.0 for value in row) or abs(sum(row) - 1.0) > ROW_SUM_TOLERANCE:
                raise IntegrityError("row-stochastic", f"{model.id} transition row {list(row)}")
        if tuple(model.initial) != (1.0, 0.0):
            raise IntegrityError("initial-off", f"{model.id} initial distribution {list(model.initial)}")

        metadata = model.metadata
        if metadata.last_seen_day < metadata.first_seen_day:
            raise IntegrityError("metadata-days", f"{model.id} last seen before first seen")
        for values in (metadata.appearances_per_day, metadata.energy_estimate_per_day,
                       metadata.operational_seconds_per_day):
            if any(value < 0 for value in values.values()):
                raise IntegrityError("metadata-non-negative", f"{model.id} has negative usage values")

    powers = sorted(model.on_power for model in models)
    for lower, upper in zip(powers, powers[1:]):
        if upper - lower < merge_threshold:
            raise IntegrityError(
                "separation", f"on-powers {lower:.1f} W and {upper:.1f} W are closer than {merge_threshold:.0f} W"
            )


def snapshot_powers(database: ApplianceDatabase) -> List[Tuple[str, float]]:
    """(id, on_power) pairs sorted by power; the per-window view kept in pipeline summaries."""
    return sorted(database.on_powers.items(), key=lambda item: (item[1], item[0]))
