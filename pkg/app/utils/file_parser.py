"""
File parsing utilities for REDD channel files, trace CSVs, synthetic appliance
specs, reference state lists and estimate streams.
"""
import os
import re
import json
import logging
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from pydantic import TypeAdapter, ValidationError

from app.core.error_handler import DataValidationError, TraceParseError, UsageError
from app.models.estimate import EstimateBlock, EstimateStream
from app.models.settings import format_validation_error
from app.models.trace import ApplianceSpec, GroundTruthTrace
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)

TOTAL_RECORD_ID = "TOTAL"
SECONDS_PER_DAY = 86400

_LINE_RE = re.compile(r"line (\d+)")


class FileParser(LoggerMixin):
    """Parses the input files used by the CLI and the loaders."""

    def read_channel_file(self, file_path: str) -> Tuple[np.ndarray, np.ndarray]:
        """
        Parse one REDD low-frequency channel file (`<unix-timestamp> <watts>` per line).

        Args:
            file_path (str): Path to the channel file

        Returns:
            Tuple[np.ndarray, np.ndarray]: Integer timestamps and watts, in file order

        Raises:
            FileNotFoundError: If the file does not exist
            TraceParseError: On the first malformed line, with its line number
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        try:
            frame = pd.read_csv(
                file_path,
                sep=r"\s+",
                header=None,
                names=["timestamp", "power"],
                dtype=str,
                skip_blank_lines=False
            )
        except pd.errors.ParserError as e:
            match = _LINE_RE.search(str(e))
            line_number = int(match.group(1)) if match else 0
            raise TraceParseError(file_path, line_number, "expected two whitespace-separated columns")
        except pd.errors.EmptyDataError:
            frame = pd.DataFrame({"timestamp": [], "power": []})

        timestamps = pd.to_numeric(frame["timestamp"], errors="coerce")
        power = pd.to_numeric(frame["power"], errors="coerce")
        bad = timestamps.isna() | power.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise TraceParseError(file_path, row + 1, "expected '<unix-timestamp> <watts>'")

        self.logger.debug(f"Parsed {len(frame)} readings from {file_path}")
        return (
            np.floor(timestamps.to_numpy(dtype=np.float64)).astype(np.int64),
            power.to_numpy(dtype=np.float64)
        )

    def read_trace_csv(self, file_path: str) -> GroundTruthTrace:
        """
        Parse a trace CSV with header `timestamp,power_w[,<appliance>...]`.

        Extra columns are read as per-appliance ground truth.

        Args:
            file_path (str): Path to the CSV file

        Returns:
            GroundTruthTrace: The trace (per_appliance empty for aggregate-only files)
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        frame = pd.read_csv(file_path, dtype=str)
        columns = [column.strip() for column in frame.columns]
        frame.columns = columns
        if columns[:2] != ["timestamp", "power_w"]:
            raise TraceParseError(file_path, 1, "header must start with 'timestamp,power_w'")

        numeric = frame.apply(pd.to_numeric, errors="coerce")
        bad = numeric.isna().any(axis=1).to_numpy()
        if bad.any():
            raise TraceParseError(file_path, int(np.flatnonzero(bad)[0]) + 2, "non-numeric value")

        trace = GroundTruthTrace(
            timestamps=numeric["timestamp"].to_numpy(dtype=np.float64).astype(np.int64),
            aggregate=numeric["power_w"].to_numpy(dtype=np.float64),
            per_appliance={column: numeric[column].to_numpy(dtype=np.float64) for column in columns[2:]}
        )
        self.logger.info(f"Parsed {len(trace)} samples ({len(columns) - 2} appliance columns) from {file_path}")
        return trace

    def read_specs(self, file_path: str) -> List[ApplianceSpec]:
        """
        Parse a synthetic appliance spec file.

        Accepts a JSON list of specs or an object with an 'appliances' key.

        Raises:
            DataValidationError: With the failing field path, e.g. `appliances.1.on_power`
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        try:
            with open(file_path, 'r', encoding='utf-8') as spec_file:
                data = json.load(spec_file)
        except json.JSONDecodeError as e:
            raise DataValidationError(f"{file_path}: invalid JSON ({e})")

        if isinstance(data, dict) and 'appliances' in data:
            items, prefix = data['appliances'], "appliances."
        elif isinstance(data, list):
            items, prefix = data, ""
        else:
            raise DataValidationError(
                f"{file_path}: expected a list of appliance specs or an object with an 'appliances' key"
            )

        try:
            specs = TypeAdapter(List[ApplianceSpec]).validate_python(items)
        except ValidationError as e:
            raise DataValidationError(f"{file_path}: {prefix}{format_validation_error(e)}")

        if not specs:
            raise DataValidationError(f"{file_path}: at least one appliance spec is required")

        self.logger.info(f"Loaded {len(specs)} appliance specs from {file_path}")
        return specs

    def read_reference_states(self, file_path: str) -> List[float]:
        """
        Parse a reference power-state file: a JSON list of watts or an object with 'states_w'.

        Raises:
            UsageError: If the file holds no states
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        try:
            with open(file_path, 'r', encoding='utf-8') as ref_file:
                content = ref_file.read()
            data = json.loads(content) if content.strip() else []
        except json.JSONDecodeError as e:
            raise DataValidationError(f"{file_path}: invalid JSON ({e})")

        states = data.get("states_w", []) if isinstance(data, dict) else data
        try:
            states = [float(value) for value in states]
        except (TypeError, ValueError):
            raise DataValidationError(f"{file_path}: reference states must be numbers")

        if not states:
            raise UsageError(f"{file_path}: reference state list is empty")
        return sorted(states)

    def read_estimates(self, file_path: str) -> Tuple[EstimateStream, Dict[int, List[float]]]:
        """
        Parse an estimate stream written by `run` (CSV or JSONL by extension).

        The per-day on-powers are the models the estimator used during day d, which
        were learned up to day d - 1. `read_update_states` gives the models held
        after day d's own update.

        Returns:
            Tuple[EstimateStream, Dict[int, List[float]]]: One wide block covering every
            timestamp, and the on-powers of the models present on each day
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        if file_path.lower().endswith(".jsonl"):
            frame = pd.read_json(
                file_path, lines=True, dtype=False, convert_dates=False, keep_default_dates=False
            )
            if frame.empty:
                raise DataValidationError(f"{file_path}: no estimate records")
            totals = frame[frame["type"] == "total"]
            rows = frame[frame["type"] == "estimate"]
        else:
            frame = pd.read_csv(file_path, dtype={"appliance_id": str}, keep_default_na=False)
            if frame.empty:
                raise DataValidationError(f"{file_path}: no estimate records")
            totals = frame[frame["appliance_id"] == TOTAL_RECORD_ID]
            rows = frame[frame["appliance_id"] != TOTAL_RECORD_ID]

        timestamps = np.unique(totals["timestamp"].to_numpy(dtype=np.int64))
        if len(timestamps) != len(totals):
            raise DataValidationError(f"{file_path}: duplicate total records")

        ids = list(dict.fromkeys(rows["appliance_id"].tolist())) if len(rows) else []
        if ids:
            rows = rows.astype({"estimated_power_w": float, "on_probability": float, "on_power_w": float})

        def wide(column, fill):
            table = rows.pivot(index="timestamp", columns="appliance_id", values=column)
            return table.reindex(index=timestamps, columns=ids).fillna(fill).to_numpy()

        if ids:
            power = wide("estimated_power_w", 0.0).astype(np.float64)
            probability = wide("on_probability", 0.0).astype(np.float64)
            decided = (rows.assign(on=rows["decided_state"] == "on")
                       .pivot(index="timestamp", columns="appliance_id", values="on")
                       .reindex(index=timestamps, columns=ids).fillna(False).to_numpy(dtype=bool))
            on_powers = rows.groupby("appliance_id", sort=False)["on_power_w"].last().reindex(ids).to_numpy()
        else:
            power = probability = np.zeros((len(timestamps), 0))
            decided = np.zeros((len(timestamps), 0), dtype=bool)
            on_powers = np.zeros(0)

        stream = EstimateStream()
        stream.append(EstimateBlock(
            timestamps=timestamps,
            appliance_ids=tuple(ids),
            on_powers=np.asarray(on_powers, dtype=np.float64),
            on_probability=probability,
            decided=decided,
            estimated_power=power
        ))

        states_per_day: Dict[int, List[float]] = {}
        if len(timestamps):
            start = int(timestamps[0])
            if ids:
                days = (rows["timestamp"].to_numpy(dtype=np.int64) - start) // SECONDS_PER_DAY
                for day, group in rows.assign(day=days).groupby("day"):
                    last_power = group.groupby("appliance_id", sort=False)["on_power_w"].last()
                    states_per_day[int(day)] = sorted(float(p) for p in last_power)
            for day in range(int((timestamps[-1] - start) // SECONDS_PER_DAY) + 1):
                states_per_day.setdefault(day, [])

        self.logger.info(f"Parsed {len(timestamps)} estimate samples for {len(ids)} appliances from {file_path}")
        return stream, states_per_day

    def read_update_states(self, file_path: str) -> Dict[int, List[float]]:
        """
        Parse the `update_reports` table written by `run` (CSV or JSONL by extension).

        Returns:
            Dict[int, List[float]]: Day -> sorted on-powers held after the last update of that day
        """
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"File not found: {file_path}")

        if os.path.getsize(file_path) == 0:
            return {}
        if file_path.lower().endswith(".jsonl"):
            frame = pd.read_json(file_path, lines=True, dtype=False, convert_dates=False, keep_default_dates=False)
        else:
            frame = pd.read_csv(file_path, dtype={"model_powers": str}, keep_default_na=False)
        if not frame.empty and "model_powers" not in frame.columns:
            raise DataValidationError(f"{file_path}: no model_powers column")

        states_per_day: Dict[int, List[float]] = {}
        for day, model_powers in zip(frame.get("day", []), frame.get("model_powers", [])):
            try:
                powers = [float(item.rsplit(":", 1)[1]) for item in str(model_powers or "").split()]
            except (IndexError, ValueError):
                raise DataValidationError(f"{file_path}: malformed model_powers {model_powers!r} for day {day}")
            states_per_day[int(day)] = sorted(powers)

        self.logger.info(f"Parsed {len(states_per_day)} days of model snapshots from {file_path}")
        return states_per_day
