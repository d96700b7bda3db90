"""
File writing utilities for traces, tables, reports and estimate streams.
"""
import os
import csv
import json
import shutil
import logging
import tempfile
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

import app.config as config
from app.models.estimate import EstimateBlock
from app.models.trace import GroundTruthTrace
from app.utils.file_parser import TOTAL_RECORD_ID
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)

ESTIMATE_COLUMNS = [
    "timestamp", "appliance_id", "on_probability", "decided_state", "estimated_power_w", "on_power_w"
]


def _ensure_parent(file_path: str):
    parent = os.path.dirname(file_path)
    if parent:
        os.makedirs(parent, exist_ok=True)


class FileWriter(LoggerMixin):
    """Writes data to output files (CSV, JSON, JSONL)."""

    def write_csv(self, data: List[Dict[str, Any]], file_path: str, headers: List[str] = None) -> str:
        """
        Write data to a CSV file.

        Args:
            data (List[Dict]): List of dictionaries to write
            file_path (str): Path to the output file
            headers (List[str], optional): Custom order of columns. If None, use all keys from the first row.

        Returns:
            str: Path to the created file
        """
        if not data and not headers:
            self.logger.warning(f"No data to write to CSV file: {file_path}")
            return file_path

        _ensure_parent(file_path)

        try:
            with open(file_path, 'w', newline='', encoding='utf-8') as csvfile:
                fieldnames = headers or list(data[0].keys())

                writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator='\n')
                writer.writeheader()

                for item in data:
                    # Only include fields that are in the headers
                    row = {k: item.get(k, '') for k in fieldnames}
                    writer.writerow(row)

            self.logger.info(f"Successfully wrote {len(data)} rows to CSV file: {file_path}")
            return file_path

        except Exception as e:
            self.logger.error(f"Error writing CSV file: {str(e)}")
            raise

    def write_json(self, data: Any, file_path: str, pretty: bool = True) -> str:
        """
        Write data to a JSON file.

        Args:
            data: JSON-serializable data
            file_path (str): Path to the output file
            pretty (bool): Whether to format the JSON for readability

        Returns:
            str: Path to the created file
        """
        _ensure_parent(file_path)

        try:
            with open(file_path, 'w', encoding='utf-8') as jsonfile:
                if pretty:
                    json.dump(data, jsonfile, indent=2, sort_keys=False)
                else:
                    json.dump(data, jsonfile)
                jsonfile.write("\n")

            self.logger.info(f"Successfully wrote JSON file: {file_path}")
            return file_path

        except Exception as e:
            self.logger.error(f"Error writing JSON file: {str(e)}")
            raise

    def write_jsonl(self, records: List[Dict[str, Any]], file_path: str, record_type: str) -> str:
        """
        Write records as line-delimited JSON, each tagged with a `type` field.

        Args:
            records (List[Dict]): Records to write
            file_path (str): Path to the output file
            record_type (str): Value of the `type` field

        Returns:
            str: Path to the created file
        """
        _ensure_parent(file_path)

        with open(file_path, 'w', encoding='utf-8') as jsonl_file:
            for record in records:
                jsonl_file.write(json.dumps({"type": record_type, **record}) + "\n")

        self.logger.info(f"Successfully wrote {len(records)} records to JSONL file: {file_path}")
        return file_path

    def write_table(self, rows: List[Dict[str, Any]], file_path: str, output_format: str,
                    record_type: str, headers: List[str] = None) -> str:
        """Write rows as CSV or JSONL depending on `output_format`."""
        if output_format == 'jsonl':
            return self.write_jsonl(rows, file_path, record_type)
        elif output_format == 'csv':
            return self.write_csv(rows, file_path, headers)
        raise ValueError(f"Unsupported output format: {output_format}")

    def write_trace_csv(self, trace: GroundTruthTrace, file_path: str, include_appliances: bool = False) -> str:
        """
        Write a trace as CSV with header `timestamp,power_w` (plus one column per appliance).

        Args:
            trace (GroundTruthTrace): Trace to write
            file_path (str): Path to the output file
            include_appliances (bool): Whether to add the per-appliance ground truth columns

        Returns:
            str: Path to the created file
        """
        _ensure_parent(file_path)

        columns = {"timestamp": trace.timestamps, "power_w": trace.aggregate}
        if include_appliances:
            for label, series in trace.per_appliance.items():
                columns[label] = series

        frame = pd.DataFrame(columns)
        frame.to_csv(
            file_path,
            index=False,
            float_format=f"%.{config.TRACE_FLOAT_DECIMALS}f",
            lineterminator="\n"
        )
        self.logger.info(f"Successfully wrote {len(frame)} samples to trace file: {file_path}")
        return file_path


class EstimateWriter(LoggerMixin):
    """
    Streams estimate blocks to disk as CSV or JSONL.

    Every sample gets one record per appliance plus one `TOTAL` record, so the
    file covers every timestamp even when no appliance model exists yet.
    """

    def __init__(self, file_path: str, output_format: str = 'csv', decimals: Optional[int] = None):
        if output_format not in ('csv', 'jsonl'):
            raise ValueError(f"Unsupported output format: {output_format}")
        self.file_path = file_path
        self.output_format = output_format
        self.decimals = config.ESTIMATE_FLOAT_DECIMALS if decimals is None else decimals
        self.samples_written = 0
        self.energy_kwh = 0.0
        self._handle = None

    def __enter__(self):
        _ensure_parent(self.file_path)
        self._handle = open(self.file_path, 'w', encoding='utf-8', newline='')
        if self.output_format == 'csv':
            self._handle.write(",".join(ESTIMATE_COLUMNS) + "\n")
        return self

    def __exit__(self, exc_type, exc, tb):
        self._handle.close()
        self._handle = None
        if exc_type is None:
            self.logger.info(f"Wrote estimates for {self.samples_written} samples to {self.file_path}")
        return False

    def __call__(self, block: EstimateBlock):
        self.write_block(block)

    def write_block(self, block: EstimateBlock):
        """Append one block of estimates."""
        rows = len(block)
        if rows == 0:
            return
        n = len(block.appliance_ids)

        # Long layout: n appliance records then the TOTAL record, per timestamp
        frame = pd.DataFrame({
            "timestamp": np.repeat(block.timestamps, n + 1),
            "appliance_id": np.tile(np.array(list(block.appliance_ids) + [TOTAL_RECORD_ID], dtype=object), rows),
            "on_probability": np.column_stack([block.on_probability, np.full(rows, np.nan)]).ravel(),
            "decided_state": np.column_stack([
                np.where(block.decided, "on", "off").astype(object), np.full(rows, "", dtype=object)
            ]).ravel(),
            "estimated_power_w": np.column_stack([block.estimated_power, block.total_power]).ravel(),
            "on_power_w": np.tile(np.append(block.on_powers, np.nan), rows)
        })

        if self.output_format == 'csv':
            frame.to_csv(
                self._handle,
                header=False,
                index=False,
                float_format=f"%.{self.decimals}f",
                lineterminator="\n"
            )
        else:
            frame.insert(0, "type", np.tile(np.array(["estimate"] * n + ["total"], dtype=object), rows))
            self._handle.write(self._jsonl(frame))

        self.samples_written += rows
        self.energy_kwh += float(block.total_power.sum()) / 3.6e6

    def _jsonl(self, frame: pd.DataFrame) -> str:
        lines = []
        for record in frame.to_dict(orient="records"):
            if record["type"] == "total":
                out = {
                    "type": "total",
                    "timestamp": int(record["timestamp"]),
                    "total_estimated_power_w": round(float(record["estimated_power_w"]), self.decimals)
                }
            else:
                out = {
                    "type": "estimate",
                    "timestamp": int(record["timestamp"]),
                    "appliance_id": record["appliance_id"],
                    "on_probability": round(float(record["on_probability"]), self.decimals),
                    "decided_state": record["decided_state"],
                    "estimated_power_w": round(float(record["estimated_power_w"]), self.decimals),
                    "on_power_w": round(float(record["on_power_w"]), self.decimals)
                }
            lines.append(json.dumps(out))
        return "\n".join(lines) + "\n"


class StagedOutput(LoggerMixin):
    """
    Collects the files of one command in a hidden staging directory and moves
    them into `output_dir` only when the command succeeds.
    """

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.staging_dir = None
        self._names: List[str] = []

    def __enter__(self):
        parent = os.path.dirname(os.path.abspath(self.output_dir))
        os.makedirs(parent, exist_ok=True)
        self.staging_dir = tempfile.mkdtemp(prefix=".nilm-staging-", dir=parent)
        return self

    def path(self, name: str) -> str:
        """Staging path for an artifact that will end up as `output_dir/name`."""
        if name not in self._names:
            self._names.append(name)
        return os.path.join(self.staging_dir, name)

    def final_path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                os.makedirs(self.output_dir, exist_ok=True)
                for name in self._names:
                    staged = os.path.join(self.staging_dir, name)
                    if os.path.exists(staged):
                        os.replace(staged, self.final_path(name))
                self.logger.info(f"Committed {len(self._names)} artifacts to {self.output_dir}")
            else:
                self.logger.warning(f"Discarding staged artifacts for {self.output_dir}")
        finally:
            shutil.rmtree(self.staging_dir, ignore_errors=True)
        return False
