"""
Report generation for run, detect-states and evaluate artifacts.
"""
import logging
from typing import Any, Dict, List, Optional

from app.core.pipeline import PipelineResult, WindowSummary
from app.models.report import EvaluationReport
from app.utils.file_writer import FileWriter, StagedOutput
from app.utils.logger import LoggerMixin

logger = logging.getLogger(__name__)

EDGE_COLUMNS = ["time", "direction", "magnitude", "pre_level", "post_level"]
PAIR_COLUMNS = ["on_time", "off_time", "magnitude", "duration"]
STATE_COLUMNS = ["window", "day", "nominal_power", "support", "bin_low", "bin_high", "total_duration"]
UPDATE_COLUMNS = ["day", "created", "merged", "absorbed", "pruned", "model_count", "model_powers"]
MODEL_COLUMNS = ["id", "on_power", "first_seen_day", "last_seen_day", "total_appearances",
                 "p_switch_on", "p_switch_off"]


class ReportGenerator(LoggerMixin):
    """Writes the artifacts of one CLI command into a staged output directory."""

    def __init__(self, output: StagedOutput, output_format: str = 'csv'):
        """
        Initialize the ReportGenerator.

        Args:
            output (StagedOutput): Staging area of the command
            output_format (str): Table format, csv or jsonl
        """
        self.output = output
        self.output_format = output_format.lower()
        self.file_writer = FileWriter()

    @property
    def table_extension(self) -> str:
        return 'jsonl' if self.output_format == 'jsonl' else 'csv'

    def _table(self, name: str, rows: List[Dict[str, Any]], record_type: str, headers: List[str]) -> str:
        file_name = f"{name}.{self.table_extension}"
        self.file_writer.write_table(rows, self.output.path(file_name), self.output_format, record_type, headers)
        return self.output.final_path(file_name)

    def _json(self, name: str, data: Any) -> str:
        self.file_writer.write_json(data, self.output.path(name))
        return self.output.final_path(name)

    def run_summary(self, result: PipelineResult, energy_kwh: Optional[float] = None,
                    samples: Optional[int] = None) -> Dict[str, Any]:
        """Headline numbers of a run: model count and total estimated energy."""
        if energy_kwh is None:
            energy_kwh = float(result.estimates.total_power.sum()) / 3.6e6
        return {
            "samples": len(result.estimates) if samples is None else samples,
            "windows": len(result.windows),
            "model_count": len(result.database),
            "total_estimated_energy_kwh": energy_kwh,
            "models": [
                {"id": model_id, "on_power": power}
                for model_id, power in sorted(result.database.on_powers.items(), key=lambda item: item[1])
            ]
        }

    def write_run(self, result: PipelineResult, summary: Dict[str, Any]) -> Dict[str, str]:
        """
        Write the database snapshot, update reports and run summary.

        Returns:
            Dict[str, str]: Artifact kind -> final path
        """
        report_files = {}

        result.database.save(self.output.path("database.json"))
        report_files['database'] = self.output.final_path("database.json")

        update_rows = [_update_row(window) for window in result.windows]
        report_files['updates'] = self._table("update_reports", update_rows, "update", UPDATE_COLUMNS)

        report_files['models'] = self._table("models", self._model_rows(result), "model", MODEL_COLUMNS)
        report_files['summary'] = self._json("summary.json", summary)

        self.logger.info(f"Generated {len(report_files)} run artifacts")
        return report_files

    def write_detect_states(self, result: PipelineResult, debug_edges: bool = False) -> Dict[str, str]:
        """
        Write the histogram, per-window states and database; with `debug_edges`
        also every window's edges and pairs.
        """
        report_files = {}

        histogram = result.histogram
        histogram_rows = histogram.to_rows() if histogram is not None else []
        report_files['histogram'] = self._table("histogram", histogram_rows, "histogram_bin", ["bin_low_w", "count"])

        state_rows = [row for window in result.windows for row in window.state_rows()]
        report_files['states'] = self._table("states", state_rows, "state", STATE_COLUMNS)

        update_rows = [_update_row(window) for window in result.windows]
        report_files['updates'] = self._table("update_reports", update_rows, "update", UPDATE_COLUMNS)

        result.database.save(self.output.path("database.json"))
        report_files['database'] = self.output.final_path("database.json")

        if debug_edges:
            edge_rows = [edge.to_dict() for window in result.windows for edge in window.edges]
            pair_rows = [pair.to_dict() for window in result.windows for pair in window.pairs]
            report_files['edges'] = self._table("edges", edge_rows, "edge", EDGE_COLUMNS)
            report_files['pairs'] = self._table("pairs", pair_rows, "pair", PAIR_COLUMNS)

        self.logger.info(f"Generated {len(report_files)} state detection artifacts")
        return report_files

    def write_evaluation(self, report: EvaluationReport) -> Dict[str, str]:
        """Write the evaluation summary (JSON and text), the share table and the per-day state counts."""
        report_files = {
            'summary': self._json("evaluation.json", report.to_dict()),
            'shares': self._table(
                "energy_shares", report.share_rows(), "share",
                ["label", "estimated_kwh", "estimated_share", "actual_kwh", "actual_share"]
            ),
            'per_day': self._table(
                "states_per_day", report.per_day_rows(), "day_states", ["day", "assignable", "unassignable"]
            ),
            'rmse': self._table(
                "rmse", [{"label": label, "rmse_w": value} for label, value in report.per_appliance_rmse.items()],
                "rmse", ["label", "rmse_w"]
            )
        }

        with open(self.output.path("evaluation.txt"), 'w', encoding='utf-8') as text_file:
            text_file.write(format_evaluation(report))
        report_files['text'] = self.output.final_path("evaluation.txt")

        self.logger.info(f"Generated {len(report_files)} evaluation artifacts")
        return report_files

    @staticmethod
    def _model_rows(result: PipelineResult) -> List[Dict[str, Any]]:
        return [
            {
                "id": model.id,
                "on_power": model.on_power,
                "first_seen_day": model.metadata.first_seen_day,
                "last_seen_day": model.metadata.last_seen_day,
                "total_appearances": model.metadata.total_appearances,
                "p_switch_on": model.p_switch_on,
                "p_switch_off": model.p_switch_off
            }
            for model in sorted(result.database.models.values(), key=lambda m: (m.on_power, m.id))
        ]


def _update_row(window: WindowSummary) -> Dict[str, Any]:
    """One update report plus the `id:on_power` pairs held after it."""
    row = window.report.to_dict()
    for key in ("created", "merged", "absorbed", "pruned"):
        row[key] = " ".join(row[key])
    row["model_powers"] = " ".join(f"{model_id}:{float(power)!r}" for model_id, power in window.model_powers)
    return row


def format_evaluation(report: EvaluationReport) -> str:
    """Plain-text summary of an evaluation."""
    lines = [
        "Disaggregation evaluation",
        "",
        f"Samples evaluated:        {report.samples}",
        f"Estimated energy:         {report.total_energy_estimated:.3f} kWh",
        f"Actual energy:            {report.total_energy_actual:.3f} kWh",
        f"Energy error:             {100 * report.energy_error_fraction:.2f} %",
        f"Unassigned energy share:  {100 * report.unknown_share:.2f} %",
        "",
        "Energy shares (estimated / actual):"
    ]
    for row in report.share_rows():
        lines.append(
            f"  {row['label']:<30} {100 * row['estimated_share']:6.2f} % / {100 * row['actual_share']:6.2f} %"
        )
    if report.per_appliance_rmse:
        lines += ["", "RMSE per appliance:"]
        for label, value in report.per_appliance_rmse.items():
            lines.append(f"  {label:<30} {value:8.2f} W")
    return "\n".join(lines) + "\n"
