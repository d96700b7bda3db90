"""
Main entry point for the NILM disaggregator command line.

Subcommands:
    synth           generate a synthetic aggregate trace with ground truth
    detect-states   run the learning stages only and export states
    run             full online disaggregation
    evaluate        score an estimate file against ground truth
"""
import argparse
import logging
import os
import sys
import time
from typing import List, Optional

import app.config as config
from app.core.appliance_db import ApplianceDatabase
from app.core.error_handler import ConfigurationError, ErrorHandler, UsageError
from app.core.evaluation import evaluate
from app.core.pipeline import run_online
from app.core.trace_io import generate_synthetic, load_redd_house, validate_trace
from app.models.settings import PipelineConfig, load_pipeline_config
from app.models.trace import GroundTruthTrace
from app.reporting.report_generator import ReportGenerator, format_evaluation
from app.utils.file_parser import FileParser
from app.utils.file_writer import EstimateWriter, FileWriter, StagedOutput
from app.utils.logger import setup_logger

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--out', '-o', default=config.DEFAULT_OUTPUT_DIR,
                        help=f'Output directory (default: {config.DEFAULT_OUTPUT_DIR})')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')
    parser.add_argument('--log-file', default=None, help='Log file path (empty string disables file logging)')


def _add_pipeline_options(parser: argparse.ArgumentParser):
    parser.add_argument('--input', '-i', required=True,
                        help='Trace CSV (timestamp,power_w[,...]) or a REDD house directory')
    parser.add_argument('--config', '-c', default=None,
                        help=f'Pipeline config JSON (default: {config.DEFAULT_CONFIG_PATH} if present)')
    parser.add_argument('--format', '-f', choices=['csv', 'jsonl'], default='csv', help='Table output format')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Unsupervised online NILM disaggregator')
    subparsers = parser.add_subparsers(dest='command', required=True)

    synth = subparsers.add_parser('synth', help='Generate a synthetic trace with ground truth')
    synth.add_argument('--specs', '-s', required=True, help='Appliance spec JSON file')
    synth.add_argument('--days', '-d', type=int, default=1, help='Number of days (default: 1)')
    synth.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    _add_common(synth)

    detect = subparsers.add_parser('detect-states', help='Learn appliance states without disaggregating')
    _add_pipeline_options(detect)
    detect.add_argument('--debug-edges', action='store_true', help='Also export every edge and edge pair')
    _add_common(detect)

    run = subparsers.add_parser('run', help='Run online disaggregation')
    _add_pipeline_options(run)
    run.add_argument('--seed', type=int, default=None, help='Override pf.rng_seed')
    run.add_argument('--initial-db', default=None, help='Appliance database to start from')
    _add_common(run)

    evaluate_parser = subparsers.add_parser('evaluate', help='Score estimates against ground truth')
    evaluate_parser.add_argument('--input', '-i', required=True, help='Estimates file written by run')
    evaluate_parser.add_argument('--ground-truth', '-g', required=True,
                                 help='Ground-truth trace CSV or REDD house directory')
    evaluate_parser.add_argument('--reference-states', '-r', default=config.DEFAULT_REFERENCE_STATES,
                                 help=f'Reference power states JSON (default: {config.DEFAULT_REFERENCE_STATES})')
    evaluate_parser.add_argument('--config', '-c', default=None, help='Pipeline config JSON')
    evaluate_parser.add_argument('--updates', '-u', default=None,
                                 help='update_reports file of the run (default: next to --input if present)')
    evaluate_parser.add_argument('--skip-days', type=int, default=None,
                                 help='Leading days excluded from scoring (default: evaluation.skip_days)')
    evaluate_parser.add_argument('--format', '-f', choices=['csv', 'jsonl'], default='csv',
                                 help='Table output format')
    _add_common(evaluate_parser)

    return parser


def _load_config(path: Optional[str]) -> PipelineConfig:
    if path is None and os.path.exists(config.DEFAULT_CONFIG_PATH):
        path = config.DEFAULT_CONFIG_PATH
    return load_pipeline_config(path)


def load_trace(path: str, pipeline_config: PipelineConfig) -> GroundTruthTrace:
    """Read a trace CSV, or a REDD house directory using the configured channel selection."""
    if os.path.isdir(path):
        redd = pipeline_config.redd
        if not redd.channels:
            raise ConfigurationError("redd.channels must list the channels to load from a house directory")
        trace = load_redd_house(path, redd.channels, redd.labels or None, redd.max_fill_gap)
    else:
        trace = FileParser().read_trace_csv(path)
    return validate_trace(trace, check_sum=False)


def cmd_synth(args) -> int:
    if args.days < 1:
        raise UsageError(f"--days must be >= 1, got {args.days}")

    specs = FileParser().read_specs(args.specs)
    trace = generate_synthetic(specs, args.days, args.seed)
    validate_trace(trace)

    writer = FileWriter()
    with StagedOutput(args.out) as output:
        writer.write_trace_csv(trace, output.path("aggregate.csv"))
        writer.write_trace_csv(trace, output.path("ground_truth.csv"), include_appliances=True)

    print(f"\nGenerated {len(trace)} samples for {len(specs)} appliances over {args.days} days")
    print(f"- aggregate: {os.path.join(args.out, 'aggregate.csv')}")
    print(f"- ground truth: {os.path.join(args.out, 'ground_truth.csv')}")
    return ErrorHandler.EXIT_SUCCESS


def cmd_detect_states(args) -> int:
    pipeline_config = _load_config(args.config)
    trace = load_trace(args.input, pipeline_config)

    result = run_online(trace, pipeline_config, disaggregate=False, keep_edges=args.debug_edges)

    with StagedOutput(args.out) as output:
        report_files = ReportGenerator(output, args.format).write_detect_states(result, args.debug_edges)

    print(f"\nDetected {len(result.database)} appliance states in {len(result.windows)} windows:")
    for model_id, power in sorted(result.database.on_powers.items(), key=lambda item: item[1]):
        print(f"- {model_id}: {power:.1f} W")
    _print_files(report_files)
    return ErrorHandler.EXIT_SUCCESS


def cmd_run(args) -> int:
    pipeline_config = _load_config(args.config).with_seed(args.seed)
    initial_db = ApplianceDatabase.load(args.initial_db, pipeline_config.db) if args.initial_db else None
    trace = load_trace(args.input, pipeline_config)

    start_time = time.time()
    estimates_name = f"estimates.{args.format}"
    with StagedOutput(args.out) as output:
        with EstimateWriter(output.path(estimates_name), args.format) as estimate_writer:
            result = run_online(trace, pipeline_config, initial_db, sink=estimate_writer)

        generator = ReportGenerator(output, args.format)
        summary = generator.run_summary(result, estimate_writer.energy_kwh, estimate_writer.samples_written)
        summary["input"] = trace.to_dict()
        report_files = generator.write_run(result, summary)
        report_files['estimates'] = output.final_path(estimates_name)

    processing_time = time.time() - start_time
    print("\nDisaggregation Results:")
    print(f"Samples: {summary['samples']}")
    print(f"Windows: {summary['windows']}")
    print(f"Appliance models: {summary['model_count']}")
    print(f"Total estimated energy: {summary['total_estimated_energy_kwh']:.3f} kWh")
    print(f"Processing Time: {processing_time:.2f} seconds")
    _print_files(report_files)
    return ErrorHandler.EXIT_SUCCESS


def cmd_evaluate(args) -> int:
    pipeline_config = _load_config(args.config)
    parser = FileParser()

    reference = parser.read_reference_states(args.reference_states)
    if args.skip_days is not None and args.skip_days < 0:
        raise UsageError("--skip-days must be >= 0")
    estimates, states_per_day = parser.read_estimates(args.input)
    updates_path = args.updates or _sibling_updates(args.input)
    if updates_path is not None:
        states_per_day = parser.read_update_states(updates_path)
    ground_truth = load_trace(args.ground_truth, pipeline_config)

    report = evaluate(estimates, ground_truth, reference, pipeline_config.evaluation,
                      states_per_day=states_per_day, skip_days=args.skip_days)

    with StagedOutput(args.out) as output:
        report_files = ReportGenerator(output, args.format).write_evaluation(report)

    print()
    print(format_evaluation(report), end="")
    _print_files(report_files)
    return ErrorHandler.EXIT_SUCCESS


COMMANDS = {
    'synth': cmd_synth,
    'detect-states': cmd_detect_states,
    'run': cmd_run,
    'evaluate': cmd_evaluate
}


def _sibling_updates(estimates_path: str) -> Optional[str]:
    """The update_reports table written next to an estimates file, if any."""
    extension = os.path.splitext(estimates_path)[1]
    candidate = os.path.join(os.path.dirname(estimates_path), f"update_reports{extension}")
    return candidate if os.path.exists(candidate) else None


def _print_files(report_files):
    print("\nReport files generated:")
    for report_type, file_path in report_files.items():
        print(f"- {report_type}: {file_path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad usage; usage errors are exit code 1 here
        return ErrorHandler.EXIT_USAGE if e.code else ErrorHandler.EXIT_SUCCESS

    log_level = logging.DEBUG if args.verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
    setup_logger(log_level, args.log_file)

    logger.info(f"Starting '{args.command}'")
    handler = ErrorHandler()
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        exit_code, message = handler.handle_exception(e)
        print(f"\nError: {message}", file=sys.stderr)
        return exit_code


if __name__ == "__main__":
    sys.exit(main())
