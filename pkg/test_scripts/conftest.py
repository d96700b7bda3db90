"""
Shared fixtures for the test suite.
"""
import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path to import the app modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.pipeline import run_online
from app.core.trace_io import generate_synthetic
from app.models.settings import PipelineConfig
from app.models.trace import ApplianceSpec, GroundTruthTrace
from app.utils.file_parser import FileParser

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SPECS_PATH = os.path.join(REPO_ROOT, "data", "synthetic_specs.json")
PLANTED_POWERS = [200.0, 800.0, 1500.0]
WEEK_SEED = 11


def spec(label, on_power, mean_on_duration=600, activations_per_day=0, noise_stddev=0.0):
    return ApplianceSpec(
        label=label,
        on_power=on_power,
        mean_on_duration=mean_on_duration,
        activations_per_day=activations_per_day,
        noise_stddev=noise_stddev
    )


def small_config(**sections):
    """Hour-long windows and a small particle set, for fast pipeline tests."""
    document = {
        "edges": {"window_length": 3600, "min_partial_window": 600},
        "pf": {"particle_count": 50}
    }
    for name, values in sections.items():
        document.setdefault(name, {}).update(values)
    return PipelineConfig.model_validate(document)


def step_trace(levels, start=0):
    """Trace built from (power, seconds) plateaus."""
    aggregate = np.concatenate([np.full(seconds, float(power)) for power, seconds in levels])
    timestamps = np.arange(start, start + len(aggregate), dtype=np.int64)
    return GroundTruthTrace(timestamps=timestamps, aggregate=aggregate)


@pytest.fixture(scope="session")
def week_specs():
    return FileParser().read_specs(SPECS_PATH)


@pytest.fixture(scope="session")
def week_trace(week_specs):
    """Seven days, planted appliances at 200, 800 and 1500 W, about 5 W aggregate noise."""
    return generate_synthetic(week_specs, days=7, seed=WEEK_SEED)


@pytest.fixture(scope="session")
def week_learning(week_trace):
    """Learning stages only over the 7-day fixture."""
    return run_online(week_trace, PipelineConfig(), disaggregate=False, keep_edges=False)


@pytest.fixture(scope="session")
def week_run(week_trace):
    """Full online run over the 7-day fixture with default settings."""
    return run_online(week_trace, PipelineConfig(), keep_edges=False)
