"""
Tests for the pipeline configuration models and loader.
"""
import json
import os

import pytest
from pydantic import ValidationError

from app.core.error_handler import ConfigurationError
from app.models.settings import EdgeConfig, FilterConfig, PipelineConfig, load_pipeline_config
from conftest import REPO_ROOT


def write_config(tmp_path, document):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def test_shipped_default_config_matches_model_defaults():
    loaded = load_pipeline_config(os.path.join(REPO_ROOT, "config", "default_config.json"))
    assert loaded == PipelineConfig()


def test_redd_house_config_loads():
    loaded = load_pipeline_config(os.path.join(REPO_ROOT, "config", "redd_house1.json"))
    assert len(loaded.redd.channels) == len(loaded.redd.labels) > 0


def test_no_path_gives_defaults():
    assert load_pipeline_config(None) == PipelineConfig()


def test_partial_document_keeps_other_defaults(tmp_path):
    loaded = load_pipeline_config(write_config(tmp_path, {"pf": {"particle_count": 200}}))
    assert loaded.pf.particle_count == 200
    assert loaded.pf.observation_noise_stddev == 25.0
    assert loaded.edges == EdgeConfig()


def test_even_median_window_names_the_field(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        load_pipeline_config(write_config(tmp_path, {"filter": {"median_window": 30}}))
    assert "filter.median_window" in str(excinfo.value)


def test_unknown_key_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        load_pipeline_config(write_config(tmp_path, {"pf": {"particles": 10}}))
    assert "pf.particles" in str(excinfo.value)


def test_notes_are_ignored(tmp_path):
    loaded = load_pipeline_config(write_config(tmp_path, {"_about": "x", "db": {"_merge_threshold": "note"}}))
    assert loaded == PipelineConfig()


def test_invalid_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_pipeline_config(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_pipeline_config(str(tmp_path / "missing.json"))


@pytest.mark.parametrize("section", [
    {"edges": {"window_length": 1800}},
    {"edges": {"window_length": 3600, "window_step": 7200}},
    {"db": {"stay_probability": 1.0}},
    {"pf": {"decision_threshold": 0.0}},
    {"filter": {"smoothing": "gaussian"}},
    {"redd": {"channels": [1, 2], "labels": ["mains"]}},
])
def test_out_of_range_values(tmp_path, section):
    with pytest.raises(ConfigurationError):
        load_pipeline_config(write_config(tmp_path, section))


def test_window_step_defaults_to_window_length():
    assert EdgeConfig(window_length=7200).step == 7200
    assert EdgeConfig(window_length=7200, window_step=3600).step == 3600


def test_pair_tolerance_is_the_larger_bound():
    edges = EdgeConfig()
    assert edges.pair_tolerance(100.0) == 20.0
    assert edges.pair_tolerance(1500.0) == pytest.approx(150.0)


def test_with_seed_copies_only_the_seed():
    config = PipelineConfig()
    seeded = config.with_seed(42)

    assert seeded.pf.rng_seed == 42
    assert config.pf.rng_seed == 0
    assert seeded.filter == config.filter
    assert config.with_seed(None) is config


def test_sections_are_frozen():
    with pytest.raises(ValidationError):
        FilterConfig().median_window = 5
