"""Shared fixtures: the synthetic suite is generated once per session and
the noise-free compare-enhancement run once, because several test modules
(and most acceptance criteria) read from the same artifacts."""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from semio.catalog import load_default_catalog
from semio.config import RunConfig
from semio.fixtures import generate_suite
from semio.pipeline import run_all

ELAPSED: dict[str, float] = {}


@pytest.fixture(scope="session")
def catalog():
    return load_default_catalog()


@pytest.fixture(scope="session")
def suite(tmp_path_factory, catalog):
    """(media_dir, manifest_path) for the default 12-clip suite."""
    media_dir = tmp_path_factory.mktemp("suite_media")
    t0 = time.monotonic()
    manifest_path = generate_suite(media_dir, catalog.feature_ids, seed=7)
    ELAPSED["suite"] = time.monotonic() - t0
    return Path(media_dir), manifest_path


@pytest.fixture(scope="session")
def noise0_run(tmp_path_factory, suite):
    """Full noise-free run, raw + enhanced, evaluated."""
    _, manifest_path = suite
    out_dir = tmp_path_factory.mktemp("noise0_out")
    config = RunConfig(manifest=str(manifest_path), out_dir=str(out_dir),
                       compare_enhancement=True)
    t0 = time.monotonic()
    summary = run_all(config)
    ELAPSED["noise0_run"] = time.monotonic() - t0
    assert summary.complete, f"incomplete pairs: {summary.incomplete}"
    return config, summary
