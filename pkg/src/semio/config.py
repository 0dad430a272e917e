"""Run configuration: config file plus flag overrides, flags win.

Every random choice in a run is driven by an explicit seed stored here
(fold assignment, true-negative sampling, mock decision noise) — there
are no wall-clock defaults, so two runs from the same config are
identical. Remote backends read their base URLs from the config or from
``SEMIO_BASE_URL_<ROLE>`` and the shared token from
``SEMIO_BACKEND_TOKEN``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backends import ROLES
from .catalog import PROMPT_STYLES
from .errors import ConfigError


@dataclass(frozen=True)
class Seeds:
    folds: int = 13
    tn_sampling: int = 17
    mock_noise: int = 29


@dataclass(frozen=True)
class RunConfig:
    manifest: str = ""
    catalog: str = ""  # empty -> packaged default catalog
    out_dir: str = "out"
    backends: dict[str, str] = field(default_factory=lambda: {r: f"mock:{r}" for r in ROLES})
    base_urls: dict[str, str] = field(default_factory=dict)
    segment_len_s: float = 30.0
    overlap_s: float = 5.0
    target_fps: float = 2.0
    prompt_style: str = "expert"
    folds_k: int = 3
    seeds: Seeds = field(default_factory=Seeds)
    compare_enhancement: bool = False
    enhanced: bool = False
    transcript_for_audio: bool = True
    mock_noise_p: float = 0.0
    max_inflight: int = 4
    max_attempts: int = 2
    backoff_s: float = 0.5
    timeout_s: float = 30.0
    strict_catalog: bool = True

    def __post_init__(self) -> None:
        if self.prompt_style not in PROMPT_STYLES:
            raise ConfigError(f"unknown prompt style {self.prompt_style!r}; choose from {PROMPT_STYLES}")
        unknown = set(self.backends) - set(ROLES)
        if unknown:
            raise ConfigError(f"unknown backend roles {sorted(unknown)}")
        if self.max_inflight < 1:
            raise ConfigError("max_inflight must be >= 1")
        if not 0.0 <= self.mock_noise_p <= 1.0:
            raise ConfigError("mock_noise_p must be in [0, 1]")

    def backend_id(self, role: str) -> str:
        return self.backends.get(role, f"mock:{role}")

    def base_url(self, role: str) -> str:
        env = os.environ.get(f"SEMIO_BASE_URL_{role.upper()}", "")
        return env or self.base_urls.get(role, "")

    @property
    def token(self) -> str:
        return os.environ.get("SEMIO_BACKEND_TOKEN", "")

    def out_path(self) -> Path:
        return Path(self.out_dir)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    seeds = Seeds(**doc.pop("seeds", {}))
    try:
        return RunConfig(seeds=seeds, **doc)
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Flag overrides; None values are 'not given' and keep config values."""
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "backend_overrides":
            merged = dict(config.backends)
            for spec in value:
                if "=" not in spec:
                    raise ConfigError(f"--backend expects role=id, got {spec!r}")
                role, _, backend_id = spec.partition("=")
                if role not in ROLES:
                    raise ConfigError(f"unknown backend role {role!r}")
                merged[role] = backend_id
            updates["backends"] = merged
        elif key == "folds_seed":
            updates["seeds"] = replace(config.seeds, folds=value)
        else:
            updates[key] = value
    return replace(config, **updates) if updates else config
