"""Manifest loading: media metadata plus expert per-video labels.

A manifest is UTF-8 JSONL, one record per recording::

    {"video_id": "...", "patient_id": "...", "video_path": "...",
     "audio_path": "...", "fps": 6.0, "duration_s": 90.0,
     "width": 160, "height": 120, "labels": {"tonic": true, ...}}

Paths are stored as written and resolved against the manifest's
directory at access time. Labels are the adjudicated booleans, one per
catalog feature per video; strict loading rejects gaps.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .media import VideoReader

GroundTruth = dict[str, dict[str, bool]]


@dataclass(frozen=True)
class MediaItem:
    video_id: str
    patient_id: str
    video_path: str
    audio_path: str
    fps: float
    duration_s: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValidationError(f"{self.video_id}: fps must be positive, got {self.fps}")
        if self.duration_s <= 0:
            raise ValidationError(f"{self.video_id}: duration_s must be positive, got {self.duration_s}")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"{self.video_id}: frame size must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class Manifest:
    items: tuple[MediaItem, ...]
    truth: GroundTruth
    root: Path = field(default_factory=Path, compare=False)

    def __post_init__(self) -> None:
        ids = [it.video_id for it in self.items]
        if len(set(ids)) != len(ids):
            dup = next(v for i, v in enumerate(ids) if v in ids[:i])
            raise ValidationError(f"duplicate video_id {dup!r}")
        stray = set(self.truth) - set(ids)
        if stray:
            raise ValidationError(f"truth references unknown video_ids {sorted(stray)}")

    def item(self, video_id: str) -> MediaItem:
        for it in self.items:
            if it.video_id == video_id:
                return it
        raise ValidationError(f"unknown video_id {video_id!r}")

    def video_ids(self) -> tuple[str, ...]:
        return tuple(it.video_id for it in self.items)

    def patient_of(self, video_id: str) -> str:
        return self.item(video_id).patient_id

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.root / p


def load_manifest(path: str | Path, required_features: Iterable[str] | None = None,
                  strict: bool = True, probe: bool = False) -> Manifest:
    """Parse a manifest file.

    With ``required_features`` and ``strict``, every video must carry a
    boolean label for every listed feature. With ``probe``, fps/duration
    are read from the media file headers instead of trusted from the
    manifest fields.
    """
    path = Path(path)
    items: list[MediaItem] = []
    truth: GroundTruth = {}
    try:
        lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        labels = rec.pop("labels", {})
        try:
            item = MediaItem(**{k: rec[k] for k in
                                ("video_id", "patient_id", "video_path", "audio_path",
                                 "fps", "duration_s", "width", "height")})
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from exc
        if probe:
            reader = VideoReader(path.parent / item.video_path, video_id=item.video_id)
            item = MediaItem(video_id=item.video_id, patient_id=item.patient_id,
                             video_path=item.video_path, audio_path=item.audio_path,
                             fps=reader.fps, duration_s=reader.duration_s,
                             width=reader.width, height=reader.height)
        items.append(item)
        for feat, value in labels.items():
            if not isinstance(value, bool):
                raise ValidationError(f"{item.video_id}: label {feat!r} must be a boolean, got {value!r}")
        truth[item.video_id] = dict(labels)
    manifest = Manifest(items=tuple(items), truth=truth, root=path.parent)
    if strict and required_features is not None:
        required = list(required_features)
        for it in manifest.items:
            missing = [f for f in required if f not in manifest.truth.get(it.video_id, {})]
            if missing:
                raise ValidationError(f"{it.video_id}: missing labels for {missing} (strict mode)")
    return manifest


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Inverse of load_manifest on the data model (round-trip tested)."""
    with open(path, "w", encoding="utf-8") as fh:
        for it in manifest.items:
            rec = {
                "video_id": it.video_id,
                "patient_id": it.patient_id,
                "video_path": it.video_path,
                "audio_path": it.audio_path,
                "fps": it.fps,
                "duration_s": it.duration_s,
                "width": it.width,
                "height": it.height,
                "labels": dict(sorted(manifest.truth.get(it.video_id, {}).items())),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def patients_of(manifest: Manifest) -> list[str]:
    """Sorted, de-duplicated patient ids; independent of manifest order."""
    return sorted({it.patient_id for it in manifest.items})
