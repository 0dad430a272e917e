"""Reading and writing the per-clip sidecar files that mocks consume.

Every generated clip is accompanied by four checksummed sidecars next to
its media file (see :mod:`semio.media` for the header format):

* ``<clip>.labels.jsonl``    one line per feature:
  ``{"feature_id", "present", "intervals": [[start_s, end_s], ...]}``
* ``<clip>.faces.jsonl``     one line per source frame:
  ``{"frame_index", "x", "y", "w", "h"}``
* ``<clip>.skeleton.jsonl``  one line per source frame:
  ``{"frame_index", "keypoints": [[joint_id, x, y, confidence], ...]}``
* ``<clip>.utterance.jsonl`` zero or one line: ``{"text": "..."}``

Mock backends treat these as the ground truth the real models would have
to recover, which makes the whole pipeline verifiable end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .enhance import BoundingBox, Skeleton
from .errors import MediaError
from .media import read_sidecar, write_sidecar


@dataclass(frozen=True)
class LabelEntry:
    present: bool
    intervals: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class ClipPaths:
    """Canonical on-disk layout of one clip and its sidecars."""

    video: Path
    audio: Path
    labels: Path
    faces: Path
    skeleton: Path
    utterance: Path

    @classmethod
    def for_clip(cls, media_dir: str | Path, clip_id: str) -> "ClipPaths":
        d = Path(media_dir)
        return cls(
            video=d / f"{clip_id}.video.svf",
            audio=d / f"{clip_id}.audio.wav",
            labels=d / f"{clip_id}.labels.jsonl",
            faces=d / f"{clip_id}.faces.jsonl",
            skeleton=d / f"{clip_id}.skeleton.jsonl",
            utterance=d / f"{clip_id}.utterance.jsonl",
        )


def write_labels(path: Path, labels: dict[str, LabelEntry]) -> None:
    lines = [
        json.dumps({"feature_id": fid, "present": e.present,
                    "intervals": [list(iv) for iv in e.intervals]}, sort_keys=True)
        for fid, e in sorted(labels.items())
    ]
    write_sidecar(path, lines)


def read_labels(path: Path) -> dict[str, LabelEntry]:
    out: dict[str, LabelEntry] = {}
    for line in read_sidecar(path):
        rec = json.loads(line)
        out[rec["feature_id"]] = LabelEntry(
            present=bool(rec["present"]),
            intervals=tuple((float(a), float(b)) for a, b in rec.get("intervals", [])),
        )
    return out


def write_face_track(path: Path, boxes: list[tuple[int, BoundingBox]]) -> None:
    lines = [
        json.dumps({"frame_index": idx, "x": b.x, "y": b.y, "w": b.w, "h": b.h}, sort_keys=True)
        for idx, b in boxes
    ]
    write_sidecar(path, lines)


def read_face_track(path: Path) -> dict[int, BoundingBox]:
    out = {}
    for line in read_sidecar(path):
        rec = json.loads(line)
        out[int(rec["frame_index"])] = BoundingBox(x=rec["x"], y=rec["y"], w=rec["w"], h=rec["h"])
    return out


def write_skeleton_track(path: Path, skeletons: list[tuple[int, Skeleton]]) -> None:
    lines = [
        json.dumps({"frame_index": idx,
                    "keypoints": [[jid, x, y, conf] for jid, x, y, conf in sk.keypoints]},
                   sort_keys=True)
        for idx, sk in skeletons
    ]
    write_sidecar(path, lines)


def read_skeleton_track(path: Path) -> dict[int, Skeleton]:
    out = {}
    for line in read_sidecar(path):
        rec = json.loads(line)
        kps = tuple((int(j), float(x), float(y), float(c)) for j, x, y, c in rec["keypoints"])
        out[int(rec["frame_index"])] = Skeleton(keypoints=kps)
    return out


def write_utterance(path: Path, text: str | None) -> None:
    lines = [] if not text else [json.dumps({"text": text}, sort_keys=True)]
    write_sidecar(path, lines)


def read_utterance(path: Path) -> str:
    lines = read_sidecar(path)
    if not lines:
        return ""
    return json.loads(lines[0])["text"]


class SidecarIndex:
    """Lazy, cached lookup of sidecar truth across a manifest's clips."""

    def __init__(self, clip_dirs: dict[str, Path]):
        # video_id -> directory holding that clip's media + sidecars
        self._dirs = dict(clip_dirs)
        self._labels: dict[str, dict[str, LabelEntry]] = {}
        self._faces: dict[str, dict[int, BoundingBox]] = {}
        self._skeletons: dict[str, dict[int, Skeleton]] = {}
        self._utterances: dict[str, str] = {}

    @classmethod
    def from_manifest(cls, manifest) -> "SidecarIndex":
        dirs = {it.video_id: manifest.resolve(it.video_path).parent for it in manifest.items}
        return cls(dirs)

    def _paths(self, video_id: str) -> ClipPaths:
        try:
            return ClipPaths.for_clip(self._dirs[video_id], video_id)
        except KeyError:
            raise MediaError(f"no sidecar directory known for video {video_id!r}") from None

    def labels(self, video_id: str) -> dict[str, LabelEntry]:
        if video_id not in self._labels:
            self._labels[video_id] = read_labels(self._paths(video_id).labels)
        return self._labels[video_id]

    def face_box(self, video_id: str, frame_index: int) -> BoundingBox | None:
        if video_id not in self._faces:
            self._faces[video_id] = read_face_track(self._paths(video_id).faces)
        return self._faces[video_id].get(frame_index)

    def skeleton(self, video_id: str, frame_index: int) -> Skeleton | None:
        if video_id not in self._skeletons:
            self._skeletons[video_id] = read_skeleton_track(self._paths(video_id).skeleton)
        return self._skeletons[video_id].get(frame_index)

    def utterance(self, video_id: str) -> str:
        if video_id not in self._utterances:
            self._utterances[video_id] = read_utterance(self._paths(video_id).utterance)
        return self._utterances[video_id]
