"""Synthetic labeled clips: rendered stick figures plus synthetic audio.

Each fixture plants a set of features as simple parametric motion
programs on an 18-joint stick figure (rigid extended limbs for tonic,
3 Hz limb oscillation for clonic, hip oscillation for pelvic thrusting,
eyelid toggles for blinking, a dimmed background for sleep, tone bursts
for the audio features, and so on — one program per catalog feature).
These are pipeline-plumbing animations, not clinical simulations.

Alongside the media, every clip gets checksummed sidecars (labels with
active intervals, per-frame face boxes and skeletons, utterance text)
that the mock backends read back as ground truth, which is what lets the
end-to-end suite verify the pipeline without clinical data.

Identical FixtureSpecs produce byte-identical files.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import draw
from .enhance import JOINT_NAMES, BoundingBox, Skeleton
from .errors import GenerationError
from .ingest import Manifest, MediaItem, save_manifest
from .media import AUDIO_RATE, write_video, write_wav
from .segmenter import round_half_up
from .sidecars import (
    ClipPaths,
    LabelEntry,
    read_labels,
    write_face_track,
    write_labels,
    write_skeleton_track,
    write_utterance,
)

# reference joint positions for a 160x120 frame, figure supine, head left
_REF_W, _REF_H = 160, 120
_BASE_JOINTS: dict[str, tuple[float, float]] = {
    "nose": (30, 60), "neck": (44, 60),
    "r_shoulder": (46, 50), "r_elbow": (62, 46), "r_wrist": (78, 44),
    "l_shoulder": (46, 70), "l_elbow": (62, 74), "l_wrist": (78, 76),
    "r_hip": (84, 52), "r_knee": (106, 50), "r_ankle": (126, 48),
    "l_hip": (84, 68), "l_knee": (106, 70), "l_ankle": (126, 72),
    "r_eye": (26, 55), "l_eye": (26, 65), "r_ear": (30, 52), "l_ear": (30, 68),
}

_BG = (70, 72, 75)
_BG_DIM = (24, 25, 28)
_BODY = (205, 180, 150)
_EYE = (15, 15, 15)
_MOUTH = (130, 60, 60)
_HEAD_RADIUS = 9.0


@dataclass(frozen=True)
class MotionParams:
    onset_s: float
    offset_s: float
    freq_hz: float = 2.0
    amplitude_px: float = 4.0


@dataclass(frozen=True)
class FixtureSpec:
    clip_id: str
    patient_id: str
    duration_s: float
    fps: float
    planted_features: tuple[str, ...] = ()
    motion_params: Mapping[str, MotionParams] = field(default_factory=dict)
    utterance: str | None = None
    seed: int = 0
    width: int = 160
    height: int = 120

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise GenerationError(f"{self.clip_id}: duration must be positive")
        for fid, mp in self.motion_params.items():
            if not 0 <= mp.onset_s < mp.offset_s <= self.duration_s:
                raise GenerationError(f"{self.clip_id}: bad interval for {fid}: "
                                      f"[{mp.onset_s}, {mp.offset_s}) outside [0, {self.duration_s})")

    def params_for(self, feature_id: str) -> MotionParams:
        if feature_id in self.motion_params:
            return self.motion_params[feature_id]
        return default_intervals(self.duration_s, self.planted_features)[feature_id]


def default_intervals(duration_s: float, planted: Sequence[str]) -> dict[str, MotionParams]:
    """Stagger one active interval per planted feature across the clip."""
    n = max(1, len(planted))
    out = {}
    for i, fid in enumerate(sorted(planted)):
        start = duration_s * 0.08 + (duration_s * 0.72) * (i / n)
        length = max(8.0, 0.18 * duration_s)
        end = min(duration_s, start + length)
        out[fid] = MotionParams(onset_s=round(start, 3), offset_s=round(end, 3))
    return out


def _active(mp: MotionParams, t: float) -> bool:
    return mp.onset_s <= t < mp.offset_s


def _scale(p: tuple[float, float], w: int, h: int) -> tuple[float, float]:
    return (p[0] * w / _REF_W, p[1] * h / _REF_H)


def _joint_offsets(spec: FixtureSpec, intervals: Mapping[str, MotionParams],
                   phases: Mapping[str, float], t: float) -> dict[str, tuple[float, float]]:
    """Per-joint (dx, dy) from every active limb/body motion program."""
    off = {name: [0.0, 0.0] for name in JOINT_NAMES}

    def add(name: str, dx: float, dy: float) -> None:
        off[name][0] += dx
        off[name][1] += dy

    for fid in spec.planted_features:
        mp = intervals.get(fid)
        if mp is None or not _active(mp, t):
            continue
        tt = t - mp.onset_s
        osc = math.sin(2 * math.pi * mp.freq_hz * tt)
        if fid == "tonic":
            for j, dx, dy in (("r_wrist", 7, -3), ("l_wrist", 7, 3),
                              ("r_ankle", 6, -2), ("l_ankle", 6, 2)):
                add(j, dx, dy)
        elif fid == "clonic":
            a = spec.params_for(fid).amplitude_px
            fast = math.sin(2 * math.pi * 3.0 * tt)
            for j, sign in (("r_wrist", -1), ("l_wrist", 1), ("r_ankle", -1), ("l_ankle", 1)):
                add(j, 0.0, sign * a * fast)
        elif fid == "arm_flexion":
            add("r_wrist", -12, 4)
            add("l_wrist", -12, -4)
        elif fid == "arm_straightening":
            add("r_wrist", 8, -1)
            add("l_wrist", 8, 1)
        elif fid == "arms_move_simultaneously":
            a = 5.0
            add("r_wrist", 0.0, a * osc)
            add("l_wrist", 0.0, a * osc)
        elif fid == "asynchronous_movement":
            add("r_wrist", 0.0, 5.0 * math.sin(2 * math.pi * 2.0 * tt))
            add("l_wrist", 0.0, 5.0 * math.sin(2 * math.pi * 3.1 * tt + 1.2))
        elif fid == "figure_4":
            add("r_wrist", -14, 10)   # right arm flexed across the body
            add("l_wrist", 8, 1)      # left arm extended
        elif fid == "limb_automatisms":
            r = 3.0
            add("r_wrist", r * math.cos(2 * math.pi * 1.5 * tt), r * math.sin(2 * math.pi * 1.5 * tt))
            add("l_wrist", r * math.cos(2 * math.pi * 1.5 * tt + 0.8), r * math.sin(2 * math.pi * 1.5 * tt + 0.8))
        elif fid == "pelvic_thrusting":
            a = 3.0 * math.sin(2 * math.pi * 1.5 * tt)
            for j in ("r_hip", "l_hip"):
                add(j, a, 0.0)
            for j in ("r_knee", "l_knee"):
                add(j, 0.6 * a, 0.0)
        elif fid == "full_body_shaking":
            for j in JOINT_NAMES:
                ph = phases[j]
                add(j, 2.0 * math.sin(2 * math.pi * 5.0 * tt + ph),
                    2.0 * math.sin(2 * math.pi * 5.0 * tt + ph + 1.1))
        elif fid == "head_turning":
            drift = 4.0 * math.sin(2 * math.pi * 0.3 * tt)
            for j in ("nose", "r_eye", "l_eye", "r_ear", "l_ear"):
                add(j, 0.0, drift)
    return {k: (v[0], v[1]) for k, v in off.items()}


def _face_state(spec: FixtureSpec, intervals: Mapping[str, MotionParams], t: float) -> dict:
    """Eye/mouth rendering state from the facial programs."""
    state = {"eyes": "open", "eye_radius": 1.4, "mouth_open": 0.0,
             "mouth_shift": 0.0, "jitter": 0.0}
    for fid in spec.planted_features:
        mp = intervals.get(fid)
        if mp is None or not _active(mp, t):
            continue
        tt = t - mp.onset_s
        if fid == "closed_eyes":
            state["eyes"] = "closed"
        elif fid == "eye_blinking":
            state["eyes"] = "closed" if math.sin(2 * math.pi * 1.5 * tt) > 0 else "open"
        elif fid == "blank_stare":
            state["eyes"] = "open"
            state["eye_radius"] = 2.0
        elif fid == "oral_automatisms":
            state["mouth_open"] = 1.2 + 1.0 * math.sin(2 * math.pi * 2.0 * tt)
        elif fid == "face_pulling":
            state["mouth_shift"] = 3.0
        elif fid == "face_twitching":
            state["jitter"] = 1.2 * math.sin(2 * math.pi * 6.0 * tt)
    return state


def _sleep_active(spec: FixtureSpec, intervals: Mapping[str, MotionParams], t: float) -> bool:
    mp = intervals.get("occur_during_sleep")
    return mp is not None and "occur_during_sleep" in spec.planted_features and _active(mp, t)


_BODY_EDGES = (
    ("neck", "r_shoulder"), ("neck", "l_shoulder"),
    ("r_shoulder", "r_elbow"), ("r_elbow", "r_wrist"),
    ("l_shoulder", "l_elbow"), ("l_elbow", "l_wrist"),
    ("neck", "r_hip"), ("r_hip", "r_knee"), ("r_knee", "r_ankle"),
    ("neck", "l_hip"), ("l_hip", "l_knee"), ("l_knee", "l_ankle"),
)


def _render_frame(spec: FixtureSpec, intervals: Mapping[str, MotionParams],
                  phases: Mapping[str, float], t: float) -> tuple[np.ndarray, dict[str, tuple[float, float]]]:
    w, h = spec.width, spec.height
    bg = _BG_DIM if _sleep_active(spec, intervals, t) else _BG
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:, :] = bg

    offsets = _joint_offsets(spec, intervals, phases, t)
    joints = {}
    for name in JOINT_NAMES:
        bx, by = _scale(_BASE_JOINTS[name], w, h)
        dx, dy = offsets[name]
        x, y = bx + dx, by + dy
        if not (1.0 <= x <= w - 2.0 and 1.0 <= y <= h - 2.0):
            raise GenerationError(f"{spec.clip_id}: joint {name} out of frame at t={t:.2f}s ({x:.1f}, {y:.1f})")
        joints[name] = (x, y)

    for a, b in _BODY_EDGES:
        draw.draw_line(img, joints[a], joints[b], _BODY, thickness=3.0)
    head_r = _HEAD_RADIUS * min(w / _REF_W, h / _REF_H)
    draw.draw_disc(img, joints["nose"], head_r, _BODY)

    face = _face_state(spec, intervals, t)
    jitter = face["jitter"]
    for eye in ("r_eye", "l_eye"):
        ex, ey = joints[eye]
        ex += jitter
        if face["eyes"] == "open":
            draw.draw_disc(img, (ex, ey), face["eye_radius"], _EYE)
        else:
            draw.draw_line(img, (ex, ey - 1.5), (ex, ey + 1.5), _EYE, thickness=1.2)
    mx = joints["nose"][0] - 5.0 * w / _REF_W + jitter
    my = joints["nose"][1] + face["mouth_shift"]
    if face["mouth_open"] > 0.2:
        draw.draw_disc(img, (mx, my), face["mouth_open"], _MOUTH)
    else:
        draw.draw_line(img, (mx, my - 2.0), (mx, my + 2.0), _MOUTH, thickness=1.2)

    return img, joints


def _synthesize_audio(spec: FixtureSpec, intervals: Mapping[str, MotionParams]) -> np.ndarray:
    n = round_half_up(spec.duration_s * AUDIO_RATE)
    samples = np.zeros(n, dtype=np.float32)
    t = np.arange(n, dtype=np.float64) / AUDIO_RATE

    def burst_mask(mp: MotionParams, period_on: float, period_off: float) -> np.ndarray:
        inside = (t >= mp.onset_s) & (t < mp.offset_s)
        phase = np.mod(t - mp.onset_s, period_on + period_off)
        return inside & (phase < period_on)

    if "ictal_vocalization" in spec.planted_features:
        mp = spec.params_for("ictal_vocalization")
        mask = burst_mask(mp, 0.6, 0.6)
        saw = 2.0 * np.mod(t * 130.0, 1.0) - 1.0  # groan-like low sawtooth
        samples += np.where(mask, 0.35 * saw, 0.0).astype(np.float32)
    speech_like = "verbal_responsiveness" in spec.planted_features or bool(spec.utterance)
    if speech_like:
        if "verbal_responsiveness" in spec.planted_features:
            mp = spec.params_for("verbal_responsiveness")
        else:
            mp = MotionParams(onset_s=spec.duration_s * 0.7,
                              offset_s=min(spec.duration_s, spec.duration_s * 0.7 + 6.0))
        mask = burst_mask(mp, 0.8, 0.5)
        tone = (np.sin(2 * np.pi * 220 * t) + 0.5 * np.sin(2 * np.pi * 440 * t)
                + 0.25 * np.sin(2 * np.pi * 880 * t))
        envelope = 0.5 * (1 + np.sin(2 * np.pi * 4.0 * t))
        samples += np.where(mask, 0.22 * tone * envelope, 0.0).astype(np.float32)
    return np.clip(samples, -1.0, 1.0)


def generate_fixture(spec: FixtureSpec, out_dir: str | Path) -> ClipPaths:
    """Render one clip: video, audio, and all four sidecars."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = ClipPaths.for_clip(out_dir, spec.clip_id)

    intervals = dict(default_intervals(spec.duration_s, spec.planted_features))
    intervals.update({fid: mp for fid, mp in spec.motion_params.items()})
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    phases = {name: float(rng.uniform(0, 2 * math.pi)) for name in JOINT_NAMES}

    frame_count = round_half_up(spec.duration_s * spec.fps)
    frames = np.empty((frame_count, spec.height, spec.width, 3), dtype=np.uint8)
    skeleton_track: list[tuple[int, Skeleton]] = []
    face_track: list[tuple[int, BoundingBox]] = []
    name_to_id = {n: i for i, n in enumerate(JOINT_NAMES)}
    for k in range(frame_count):
        t = k / spec.fps
        img, joints = _render_frame(spec, intervals, phases, t)
        frames[k] = img
        kps = tuple((name_to_id[n], round(joints[n][0], 2), round(joints[n][1], 2), 1.0)
                    for n in JOINT_NAMES)
        skeleton_track.append((k, Skeleton(keypoints=kps)))
        head_r = _HEAD_RADIUS * min(spec.width / _REF_W, spec.height / _REF_H)
        nx, ny = joints["nose"]
        side = round(3.2 * head_r, 2)
        face_track.append((k, BoundingBox(x=round(max(0.0, nx - side / 2), 2),
                                          y=round(max(0.0, ny - side / 2), 2),
                                          w=side, h=side)))

    write_video(paths.video, frames, spec.fps)
    write_wav(paths.audio, _synthesize_audio(spec, intervals))
    labels = {}
    for fid in spec.planted_features:
        mp = intervals[fid]
        labels[fid] = LabelEntry(present=True, intervals=((mp.onset_s, mp.offset_s),))
    write_labels(paths.labels, labels)
    write_skeleton_track(paths.skeleton, skeleton_track)
    write_face_track(paths.faces, face_track)
    write_utterance(paths.utterance, spec.utterance)
    return paths


def oracle_labels(media_dir: str | Path, clip_id: str,
                  feature_ids: Sequence[str] | None = None) -> dict[str, bool]:
    """Planted labels straight from the (checksum-verified) sidecar."""
    entries = read_labels(ClipPaths.for_clip(media_dir, clip_id).labels)
    planted = {fid: e.present for fid, e in entries.items()}
    if feature_ids is None:
        return planted
    return {fid: planted.get(fid, False) for fid in feature_ids}


# -- default suite -----------------------------------------------------------

_SUITE: tuple[tuple[str, str, float, float, tuple[str, ...], str | None], ...] = (
    ("clip01", "p01", 90.0, 6.0, ("tonic", "oral_automatisms", "ictal_vocalization"), None),
    ("clip02", "p01", 75.0, 5.0, ("clonic", "eye_blinking", "verbal_responsiveness"), "can you hear me"),
    ("clip03", "p02", 80.0, 6.0, ("arm_flexion", "blank_stare", "pelvic_thrusting"), None),
    ("clip04", "p02", 65.0, 5.0, ("figure_4", "closed_eyes", "full_body_shaking"), None),
    ("clip05", "p03", 95.0, 6.0, ("arm_straightening", "face_pulling", "occur_during_sleep"), None),
    ("clip06", "p03", 70.0, 5.0, ("arms_move_simultaneously", "face_twitching", "ictal_vocalization"), None),
    ("clip07", "p04", 85.0, 6.0, ("asynchronous_movement", "head_turning", "verbal_responsiveness"), "i am okay"),
    ("clip08", "p04", 60.0, 5.0, ("limb_automatisms", "tonic", "blank_stare"), None),
    ("clip09", "p05", 88.0, 6.0, ("clonic", "figure_4", "oral_automatisms"), None),
    ("clip10", "p05", 72.0, 5.0, ("pelvic_thrusting", "closed_eyes", "head_turning"), None),
    ("clip11", "p06", 92.0, 6.0, ("full_body_shaking", "arm_flexion", "face_twitching", "occur_during_sleep"), None),
    ("clip12", "p06", 66.0, 5.0, ("eye_blinking", "arm_straightening", "arms_move_simultaneously",
                                   "asynchronous_movement", "limb_automatisms", "face_pulling",
                                   "verbal_responsiveness"), "stop please"),
)


def default_suite(seed: int = 7) -> list[FixtureSpec]:
    """6 patients x 2 clips, 60-95 s, all 20 features planted somewhere."""
    return [FixtureSpec(clip_id=cid, patient_id=pid, duration_s=dur, fps=fps,
                        planted_features=feats, utterance=utt, seed=seed + i)
            for i, (cid, pid, dur, fps, feats, utt) in enumerate(_SUITE)]


def generate_suite(out_dir: str | Path, feature_ids: Sequence[str],
                   seed: int = 7) -> Path:
    """Generate the default suite plus its manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    specs = default_suite(seed=seed)
    items = []
    truth: dict[str, dict[str, bool]] = {}
    for spec in specs:
        generate_fixture(spec, out_dir)
        items.append(MediaItem(
            video_id=spec.clip_id, patient_id=spec.patient_id,
            video_path=f"{spec.clip_id}.video.svf", audio_path=f"{spec.clip_id}.audio.wav",
            fps=spec.fps, duration_s=spec.duration_s, width=spec.width, height=spec.height))
        truth[spec.clip_id] = {fid: fid in spec.planted_features for fid in feature_ids}
    manifest = Manifest(items=tuple(items), truth=truth, root=out_dir)
    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    return manifest_path
