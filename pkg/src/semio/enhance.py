"""Feature-targeted signal enhancement.

Three routes, keyed by feature category:

* ``face_crop``    – per-frame face boxes, EMA-smoothed over time, then a
  padded crop so facial cues fill the frame.
* ``pose_overlay`` – an 18-joint partial skeleton drawn on top of each
  frame as an explicit motion abstraction.
* ``audio_chain``  – speech enhancement through a pluggable denoiser,
  optionally followed by a transcript used as secondary evidence.

The face detector, pose estimator, denoiser, and recognizer are backend
handles (see :mod:`semio.backends`); nothing model-shaped lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import draw
from .errors import EnhancementError
from .media import AudioClip, Frame

# 18-joint layout used for every skeleton in the pipeline. Joint ids are
# indices into this tuple; the edge list below is the frozen drawing set.
JOINT_NAMES = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)

SKELETON_EDGES = (
    (1, 2), (1, 5),          # neck -> shoulders
    (2, 3), (3, 4),          # right arm
    (5, 6), (6, 7),          # left arm
    (1, 8), (8, 9), (9, 10),     # right leg chain
    (1, 11), (11, 12), (12, 13),  # left leg chain
    (1, 0),                  # neck -> nose
    (0, 14), (14, 16),       # right eye/ear
    (0, 15), (15, 17),       # left eye/ear
)

# one color per limb edge, same order as SKELETON_EDGES; frozen for determinism
EDGE_COLORS: tuple[draw.Color, ...] = (
    (255, 85, 0), (255, 170, 0),
    (255, 255, 0), (170, 255, 0),
    (85, 255, 0), (0, 255, 0),
    (0, 255, 85), (0, 255, 170), (0, 255, 255),
    (0, 170, 255), (0, 85, 255), (0, 0, 255),
    (255, 0, 0),
    (85, 0, 255), (170, 0, 255),
    (255, 0, 255), (255, 0, 170),
)

_COLOR_BY_EDGE = dict(zip(SKELETON_EDGES, EDGE_COLORS))

JOINT_MARKER_RADIUS = 2.0
JOINT_MARKER_COLOR: draw.Color = (255, 255, 255)
DEFAULT_LINE_THICKNESS = 3.0


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left anchored, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise EnhancementError(f"degenerate box {self.w}x{self.h}")


@dataclass(frozen=True)
class Skeleton:
    """Keypoints (joint_id, x, y, confidence) plus the edges to draw.

    Edges naming joints absent from ``keypoints`` are dropped at
    construction, so a partial (or empty) skeleton built with the default
    edge list stays valid: every retained edge references existing joints.
    """

    keypoints: tuple[tuple[int, float, float, float], ...]
    edges: tuple[tuple[int, int], ...] = SKELETON_EDGES

    def __post_init__(self) -> None:
        ids = [k[0] for k in self.keypoints]
        if len(set(ids)) != len(ids):
            raise EnhancementError("duplicate joint ids in skeleton")
        for _, _, _, conf in self.keypoints:
            if not 0.0 <= conf <= 1.0:
                raise EnhancementError(f"confidence {conf} outside [0, 1]")
        known = set(ids)
        kept = tuple((a, b) for a, b in self.edges if a in known and b in known)
        object.__setattr__(self, "edges", kept)

    def joint(self, joint_id: int) -> tuple[float, float, float] | None:
        for jid, x, y, conf in self.keypoints:
            if jid == joint_id:
                return (x, y, conf)
        return None


EMPTY_SKELETON = Skeleton(keypoints=())


def smooth_boxes(detections: list[BoundingBox | None], alpha: float = 0.5,
                 frame_size: tuple[int, int] | None = None) -> list[BoundingBox]:
    """Per-coordinate exponential moving average over a detection track.

    b_t = alpha*d_t + (1-alpha)*b_{t-1}. Missing detections hold the last
    smoothed box; leading gaps backfill from the first smoothed value.
    ``frame_size`` (w, h), when given, clamps outputs into the frame.
    """
    if not 0.0 < alpha <= 1.0:
        raise EnhancementError(f"alpha must be in (0, 1], got {alpha}")
    if all(d is None for d in detections):
        raise EnhancementError("no face detections in the entire sequence")

    out: list[np.ndarray | None] = []
    state: np.ndarray | None = None
    for det in detections:
        if det is not None:
            vec = np.array([det.x, det.y, det.w, det.h], dtype=np.float64)
            state = vec if state is None else alpha * vec + (1.0 - alpha) * state
        out.append(None if state is None else state.copy())
    first = next(s for s in out if s is not None)
    boxes = []
    for s in out:
        x, y, w, h = (first if s is None else s)
        if frame_size is not None:
            fw, fh = frame_size
            x = float(np.clip(x, 0.0, fw - 1.0))
            y = float(np.clip(y, 0.0, fh - 1.0))
            w = float(np.clip(w, 1.0, fw - x))
            h = float(np.clip(h, 1.0, fh - y))
        boxes.append(BoundingBox(x=float(x), y=float(y), w=float(w), h=float(h)))
    return boxes


def crop_region(frame_w: int, frame_h: int, box: BoundingBox,
                pad_fraction: float = 0.25) -> tuple[int, int, int, int]:
    """Integer (x0, y0, x1, y1) of the padded, clamped crop window."""
    x0 = box.x - pad_fraction * box.w
    y0 = box.y - pad_fraction * box.h
    x1 = box.x + box.w + pad_fraction * box.w
    y1 = box.y + box.h + pad_fraction * box.h
    xi0 = max(0, int(np.floor(x0)))
    yi0 = max(0, int(np.floor(y0)))
    xi1 = min(frame_w, int(np.ceil(x1)))
    yi1 = min(frame_h, int(np.ceil(y1)))
    if xi1 <= xi0 or yi1 <= yi0:
        raise EnhancementError(f"crop of box {box} lies outside the {frame_w}x{frame_h} frame")
    return xi0, yi0, xi1, yi1


def crop_face(frame: Frame, box: BoundingBox, pad_fraction: float = 0.25) -> Frame:
    """Crop the padded face region; raises if the region degenerates."""
    x0, y0, x1, y1 = crop_region(frame.width, frame.height, box, pad_fraction)
    return Frame(data=np.ascontiguousarray(frame.data[y0:y1, x0:x1]),
                 video_id=frame.video_id, frame_index=frame.frame_index)


def overlay_skeleton(frame: Frame, skeleton: Skeleton,
                     confidence_threshold: float = 0.3,
                     thickness: float = DEFAULT_LINE_THICKNESS) -> Frame:
    """Draw edges whose endpoints both clear the confidence threshold.

    Returns a new frame; the input is never mutated. Drawing nothing
    (empty or low-confidence skeleton) returns a byte-identical copy.
    """
    canvas = frame.data.copy()
    drawn_joints: set[int] = set()
    for edge_idx, (a, b) in enumerate(skeleton.edges):
        ja, jb = skeleton.joint(a), skeleton.joint(b)
        if ja is None or jb is None:
            continue
        if ja[2] < confidence_threshold or jb[2] < confidence_threshold:
            continue
        color = _COLOR_BY_EDGE.get((a, b), EDGE_COLORS[edge_idx % len(EDGE_COLORS)])
        draw.draw_line(canvas, (ja[0], ja[1]), (jb[0], jb[1]), color, thickness)
        drawn_joints.update((a, b))
    for jid in sorted(drawn_joints):
        jx, jy, _ = skeleton.joint(jid)  # type: ignore[misc]
        draw.draw_disc(canvas, (jx, jy), JOINT_MARKER_RADIUS, JOINT_MARKER_COLOR)
    return Frame(data=canvas, video_id=frame.video_id, frame_index=frame.frame_index)


def enhance_audio(clip: AudioClip, backend) -> AudioClip:
    """Run the configured speech-enhancement backend over a clip.

    Post-conditions enforced here, not trusted from the backend: same
    sample rate, duration within ±10% of the input.
    """
    try:
        out = backend.enhance(clip)
    except EnhancementError:
        raise
    except Exception as exc:
        raise EnhancementError(f"speech enhancement backend failed: {exc}") from exc
    if out.sample_rate != clip.sample_rate:
        raise EnhancementError(
            f"backend changed sample rate {clip.sample_rate} -> {out.sample_rate}")
    if len(clip.samples) and abs(out.duration_s - clip.duration_s) > 0.1 * clip.duration_s:
        raise EnhancementError(
            f"backend changed duration {clip.duration_s:.3f}s -> {out.duration_s:.3f}s (>10%)")
    return out


def transcribe(clip: AudioClip, backend) -> str:
    """Run the configured speech-recognition backend over a clip."""
    try:
        return backend.transcribe(clip)
    except EnhancementError:
        raise
    except Exception as exc:
        raise EnhancementError(f"speech recognition backend failed: {exc}") from exc
