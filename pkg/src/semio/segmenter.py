"""Sliding-window segmentation and per-segment frame sampling.

Recordings are split into fixed-length windows (default 30 s) that
overlap their predecessor (default 5 s); the final window is truncated
at the recording end, and a tail window fully contained in its
predecessor is dropped so no window is pure re-inference. Inside a
window, frames are sampled at a uniform target rate (default 2 fps)
and mapped to source-frame indices with round-half-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


def round_half_up(x: float) -> int:
    """round() uses banker's rounding; index mapping needs plain half-up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SegmentPlan:
    video_id: str
    index: int
    start_s: float
    end_s: float
    frame_times: tuple[float, ...]
    frame_indices: tuple[int, ...]


def plan_segments(duration_s: float, segment_len_s: float = 30.0,
                  overlap_s: float = 5.0) -> list[tuple[float, float]]:
    """Plan [start, end) windows covering [0, duration_s)."""
    if duration_s <= 0:
        raise ParameterError(f"duration_s must be positive, got {duration_s}")
    if segment_len_s <= 0:
        raise ParameterError(f"segment_len_s must be positive, got {segment_len_s}")
    if not 0 <= overlap_s < segment_len_s:
        raise ParameterError(f"need 0 <= overlap_s < segment_len_s, got overlap {overlap_s} / length {segment_len_s}")
    stride = segment_len_s - overlap_s
    windows: list[tuple[float, float]] = []
    k = 0
    while k * stride < duration_s:
        start = k * stride
        end = min(start + segment_len_s, duration_s)
        if windows and windows[-1][0] <= start and end <= windows[-1][1]:
            k += 1
            continue
        windows.append((start, end))
        k += 1
    return windows


def sample_frames(start_s: float, end_s: float, source_fps: float,
                  target_fps: float = 2.0, max_frame_index: int | None = None,
                  ) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Uniform frame times start, start+1/target, ... (< end) and source indices.

    Indices are round-half-up of time * source_fps, clamped to
    ``max_frame_index`` when the caller knows the source length.
    """
    if end_s <= start_s:
        raise ParameterError(f"end_s must exceed start_s, got [{start_s}, {end_s})")
    if source_fps <= 0 or target_fps <= 0:
        raise ParameterError("frame rates must be positive")
    if target_fps > source_fps:
        raise ParameterError(f"target_fps {target_fps} exceeds source_fps {source_fps}")
    times: list[float] = []
    i = 0
    while True:
        t = start_s + i / target_fps
        if t >= end_s:
            break
        times.append(t)
        i += 1
    indices = [round_half_up(t * source_fps) for t in times]
    if max_frame_index is not None:
        indices = [min(idx, max_frame_index) for idx in indices]
    return tuple(times), tuple(indices)


def plan_video(video_id: str, duration_s: float, source_fps: float,
               segment_len_s: float = 30.0, overlap_s: float = 5.0,
               target_fps: float = 2.0) -> list[SegmentPlan]:
    """Full segmentation plan for one recording."""
    last_index = round_half_up(duration_s * source_fps) - 1
    plans = []
    for idx, (start, end) in enumerate(plan_segments(duration_s, segment_len_s, overlap_s)):
        times, indices = sample_frames(start, end, source_fps, target_fps, max_frame_index=last_index)
        plans.append(SegmentPlan(video_id=video_id, index=idx, start_s=start, end_s=end,
                                 frame_times=times, frame_indices=indices))
    return plans
