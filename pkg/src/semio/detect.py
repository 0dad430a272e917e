"""Prompt dispatch, decision parsing, and any-yes aggregation.

For every (video, feature) pair the engine builds the feature's prompt,
routes each planned segment through the feature's enhancement, queries
the vision backend (audio features query the audio backend once over the
full recording), parses the leading Yes/No plus justification, and folds
segment decisions into a per-video verdict: present iff at least one
segment said yes.

All segment detections and verdicts land in an append-only JSONL results
store; re-runs skip keys that already completed, so a finished run costs
zero further backend calls.
"""

from __future__ import annotations

import json
import re
import threading
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .backends import AudioRequest, BackendSet, VisionRequest, alm_infer, detect_faces, estimate_pose, vlm_infer
from .catalog import Catalog, FeatureSpec
from .enhance import crop_face, enhance_audio, overlay_skeleton, smooth_boxes, transcribe
from .errors import AggregationError, EnhancementError, SemioError
from .ingest import Manifest
from .media import Frame, VideoReader, read_wav
from .segmenter import SegmentPlan, plan_video

DECISION_YES = "yes"
DECISION_NO = "no"
DECISION_UNPARSEABLE = "unparseable"

ANSWER_FORMAT_CLAUSE = (
    'Answer with "Yes" or "No" as the first word, followed by one sentence of '
    "justification describing the observable evidence."
)

TRANSCRIPT_HEADER = (
    "Secondary evidence (automatic transcript of the audio; treat the audio "
    "itself as the primary input):"
)

#: enhancement kind -> system-id prefix used in reports ("crop+<backend>", ...)
ENHANCED_PREFIX = {"face_crop": "crop", "pose_overlay": "pose", "audio_chain": "chain"}


@dataclass(frozen=True)
class PromptBundle:
    text: str
    style_requested: str
    style_used: str

    @property
    def fallback(self) -> bool:
        return self.style_used != self.style_requested


@dataclass(frozen=True)
class SegmentDetection:
    video_id: str
    feature_id: str
    segment_index: int
    decision: str
    justification: str
    raw_response: str
    prompt_style: str
    system_id: str


@dataclass(frozen=True)
class VideoVerdict:
    video_id: str
    feature_id: str
    present: bool
    supporting_segments: tuple[int, ...]
    representative_justification: str
    prompt_style: str
    system_id: str

    def __post_init__(self) -> None:
        if self.present != bool(self.supporting_segments):
            raise AggregationError("present=true iff supporting_segments non-empty")


def build_prompt(feature: FeatureSpec, style: str,
                 transcript: str | None = None) -> PromptBundle:
    """Catalog prompt + fixed answer-format clause + optional transcript block.

    Styles the feature does not define fall back to ``expert``; the
    returned bundle flags the fallback.
    """
    style_used = style if style in feature.prompts else "expert"
    parts = [feature.prompts[style_used], "", ANSWER_FORMAT_CLAUSE]
    if transcript is not None:
        parts += ["", TRANSCRIPT_HEADER, transcript if transcript else "(empty transcript)"]
    return PromptBundle(text="\n".join(parts), style_requested=style, style_used=style_used)


_NEGATIVE_PATTERNS = (
    "does not exhibit", "does not show", "does not display", "does not contain",
    "doesn't exhibit", "doesn't show", "no evidence of", "is not present", "is absent",
)
_POSITIVE_PATTERNS = ("exhibits", "shows", "displays", "contains", "is present")


def parse_response(text: str) -> tuple[str, str]:
    """(decision, justification) from free-form backend text.

    Decision comes from the first alphabetic token when it is yes/no;
    otherwise a keyword scan of the first sentence; otherwise
    ``unparseable`` (a value, never an error).
    """
    match = re.search(r"[A-Za-z]+", text)
    if match:
        token = match.group(0).lower()
        if token in ("yes", "no"):
            justification = text[match.end():].lstrip(" \t\r\n,.;:!-").strip()
            return (DECISION_YES if token == "yes" else DECISION_NO), justification
    first_sentence = re.split(r"(?<=[.!?])\s", text.strip(), maxsplit=1)[0].lower()
    if any(p in first_sentence for p in _NEGATIVE_PATTERNS):
        return DECISION_NO, text.strip()
    if any(p in first_sentence for p in _POSITIVE_PATTERNS):
        return DECISION_YES, text.strip()
    return DECISION_UNPARSEABLE, ""


def aggregate_any_yes(detections: Sequence[SegmentDetection]) -> VideoVerdict:
    """Fold segment decisions: present iff any segment decided yes.

    Unparseable counts as no. The representative justification is the
    first supporting segment's text, or the first explicit no when the
    feature is absent.
    """
    if not detections:
        raise AggregationError("cannot aggregate an empty detection set")
    keys = {(d.video_id, d.feature_id) for d in detections}
    if len(keys) != 1:
        raise AggregationError(f"mixed (video, feature) pairs in aggregation: {sorted(keys)}")
    ordered = sorted(detections, key=lambda d: d.segment_index)
    supporting = tuple(d.segment_index for d in ordered if d.decision == DECISION_YES)
    if supporting:
        representative = next(d.justification for d in ordered if d.decision == DECISION_YES)
    else:
        explicit_no = [d for d in ordered if d.decision == DECISION_NO]
        representative = explicit_no[0].justification if explicit_no else ""
    first = ordered[0]
    return VideoVerdict(video_id=first.video_id, feature_id=first.feature_id,
                        present=bool(supporting), supporting_segments=supporting,
                        representative_justification=representative,
                        prompt_style=first.prompt_style, system_id=first.system_id)


# -- results store -----------------------------------------------------------

class ResultsStore:
    """Append-only JSONL store of detections, verdicts, and errors."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, records: Sequence[dict]) -> None:
        if not records:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def load(self) -> tuple[list[SegmentDetection], list[VideoVerdict], list[dict]]:
        detections: list[SegmentDetection] = []
        verdicts: list[VideoVerdict] = []
        errors: list[dict] = []
        if not self.path.exists():
            return detections, verdicts, errors
        for line in self.path.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("kind")
            if kind == "segment_detection":
                detections.append(SegmentDetection(
                    video_id=rec["video_id"], feature_id=rec["feature_id"],
                    segment_index=rec["segment_index"], decision=rec["decision"],
                    justification=rec["justification"], raw_response=rec["raw_response"],
                    prompt_style=rec["prompt_style"], system_id=rec["system_id"]))
            elif kind == "video_verdict":
                verdicts.append(VideoVerdict(
                    video_id=rec["video_id"], feature_id=rec["feature_id"],
                    present=rec["present"],
                    supporting_segments=tuple(rec["supporting_segments"]),
                    representative_justification=rec["representative_justification"],
                    prompt_style=rec["prompt_style"], system_id=rec["system_id"]))
            elif kind == "error":
                errors.append(rec)
        detections.sort(key=lambda d: (d.video_id, d.feature_id, d.system_id, d.prompt_style, d.segment_index))
        verdicts.sort(key=lambda v: (v.video_id, v.feature_id, v.system_id, v.prompt_style))
        return detections, verdicts, errors


def detection_record(d: SegmentDetection) -> dict:
    return {"kind": "segment_detection", **d.__dict__}


def verdict_record(v: VideoVerdict) -> dict:
    rec = {"kind": "video_verdict", **v.__dict__}
    rec["supporting_segments"] = list(v.supporting_segments)
    return rec


# -- detection engine --------------------------------------------------------

@dataclass
class DetectOptions:
    segment_len_s: float = 30.0
    overlap_s: float = 5.0
    target_fps: float = 2.0
    prompt_style: str = "expert"
    enhanced: bool = False
    transcript_for_audio: bool = True
    max_workers: int = 4
    max_attempts: int = 2
    backoff_s: float = 0.5
    smoothing_alpha: float = 0.5
    pad_fraction: float = 0.25
    confidence_threshold: float = 0.3


@dataclass
class Precomputed:
    """Enhancement artifacts from a prior stage; consulted before backends.

    ``face_boxes`` keys that are present but map to None mean "looked,
    no face" — only missing keys fall through to the face backend.
    """

    face_boxes: dict[tuple[str, int], object] = field(default_factory=dict)
    skeletons: dict[tuple[str, int], object] = field(default_factory=dict)
    transcripts: dict[str, str] = field(default_factory=dict)
    denoised_dir: Path | None = None


@dataclass
class DetectionResult:
    verdicts: list[VideoVerdict]
    detections: list[SegmentDetection]
    incomplete: set[tuple[str, str]] = field(default_factory=set)
    inference_calls: int = 0
    skipped: int = 0

    @property
    def complete(self) -> bool:
        return not self.incomplete


class _MediaCache:
    """Per-run cache of decoded frames, enhancements, and audio clips."""

    def __init__(self, manifest: Manifest, backends: BackendSet, options: DetectOptions,
                 precomputed: Precomputed | None = None):
        self.manifest = manifest
        self.backends = backends
        self.options = options
        self.pre = precomputed or Precomputed()
        self._lock = threading.Lock()
        self._readers: dict[str, VideoReader] = {}
        self._frames: dict[tuple[str, int], list[Frame]] = {}
        self._enhanced: dict[tuple[str, int, str], list[Frame]] = {}
        self._audio: dict[tuple[str, bool], tuple] = {}
        self._inflight: dict[object, threading.Event] = {}

    def _compute_once(self, cache: dict, key, compute):
        """Compute-at-most-once per key across worker threads."""
        while True:
            with self._lock:
                if key in cache:
                    return cache[key]
                event = self._inflight.get(key)
                if event is None:
                    event = threading.Event()
                    self._inflight[key] = event
                    break
            event.wait()
        try:
            value = compute()
            with self._lock:
                cache[key] = value
            return value
        finally:
            with self._lock:
                del self._inflight[key]
            event.set()

    def _face_box(self, frame: Frame):
        key = (frame.video_id, frame.frame_index)
        if key in self.pre.face_boxes:
            return self.pre.face_boxes[key]
        return detect_faces(frame, self.backends.face)

    def _skeleton(self, frame: Frame):
        key = (frame.video_id, frame.frame_index)
        if key in self.pre.skeletons:
            return self.pre.skeletons[key]
        return estimate_pose(frame, self.backends.pose)

    def _reader(self, video_id: str) -> VideoReader:
        with self._lock:
            if video_id not in self._readers:
                item = self.manifest.item(video_id)
                self._readers[video_id] = VideoReader(self.manifest.resolve(item.video_path),
                                                      video_id=video_id)
            return self._readers[video_id]

    def frames(self, plan: SegmentPlan) -> list[Frame]:
        reader = self._reader(plan.video_id)
        return self._compute_once(self._frames, (plan.video_id, plan.index),
                                  lambda: reader.read_frames(plan.frame_indices))

    def enhanced_frames(self, plan: SegmentPlan, kind: str) -> list[Frame]:
        return self._compute_once(self._enhanced, (plan.video_id, plan.index, kind),
                                  lambda: self._enhance(plan, kind))

    def _enhance(self, plan: SegmentPlan, kind: str) -> list[Frame]:
        frames = self.frames(plan)
        if kind == "face_crop":
            detections = [self._face_box(f) for f in frames]
            try:
                boxes = smooth_boxes(detections, alpha=self.options.smoothing_alpha,
                                     frame_size=(frames[0].width, frames[0].height))
                return [crop_face(f, b, self.options.pad_fraction) for f, b in zip(frames, boxes)]
            except EnhancementError:
                return list(frames)  # no face anywhere: fall back to full frames
        if kind == "pose_overlay":
            skeletons = [self._skeleton(f) for f in frames]
            return [overlay_skeleton(f, sk, self.options.confidence_threshold)
                    for f, sk in zip(frames, skeletons)]
        return list(frames)

    def audio(self, video_id: str, enhanced: bool):
        """(clip, transcript_or_None) for the full recording."""
        return self._compute_once(self._audio, (video_id, enhanced),
                                  lambda: self._load_audio(video_id, enhanced))

    def _load_audio(self, video_id: str, enhanced: bool):
        item = self.manifest.item(video_id)
        clip = read_wav(self.manifest.resolve(item.audio_path), video_id=video_id)
        transcript = None
        if enhanced:
            denoised_path = (self.pre.denoised_dir / f"{video_id}.denoised.wav"
                             if self.pre.denoised_dir else None)
            if denoised_path is not None and denoised_path.exists():
                clip = read_wav(denoised_path, video_id=video_id)
            else:
                clip = enhance_audio(clip, self.backends.denoise)
            if self.options.transcript_for_audio:
                if video_id in self.pre.transcripts:
                    transcript = self.pre.transcripts[video_id]
                else:
                    transcript = transcribe(clip, self.backends.asr)
        return clip, transcript


def _system_id(feature: FeatureSpec, backends: BackendSet, enhanced: bool) -> str:
    base = backends.alm if feature.category == "audio" else backends.vlm
    base_id = getattr(base, "backend_id", "backend")
    if not enhanced:
        return base_id
    return f"{ENHANCED_PREFIX.get(feature.enhancement, 'enh')}+{base_id}"


def run_detection(manifest: Manifest, catalog: Catalog, backends: BackendSet,
                  store: ResultsStore, options: DetectOptions | None = None,
                  precomputed: Precomputed | None = None) -> DetectionResult:
    """Detect every catalog feature in every manifest video.

    Visual features run per segment through the vision backend; audio
    features run once over the full recording through the audio backend.
    Already-stored (video, feature, segment, style, system) keys are
    skipped, so re-running over a complete store performs no calls.
    """
    options = options or DetectOptions()
    existing_dets, existing_verdicts, _ = store.load()
    det_keys = {(d.video_id, d.feature_id, d.segment_index, d.prompt_style, d.system_id)
                for d in existing_dets}
    verdict_keys = {(v.video_id, v.feature_id, v.prompt_style, v.system_id)
                    for v in existing_verdicts}

    cache = _MediaCache(manifest, backends, options, precomputed)
    result = DetectionResult(verdicts=list(existing_verdicts), detections=list(existing_dets))
    new_detections: list[SegmentDetection] = []
    new_verdicts: list[VideoVerdict] = []
    error_records: list[dict] = []
    calls_lock = threading.Lock()

    def infer_visual(feature: FeatureSpec, plan: SegmentPlan, system_id: str) -> SegmentDetection:
        frames = (cache.enhanced_frames(plan, feature.enhancement)
                  if options.enhanced else cache.frames(plan))
        bundle = build_prompt(feature, options.prompt_style)
        request = VisionRequest(
            frames=tuple(frames), prompt=bundle.text,
            meta={"video_id": plan.video_id, "feature_id": feature.feature_id,
                  "segment_index": plan.index, "start_s": plan.start_s, "end_s": plan.end_s,
                  "style": bundle.style_used, "category": feature.category})
        backend = backends.vlm
        with calls_lock:
            result.inference_calls += 1
        with backend.semaphore:
            response = vlm_infer(request, backend, options.max_attempts, options.backoff_s)
        decision, justification = parse_response(response.text)
        return SegmentDetection(video_id=plan.video_id, feature_id=feature.feature_id,
                                segment_index=plan.index, decision=decision,
                                justification=justification, raw_response=response.text,
                                prompt_style=options.prompt_style, system_id=system_id)

    def infer_audio(feature: FeatureSpec, video_id: str, duration_s: float,
                    system_id: str) -> SegmentDetection:
        clip, transcript = cache.audio(video_id, options.enhanced)
        bundle = build_prompt(feature, options.prompt_style, transcript=transcript)
        request = AudioRequest(
            clip=clip, prompt=bundle.text, transcript=transcript,
            meta={"video_id": video_id, "feature_id": feature.feature_id,
                  "segment_index": 0, "start_s": 0.0, "end_s": duration_s,
                  "style": bundle.style_used, "category": feature.category})
        backend = backends.alm
        with calls_lock:
            result.inference_calls += 1
        with backend.semaphore:
            response = alm_infer(request, backend, options.max_attempts, options.backoff_s)
        decision, justification = parse_response(response.text)
        return SegmentDetection(video_id=video_id, feature_id=feature.feature_id,
                                segment_index=0, decision=decision,
                                justification=justification, raw_response=response.text,
                                prompt_style=options.prompt_style, system_id=system_id)

    # Build the work list: one job per (video, feature, segment-or-recording).
    jobs: list[tuple[tuple[str, str], object]] = []
    plans_by_video: dict[str, list[SegmentPlan]] = {}
    for item in sorted(manifest.items, key=lambda it: it.video_id):
        plans_by_video[item.video_id] = plan_video(
            item.video_id, item.duration_s, item.fps,
            options.segment_len_s, options.overlap_s, options.target_fps)
        for feature in catalog:
            system_id = _system_id(feature, backends, options.enhanced)
            pair = (item.video_id, feature.feature_id)
            if (item.video_id, feature.feature_id, options.prompt_style, system_id) in verdict_keys:
                result.skipped += 1
                continue
            if feature.category == "audio":
                if (item.video_id, feature.feature_id, 0, options.prompt_style, system_id) in det_keys:
                    continue
                jobs.append((pair, ("audio", feature, item.video_id, item.duration_s, system_id)))
            else:
                for plan in plans_by_video[item.video_id]:
                    if (item.video_id, feature.feature_id, plan.index,
                            options.prompt_style, system_id) in det_keys:
                        continue
                    jobs.append((pair, ("visual", feature, plan, system_id)))

    def run_job(job) -> SegmentDetection:
        if job[0] == "audio":
            _, feature, video_id, duration_s, system_id = job
            return infer_audio(feature, video_id, duration_s, system_id)
        _, feature, plan, system_id = job
        return infer_visual(feature, plan, system_id)

    failed_pairs: set[tuple[str, str]] = set()
    if jobs:
        with ThreadPoolExecutor(max_workers=max(1, options.max_workers)) as pool:
            futures = [(pair, job, pool.submit(run_job, job)) for pair, job in jobs]
            for pair, job, future in futures:
                try:
                    new_detections.append(future.result())
                except SemioError as exc:
                    failed_pairs.add(pair)
                    seg = job[2].index if job[0] == "visual" else 0
                    error_records.append({"kind": "error", "video_id": pair[0],
                                          "feature_id": pair[1], "segment_index": seg,
                                          "prompt_style": options.prompt_style,
                                          "message": str(exc)})

    # Aggregate every (video, feature) that now has a complete detection set.
    all_detections = result.detections + new_detections
    by_pair: dict[tuple[str, str, str, str], list[SegmentDetection]] = {}
    for det in all_detections:
        by_pair.setdefault((det.video_id, det.feature_id, det.prompt_style, det.system_id), []).append(det)
    for item in sorted(manifest.items, key=lambda it: it.video_id):
        for feature in catalog:
            system_id = _system_id(feature, backends, options.enhanced)
            vkey = (item.video_id, feature.feature_id, options.prompt_style, system_id)
            if vkey in verdict_keys:
                continue
            if (item.video_id, feature.feature_id) in failed_pairs:
                result.incomplete.add((item.video_id, feature.feature_id))
                continue
            dets = by_pair.get(vkey, [])
            expected = 1 if feature.category == "audio" else len(plans_by_video[item.video_id])
            if len(dets) != expected:
                result.incomplete.add((item.video_id, feature.feature_id))
                continue
            new_verdicts.append(aggregate_any_yes(dets))

    new_detections.sort(key=lambda d: (d.video_id, d.feature_id, d.system_id, d.prompt_style, d.segment_index))
    new_verdicts.sort(key=lambda v: (v.video_id, v.feature_id, v.system_id, v.prompt_style))
    error_records.sort(key=lambda r: (r["video_id"], r["feature_id"], r["segment_index"]))
    store.append([detection_record(d) for d in new_detections])
    store.append([verdict_record(v) for v in new_verdicts])
    store.append(error_records)

    result.detections = all_detections
    result.verdicts = result.verdicts + new_verdicts
    return result
