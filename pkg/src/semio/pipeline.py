"""Stage orchestration over a frozen output-directory layout.

    out/
      segments/    plans.jsonl                     (stage: segment)
      enhanced/    face_tracks.jsonl, pose_tracks.jsonl,
                   <clip>.denoised.wav, transcripts.jsonl   (stage: enhance)
      detections/  results.jsonl                   (stage: detect, append-only)
      verdicts/    verdicts.jsonl                  (snapshot view of the store)
      reports/     metrics_*.txt/json, deltas      (stage: evaluate)
      review/      review_sets.json, scores.jsonl  (faithfulness)

Each stage is deterministic given (config, inputs), and later stages
consume earlier stages' files when they exist, so a full run and a
stage-by-stage run leave byte-identical artifacts under mock backends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .backends import BackendSet, StylePenalty, detect_faces, estimate_pose, make_backend
from .catalog import Catalog, load_catalog, load_default_catalog
from .config import RunConfig
from .detect import DetectOptions, DetectionResult, Precomputed, ResultsStore, run_detection, verdict_record
from .enhance import enhance_audio, transcribe
from .errors import PipelineError
from .evaluate import MetricsReport, cross_validate, make_folds
from .ingest import Manifest, load_manifest, patients_of
from .media import VideoReader, read_wav, write_wav
from .reports import render_enhancement_delta, write_report_files
from .segmenter import SegmentPlan, plan_video
from .sidecars import SidecarIndex

OUT_LAYOUT = ("segments", "enhanced", "detections", "verdicts", "reports", "review")


def ensure_layout(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    for sub in OUT_LAYOUT:
        (out / sub).mkdir(parents=True, exist_ok=True)
    return out


def load_inputs(config: RunConfig) -> tuple[Manifest, Catalog]:
    catalog = (load_catalog(config.catalog, strict=config.strict_catalog)
               if config.catalog else load_default_catalog())
    if not config.manifest:
        raise PipelineError("no manifest configured")
    manifest = load_manifest(config.manifest, required_features=catalog.feature_ids, strict=True)
    return manifest, catalog


def build_backends(config: RunConfig, manifest: Manifest,
                   penalties: tuple[StylePenalty, ...] = ()) -> BackendSet:
    index = SidecarIndex.from_manifest(manifest)
    kwargs = dict(index=index, token=config.token, timeout_s=config.timeout_s,
                  noise_p=config.mock_noise_p, seed=config.seeds.mock_noise,
                  max_inflight=config.max_inflight)
    return BackendSet(
        vlm=make_backend("vlm", config.backend_id("vlm"), base_url=config.base_url("vlm"),
                         penalties=penalties, **kwargs),
        alm=make_backend("alm", config.backend_id("alm"), base_url=config.base_url("alm"), **kwargs),
        face=make_backend("face", config.backend_id("face"), base_url=config.base_url("face"), **kwargs),
        pose=make_backend("pose", config.backend_id("pose"), base_url=config.base_url("pose"), **kwargs),
        denoise=make_backend("denoise", config.backend_id("denoise"),
                             base_url=config.base_url("denoise"), **kwargs),
        asr=make_backend("asr", config.backend_id("asr"), base_url=config.base_url("asr"), **kwargs),
    )


# -- segment stage -----------------------------------------------------------

def stage_segment(manifest: Manifest, config: RunConfig) -> Path:
    out = ensure_layout(config.out_dir) / "segments" / "plans.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        for item in sorted(manifest.items, key=lambda it: it.video_id):
            for plan in plan_video(item.video_id, item.duration_s, item.fps,
                                   config.segment_len_s, config.overlap_s, config.target_fps):
                fh.write(json.dumps({
                    "video_id": plan.video_id, "index": plan.index,
                    "start_s": plan.start_s, "end_s": plan.end_s,
                    "frame_times": list(plan.frame_times),
                    "frame_indices": list(plan.frame_indices),
                }, sort_keys=True) + "\n")
    return out


def load_plans(path: str | Path) -> dict[str, list[SegmentPlan]]:
    plans: dict[str, list[SegmentPlan]] = {}
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        plans.setdefault(rec["video_id"], []).append(SegmentPlan(
            video_id=rec["video_id"], index=rec["index"], start_s=rec["start_s"],
            end_s=rec["end_s"], frame_times=tuple(rec["frame_times"]),
            frame_indices=tuple(rec["frame_indices"])))
    for lst in plans.values():
        lst.sort(key=lambda p: p.index)
    return plans


# -- enhance stage -----------------------------------------------------------

def stage_enhance(manifest: Manifest, catalog: Catalog, config: RunConfig,
                  backends: BackendSet) -> Path:
    """Precompute the backend-expensive enhancement artifacts.

    Face boxes and skeletons for every sampled frame, denoised audio and
    transcripts for every recording that audio features will query.
    """
    out = ensure_layout(config.out_dir) / "enhanced"
    plans_path = Path(config.out_dir) / "segments" / "plans.jsonl"
    plans = load_plans(plans_path) if plans_path.exists() else {
        it.video_id: plan_video(it.video_id, it.duration_s, it.fps, config.segment_len_s,
                                config.overlap_s, config.target_fps)
        for it in manifest.items}

    need_face = any(f.enhancement == "face_crop" for f in catalog)
    need_pose = any(f.enhancement == "pose_overlay" for f in catalog)
    need_audio = any(f.enhancement == "audio_chain" for f in catalog)

    # idempotent re-run: all artifacts already present -> zero backend calls
    expected = [out / "face_tracks.jsonl", out / "pose_tracks.jsonl", out / "transcripts.jsonl"]
    if need_audio:
        expected += [out / f"{it.video_id}.denoised.wav" for it in manifest.items]
    if all(p.exists() for p in expected):
        return out

    face_lines: list[str] = []
    pose_lines: list[str] = []
    transcript_lines: list[str] = []
    for item in sorted(manifest.items, key=lambda it: it.video_id):
        indices = sorted({i for plan in plans.get(item.video_id, []) for i in plan.frame_indices})
        if need_face or need_pose:
            reader = VideoReader(manifest.resolve(item.video_path), video_id=item.video_id)
            for idx in indices:
                frame = reader.read_frame(idx)
                if need_face:
                    box = detect_faces(frame, backends.face)
                    face_lines.append(json.dumps({
                        "video_id": item.video_id, "frame_index": idx,
                        "box": None if box is None else {"x": box.x, "y": box.y,
                                                         "w": box.w, "h": box.h},
                    }, sort_keys=True))
                if need_pose:
                    sk = estimate_pose(frame, backends.pose)
                    pose_lines.append(json.dumps({
                        "video_id": item.video_id, "frame_index": idx,
                        "keypoints": [[j, x, y, c] for j, x, y, c in sk.keypoints],
                    }, sort_keys=True))
        if need_audio:
            clip = read_wav(manifest.resolve(item.audio_path), video_id=item.video_id)
            denoised = enhance_audio(clip, backends.denoise)
            write_wav(out / f"{item.video_id}.denoised.wav", denoised.samples, denoised.sample_rate)
            if config.transcript_for_audio:
                text = transcribe(denoised, backends.asr)
                transcript_lines.append(json.dumps(
                    {"video_id": item.video_id, "text": text}, sort_keys=True))
    (out / "face_tracks.jsonl").write_text("\n".join(face_lines) + ("\n" if face_lines else ""),
                                           encoding="utf-8")
    (out / "pose_tracks.jsonl").write_text("\n".join(pose_lines) + ("\n" if pose_lines else ""),
                                           encoding="utf-8")
    (out / "transcripts.jsonl").write_text("\n".join(transcript_lines) + ("\n" if transcript_lines else ""),
                                           encoding="utf-8")
    return out


# -- detect stage ------------------------------------------------------------

def store_path(config: RunConfig) -> Path:
    return Path(config.out_dir) / "detections" / "results.jsonl"


def load_precomputed(out_dir: str | Path) -> Precomputed:
    """Pick up whatever the enhance stage already produced."""
    from .enhance import BoundingBox, Skeleton

    enhanced_dir = Path(out_dir) / "enhanced"
    pre = Precomputed(denoised_dir=enhanced_dir if enhanced_dir.is_dir() else None)
    faces = enhanced_dir / "face_tracks.jsonl"
    if faces.exists():
        for line in faces.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            box = rec["box"]
            pre.face_boxes[(rec["video_id"], rec["frame_index"])] = (
                None if box is None else BoundingBox(x=box["x"], y=box["y"],
                                                     w=box["w"], h=box["h"]))
    poses = enhanced_dir / "pose_tracks.jsonl"
    if poses.exists():
        for line in poses.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            kps = tuple((int(j), float(x), float(y), float(c)) for j, x, y, c in rec["keypoints"])
            pre.skeletons[(rec["video_id"], rec["frame_index"])] = Skeleton(keypoints=kps)
    transcripts = enhanced_dir / "transcripts.jsonl"
    if transcripts.exists():
        for line in transcripts.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            pre.transcripts[rec["video_id"]] = rec["text"]
    return pre


def stage_detect(manifest: Manifest, catalog: Catalog, config: RunConfig,
                 backends: BackendSet, enhanced: bool) -> DetectionResult:
    ensure_layout(config.out_dir)
    options = DetectOptions(
        segment_len_s=config.segment_len_s, overlap_s=config.overlap_s,
        target_fps=config.target_fps, prompt_style=config.prompt_style,
        enhanced=enhanced, transcript_for_audio=config.transcript_for_audio,
        max_workers=config.max_inflight, max_attempts=config.max_attempts,
        backoff_s=config.backoff_s)
    precomputed = load_precomputed(config.out_dir) if enhanced else None
    result = run_detection(manifest, catalog, backends, ResultsStore(store_path(config)),
                           options, precomputed=precomputed)
    snapshot = Path(config.out_dir) / "verdicts" / "verdicts.jsonl"
    _, verdicts, _ = ResultsStore(store_path(config)).load()
    with open(snapshot, "w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps(verdict_record(v), sort_keys=True) + "\n")
    return result


# -- evaluate stage ----------------------------------------------------------

def stage_evaluate(manifest: Manifest, catalog: Catalog, config: RunConfig,
                   include_reference: bool = False) -> dict[str, MetricsReport]:
    store = ResultsStore(store_path(config))
    _, verdicts, _ = store.load()
    if not verdicts:
        raise PipelineError("no verdicts to evaluate; run detection first")
    fold_plan = make_folds(patients_of(manifest), k=config.folds_k, seed=config.seeds.folds)
    video_patient = {it.video_id: it.patient_id for it in manifest.items}
    reports: dict[str, MetricsReport] = {}
    for style in sorted({v.prompt_style for v in verdicts}):
        styled = [v for v in verdicts if v.prompt_style == style]
        reports[style] = cross_validate(truth=manifest.truth, video_patient=video_patient,
                                        fold_plan=fold_plan, verdicts=styled,
                                        feature_ids=catalog.feature_ids)
        write_report_files(reports[style], catalog, Path(config.out_dir) / "reports",
                           stem=f"metrics_{style}", include_reference=include_reference)
    return reports


# -- full run ----------------------------------------------------------------

@dataclass
class RunSummary:
    inference_calls: int = 0
    incomplete: set[tuple[str, str]] = field(default_factory=set)
    reports: dict[str, MetricsReport] = field(default_factory=dict)
    backends: BackendSet | None = None

    @property
    def complete(self) -> bool:
        return not self.incomplete


def run_all(config: RunConfig, include_reference: bool = False,
            penalties: tuple[StylePenalty, ...] = ()) -> RunSummary:
    """ingest -> segment -> (enhance) -> detect -> evaluate, one config."""
    manifest, catalog = load_inputs(config)
    backends = build_backends(config, manifest, penalties=penalties)
    summary = RunSummary(backends=backends)
    stage_segment(manifest, config)

    variants = [False]
    if config.compare_enhancement:
        variants = [False, True]
    elif config.enhanced:
        variants = [True]
    if any(variants):
        stage_enhance(manifest, catalog, config, backends)
    for enhanced in variants:
        result = stage_detect(manifest, catalog, config, backends, enhanced)
        summary.inference_calls += result.inference_calls
        summary.incomplete |= result.incomplete

    if not summary.incomplete:
        summary.reports = stage_evaluate(manifest, catalog, config, include_reference)
        if config.compare_enhancement:
            _write_delta_report(config, catalog, summary.reports)
    return summary


def _write_delta_report(config: RunConfig, catalog: Catalog,
                        reports: dict[str, MetricsReport]) -> None:
    report = reports.get(config.prompt_style)
    if report is None:
        return
    raw_entries = {k: m for k, m in report.entries.items() if "+" not in k[1]}
    enh_entries = {k: m for k, m in report.entries.items() if "+" in k[1]}
    if not raw_entries or not enh_entries:
        return
    text = render_enhancement_delta(MetricsReport(entries=raw_entries),
                                    MetricsReport(entries=enh_entries), catalog)
    (Path(config.out_dir) / "reports" / "enhancement_delta.txt").write_text(text, encoding="utf-8")
