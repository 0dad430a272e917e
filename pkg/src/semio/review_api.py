"""HTTP service for expert faithfulness review.

Endpoints (all JSON unless noted):

* ``GET  /api/review/next?reviewer=<id>`` — next unscored sample for that
  reviewer in stable sample_id order; 204 when everything is scored.
* ``POST /api/review/score`` — body ``{sample_id, reviewer_id, score}``;
  idempotent per (sample, reviewer): resubmission overwrites and the
  response carries ``overwrite: true``. Unknown sample -> 404; score
  outside 1..5 -> 422.
* ``GET  /api/review/summary?feature=<id>`` — histogram over 1..5, median,
  proportion >= 3 (zeroed histogram when nothing is scored yet).
* ``GET  /api/review/media/<sample_id>`` — clip metadata for the player.
* ``GET  /api/review/frame/<sample_id>?t=<seconds>`` — one frame as PNG
  (the browser cannot decode the pipeline's video container directly).

Review is blind: payloads never include the ground-truth label or the
model's yes/no outcome, only the justification text and the clip.
"""

from __future__ import annotations

import io
import os
import threading

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import SummaryError
from .faithfulness import (
    SCORE_MAX,
    SCORE_MIN,
    FaithfulnessRecord,
    ReviewSample,
    ScoreStore,
    summarize_scores,
)
from .ingest import Manifest
from .media import VideoReader

REVIEW_TOKEN_ENV = "SEMIO_REVIEW_TOKEN"


class ProgressModel(BaseModel):
    scored: int
    total: int


class NextSampleModel(BaseModel):
    sample_id: str
    feature_id: str
    feature_name: str
    justification: str
    clip_url: str
    media_url: str
    progress: ProgressModel


class ScoreSubmission(BaseModel):
    sample_id: str
    reviewer_id: str
    score: int = Field(ge=SCORE_MIN, le=SCORE_MAX)


class ScoreAck(BaseModel):
    status: str = "ok"
    overwrite: bool = False


class SummaryModel(BaseModel):
    feature_id: str | None = None
    histogram: dict[int, int]
    median: float | None = None
    proportion_ge_3: float | None = None
    count: int


class MediaInfoModel(BaseModel):
    video_id: str
    duration_s: float
    start_s: float
    end_s: float
    frame_interval_s: float


class ReviewService:
    """State shared by the endpoints: samples, score store, media access."""

    def __init__(self, samples: dict[str, ReviewSample], store: ScoreStore,
                 manifest: Manifest | None = None,
                 display_names: dict[str, str] | None = None,
                 frame_interval_s: float = 0.5):
        self.samples = dict(sorted(samples.items()))
        self.store = store
        self.manifest = manifest
        self.display_names = display_names or {}
        self.frame_interval_s = frame_interval_s
        self._write_lock = threading.Lock()
        self._readers: dict[str, VideoReader] = {}

    def next_unscored(self, reviewer_id: str) -> ReviewSample | None:
        scored = {r.sample_id for r in self.store.effective_records()
                  if r.reviewer_id == reviewer_id}
        for sample_id, sample in self.samples.items():
            if sample_id not in scored:
                return sample
        return None

    def progress(self, reviewer_id: str) -> tuple[int, int]:
        scored = {r.sample_id for r in self.store.effective_records()
                  if r.reviewer_id == reviewer_id and r.sample_id in self.samples}
        return len(scored), len(self.samples)

    def submit(self, record: FaithfulnessRecord) -> bool:
        with self._write_lock:
            return self.store.append(record)

    def reader(self, video_id: str) -> VideoReader:
        if self.manifest is None:
            raise HTTPException(status_code=404, detail="no media configured")
        if video_id not in self._readers:
            item = self.manifest.item(video_id)
            self._readers[video_id] = VideoReader(self.manifest.resolve(item.video_path),
                                                  video_id=video_id)
        return self._readers[video_id]


def create_app(service: ReviewService, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="semiology review service")
    token = os.environ.get(REVIEW_TOKEN_ENV, "")

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if token and request.url.path.startswith("/api/"):
            supplied = request.headers.get("x-review-token", "")
            if supplied != token:
                return Response(status_code=401, content="missing or bad review token")
        return await call_next(request)

    @app.get("/api/review/next", response_model=NextSampleModel, responses={204: {}})
    def next_sample(reviewer: str = Query(min_length=1)):
        sample = service.next_unscored(reviewer)
        if sample is None:
            return Response(status_code=204)
        scored, total = service.progress(reviewer)
        return NextSampleModel(
            sample_id=sample.sample_id,
            feature_id=sample.feature_id,
            feature_name=service.display_names.get(sample.feature_id, sample.feature_id),
            justification=sample.justification,
            clip_url=f"/api/review/frame/{sample.sample_id}",
            media_url=f"/api/review/media/{sample.sample_id}",
            progress=ProgressModel(scored=scored, total=total),
        )

    @app.post("/api/review/score", response_model=ScoreAck)
    def submit_score(submission: ScoreSubmission):
        if submission.sample_id not in service.samples:
            raise HTTPException(status_code=404, detail=f"unknown sample {submission.sample_id}")
        overwrite = service.submit(FaithfulnessRecord(
            sample_id=submission.sample_id, reviewer_id=submission.reviewer_id,
            score=submission.score))
        return ScoreAck(overwrite=overwrite)

    @app.get("/api/review/summary", response_model=SummaryModel)
    def summary(feature: str | None = None):
        records = service.store.effective_records()
        if feature is not None:
            records = [r for r in records
                       if r.sample_id in service.samples
                       and service.samples[r.sample_id].feature_id == feature]
        else:
            records = [r for r in records if r.sample_id in service.samples]
        try:
            s = summarize_scores(records)
            return SummaryModel(feature_id=feature, histogram=dict(s.histogram),
                                median=s.median, proportion_ge_3=s.proportion_ge_3,
                                count=s.count)
        except SummaryError:
            return SummaryModel(feature_id=feature,
                                histogram={i: 0 for i in range(SCORE_MIN, SCORE_MAX + 1)},
                                median=None, proportion_ge_3=None, count=0)

    @app.get("/api/review/media/{sample_id}", response_model=MediaInfoModel)
    def media_info(sample_id: str):
        sample = service.samples.get(sample_id)
        if sample is None:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")
        reader = service.reader(sample.video_id)
        start = float(sample.media_ref.get("start_s", 0.0))
        end = float(sample.media_ref.get("end_s", 0.0))
        if end <= start:
            start, end = 0.0, reader.duration_s
        return MediaInfoModel(video_id=sample.video_id, duration_s=reader.duration_s,
                              start_s=start, end_s=end,
                              frame_interval_s=service.frame_interval_s)

    @app.get("/api/review/frame/{sample_id}")
    def frame(sample_id: str, t: float = 0.0):
        from PIL import Image

        sample = service.samples.get(sample_id)
        if sample is None:
            raise HTTPException(status_code=404, detail=f"unknown sample {sample_id}")
        reader = service.reader(sample.video_id)
        index = max(0, min(reader.frame_count - 1, int(round(t * reader.fps))))
        img = Image.fromarray(reader.read_frame(index).data)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
