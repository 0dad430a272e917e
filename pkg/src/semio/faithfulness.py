"""Explanation-faithfulness protocol: sample selection, 1-5 scoring, summaries.

Only correctly predicted cases are eligible for review. For a feature,
the review set contains every true positive plus an equal number of true
negatives sampled without replacement under a seed; when the negative
pool is too small the shortfall is flagged rather than padded. Reviewers
assign integer scores 1-5, where score s stands for s*20% correctness.

Scores land in an append-only JSONL store; resubmission by the same
reviewer overwrites the effective score but keeps the full audit trail.
"""

from __future__ import annotations

import json
import random
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from .detect import VideoVerdict
from .errors import SummaryError, ValidationError

SCORE_MIN, SCORE_MAX = 1, 5


@dataclass(frozen=True)
class ReviewSample:
    sample_id: str
    video_id: str
    feature_id: str
    outcome: str  # "true_positive" | "true_negative"
    justification: str
    media_ref: Mapping[str, object]  # {"video_id", "start_s", "end_s"} segment locator

    def __post_init__(self) -> None:
        if self.outcome not in ("true_positive", "true_negative"):
            raise ValidationError(f"outcome must be a correct prediction kind, got {self.outcome!r}")


@dataclass(frozen=True)
class ReviewSet:
    feature_id: str
    seed: int
    samples: tuple[ReviewSample, ...]
    tn_shortfall: bool = False
    no_positives: bool = False


@dataclass(frozen=True)
class FaithfulnessRecord:
    sample_id: str
    reviewer_id: str
    score: int
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not SCORE_MIN <= self.score <= SCORE_MAX or not isinstance(self.score, int):
            raise ValidationError(f"score must be an integer in [1, 5], got {self.score!r}")

    @property
    def correctness_fraction(self) -> float:
        """Score s stands for s*20% correctness."""
        return self.score / 5


def select_review_set(verdicts: Sequence[VideoVerdict], truth: Mapping[str, Mapping[str, bool]],
                      feature_id: str, seed: int,
                      segment_bounds: Mapping[str, tuple[float, float]] | None = None) -> ReviewSet:
    """All TPs plus an equal seeded sample of TNs for one feature.

    ``segment_bounds`` optionally maps video_id -> (start_s, end_s) of the
    supporting segment, used for the media locator; defaults to the verdict's
    first supporting segment being unknown here, so (0, 0) means full clip.
    """
    relevant = [v for v in verdicts if v.feature_id == feature_id]
    tps = [v for v in relevant if v.present and truth.get(v.video_id, {}).get(feature_id) is True]
    tns = [v for v in relevant if not v.present and truth.get(v.video_id, {}).get(feature_id) is False]
    tps.sort(key=lambda v: v.video_id)
    tns.sort(key=lambda v: v.video_id)

    if not tps:
        return ReviewSet(feature_id=feature_id, seed=seed, samples=(), no_positives=True)

    rng = random.Random(seed)
    take = min(len(tps), len(tns))
    chosen_tns = sorted(rng.sample(tns, take), key=lambda v: v.video_id)

    def make(v: VideoVerdict, outcome: str) -> ReviewSample:
        bounds = (segment_bounds or {}).get(v.video_id, (0.0, 0.0))
        return ReviewSample(
            sample_id=f"{feature_id}:{v.video_id}",
            video_id=v.video_id, feature_id=feature_id, outcome=outcome,
            justification=v.representative_justification,
            media_ref={"video_id": v.video_id, "start_s": bounds[0], "end_s": bounds[1]})

    samples = [make(v, "true_positive") for v in tps] + [make(v, "true_negative") for v in chosen_tns]
    samples.sort(key=lambda s: s.sample_id)
    return ReviewSet(feature_id=feature_id, seed=seed, samples=tuple(samples),
                     tn_shortfall=len(tns) < len(tps))


@dataclass(frozen=True)
class ScoreSummary:
    histogram: Mapping[int, int]
    median: float
    proportion_ge_3: float
    count: int


def summarize_scores(records: Sequence[FaithfulnessRecord],
                     feature_id: str | None = None,
                     samples: Mapping[str, ReviewSample] | None = None) -> ScoreSummary:
    """Histogram over 1..5, median (mean of middle two when even), share >= 3.

    With ``feature_id`` and ``samples``, restricts to records whose sample
    belongs to that feature.
    """
    scoped = list(records)
    if feature_id is not None and samples is not None:
        scoped = [r for r in scoped
                  if r.sample_id in samples and samples[r.sample_id].feature_id == feature_id]
    if not scoped:
        raise SummaryError("no records to summarize")
    values = sorted(r.score for r in scoped)
    histogram = {s: 0 for s in range(SCORE_MIN, SCORE_MAX + 1)}
    for v in values:
        histogram[v] += 1
    n = len(values)
    if n % 2 == 1:
        median = float(values[n // 2])
    else:
        median = (values[n // 2 - 1] + values[n // 2]) / 2.0
    return ScoreSummary(histogram=histogram, median=median,
                        proportion_ge_3=sum(1 for v in values if v >= 3) / n, count=n)


# -- persistence -------------------------------------------------------------

def export_review_sets(path: str | Path, review_sets: Sequence[ReviewSet]) -> None:
    """Single portable file with every sample, for offline scoring."""
    doc = {
        "kind": "review_set_export",
        "sets": [
            {
                "feature_id": rs.feature_id,
                "seed": rs.seed,
                "tn_shortfall": rs.tn_shortfall,
                "no_positives": rs.no_positives,
                "samples": [
                    {**asdict(s), "media_ref": dict(s.media_ref)} for s in rs.samples
                ],
            }
            for rs in review_sets
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def import_review_sets(path: str | Path) -> list[ReviewSet]:
    doc = json.loads(Path(path).read_text("utf-8"))
    if doc.get("kind") != "review_set_export":
        raise ValidationError(f"{path} is not a review-set export")
    sets = []
    for rs in doc["sets"]:
        samples = tuple(ReviewSample(**s) for s in rs["samples"])
        sets.append(ReviewSet(feature_id=rs["feature_id"], seed=rs["seed"],
                              samples=samples, tn_shortfall=rs["tn_shortfall"],
                              no_positives=rs["no_positives"]))
    return sets


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ScoreStore:
    """Append-only JSONL score log; latest record per (sample, reviewer) wins."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: FaithfulnessRecord) -> bool:
        """Persist one score; returns True when it overwrites a prior one."""
        existing = self.load_all()
        overwrite = any(r.sample_id == record.sample_id and r.reviewer_id == record.reviewer_id
                        for r in existing)
        rec = asdict(record)
        if not rec["timestamp"]:
            rec["timestamp"] = _now_iso()
        if overwrite:
            rec["overwrites_previous"] = True
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return overwrite

    def load_all(self) -> list[FaithfulnessRecord]:
        """Full audit trail in append order."""
        if not self.path.exists():
            return []
        out = []
        for line in self.path.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(FaithfulnessRecord(sample_id=rec["sample_id"],
                                          reviewer_id=rec["reviewer_id"],
                                          score=rec["score"], timestamp=rec.get("timestamp", "")))
        return out

    def effective_records(self) -> list[FaithfulnessRecord]:
        """Latest score per (sample, reviewer), ordered by sample then reviewer."""
        latest: dict[tuple[str, str], FaithfulnessRecord] = {}
        for rec in self.load_all():
            latest[(rec.sample_id, rec.reviewer_id)] = rec
        return [latest[k] for k in sorted(latest)]
