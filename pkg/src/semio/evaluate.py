"""Patient-stratified evaluation: folds, confusion metrics, calibration.

Conventions baked in here and relied on by the report layouts:

* precision and recall are 0.0 when their denominator is 0;
* F1 = 2*p*r/(p+r) when p+r > 0, else 0.0;
* values are rounded to 3 decimals at report time only;
* metrics are pooled across held-out folds (micro), not fold-averaged;
* folds partition *patients*, never videos, and every train/test split
  is re-checked for patient leakage rather than assumed disjoint.
"""

from __future__ import annotations

import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .detect import VideoVerdict
from .errors import CalibrationError, ComparisonError, EvaluationError, LeakageError, ParameterError

Split = tuple[frozenset, frozenset]  # (train patients, test patients)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: Mapping[str, int]

    def __post_init__(self) -> None:
        bad = {p: f for p, f in self.assignment.items() if not 0 <= f < self.k}
        if bad:
            raise EvaluationError(f"fold indices outside [0, {self.k}): {bad}")
        sizes = self.fold_sizes()
        if sizes and max(sizes) - min(sizes) > 1:
            raise EvaluationError(f"fold sizes differ by more than 1: {sizes}")

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for f in self.assignment.values():
            sizes[f] += 1
        return sizes

    def splits(self) -> list[Split]:
        out = []
        for f in range(self.k):
            test = frozenset(p for p, g in self.assignment.items() if g == f)
            train = frozenset(self.assignment) - test
            out.append((train, test))
        return out


def make_folds(patients: Sequence[str], k: int = 3, seed: int = 0) -> FoldPlan:
    """Seeded shuffle then round-robin. Sorting first makes the plan a
    function of the patient *set*, not of input order."""
    unique = sorted(set(patients))
    if len(unique) < k:
        raise ParameterError(f"need at least {k} patients, got {len(unique)}")
    rng = random.Random(seed)
    rng.shuffle(unique)
    return FoldPlan(k=k, assignment={p: i % k for i, p in enumerate(unique)})


def assert_no_leakage(splits: Sequence[Split]) -> None:
    for i, (train, test) in enumerate(splits):
        shared = train & test
        if shared:
            raise LeakageError(f"fold {i}: patients on both sides: {sorted(shared)}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


def confusion(predictions: Mapping[tuple[str, str], bool], truth: Mapping[str, Mapping[str, bool]],
              scope: Sequence[str], feature_id: str) -> ConfusionCounts:
    """2x2 counts for one feature over the scoped videos."""
    tp = fp = tn = fn = 0
    for video_id in scope:
        if (video_id, feature_id) not in predictions:
            raise EvaluationError(f"missing prediction for ({video_id}, {feature_id})")
        if video_id not in truth or feature_id not in truth[video_id]:
            raise EvaluationError(f"missing truth for ({video_id}, {feature_id})")
        pred = predictions[(video_id, feature_id)]
        actual = truth[video_id][feature_id]
        if pred and actual:
            tp += 1
        elif pred and not actual:
            fp += 1
        elif not pred and actual:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def f1_from(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy/precision/recall/F1 with the zero-denominator convention."""
    if counts.total == 0:
        raise EvaluationError("metrics over zero evaluated pairs")
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return Metrics(accuracy=(counts.tp + counts.tn) / counts.total,
                   precision=precision, recall=recall, f1=f1_from(precision, recall))


def _f1_at(scores: Sequence[float], labels: Sequence[bool], tau: float) -> float:
    tp = sum(1 for s, y in zip(scores, labels) if s >= tau and y)
    fp = sum(1 for s, y in zip(scores, labels) if s >= tau and not y)
    fn = sum(1 for s, y in zip(scores, labels) if s < tau and y)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return f1_from(p, r)


def threshold_candidates(scores: Sequence[float]) -> list[float]:
    """Midpoints between consecutive distinct scores plus below-min /
    above-max sentinels."""
    distinct = sorted(set(scores))
    cands = [distinct[0] - 1.0]
    cands += [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    cands.append(distinct[-1] + 1.0)
    return cands


def calibrate_threshold(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Threshold maximizing F1 of (score >= tau); ties -> smallest tau."""
    if len(scores) != len(labels) or not scores:
        raise CalibrationError("scores and labels must be aligned and non-empty")
    if not any(labels):
        raise CalibrationError("calibration needs at least one positive label")
    best_tau = None
    best_f1 = -1.0
    for tau in threshold_candidates(scores):  # ascending, so first win is smallest tau
        f1 = _f1_at(scores, labels, tau)
        if f1 > best_f1:
            best_f1, best_tau = f1, tau
    assert best_tau is not None
    return best_tau


@dataclass(frozen=True)
class MetricsReport:
    """Pooled metrics per (feature_id, system_id)."""

    entries: Mapping[tuple[str, str], Metrics]
    counts: Mapping[tuple[str, str], ConfusionCounts] = field(default_factory=dict)

    def features(self) -> list[str]:
        return sorted({f for f, _ in self.entries})

    def systems(self) -> list[str]:
        return sorted({s for _, s in self.entries})

    def get(self, feature_id: str, system_id: str) -> Metrics | None:
        return self.entries.get((feature_id, system_id))


def _patients_in_scope(video_patient: Mapping[str, str], scope: Sequence[str]) -> set[str]:
    missing = [v for v in scope if v not in video_patient]
    if missing:
        raise EvaluationError(f"no patient linkage for videos {missing}")
    return {video_patient[v] for v in scope}


def cross_validate(truth: Mapping[str, Mapping[str, bool]],
                   video_patient: Mapping[str, str],
                   fold_plan: FoldPlan | Sequence[Split],
                   verdicts: Sequence[VideoVerdict] | None = None,
                   score_sets: Mapping[str, Mapping[tuple[str, str], float]] | None = None,
                   feature_ids: Sequence[str] | None = None) -> MetricsReport:
    """Evaluate binary verdicts or scored detectors under patient folds.

    Scored systems are calibrated per feature on the training folds'
    videos and applied to the held-out fold; held-out predictions are
    pooled across folds before computing metrics. Binary verdicts skip
    calibration and are evaluated over all scoped videos. Every split is
    leakage-checked; a fold plan that misses a scoped patient is a hard
    failure.
    """
    splits = fold_plan.splits() if isinstance(fold_plan, FoldPlan) else list(fold_plan)
    assert_no_leakage(splits)
    scope = sorted(truth.keys())
    scope_patients = _patients_in_scope(video_patient, scope)
    covered = set().union(*[train | test for train, test in splits]) if splits else set()
    missing = scope_patients - covered
    if missing:
        raise EvaluationError(f"fold plan does not cover patients {sorted(missing)}")

    entries: dict[tuple[str, str], Metrics] = {}
    all_counts: dict[tuple[str, str], ConfusionCounts] = {}

    if verdicts is not None:
        features = feature_ids or sorted({v.feature_id for v in verdicts})
        by_system: dict[str, dict[tuple[str, str], bool]] = {}
        for v in verdicts:
            by_system.setdefault(v.system_id, {})[(v.video_id, v.feature_id)] = v.present
        for system_id, preds in sorted(by_system.items()):
            for feature_id in features:
                scoped = [vid for vid in scope if (vid, feature_id) in preds]
                if not scoped:
                    continue
                counts = confusion(preds, truth, scoped, feature_id)
                entries[(feature_id, system_id)] = metrics(counts)
                all_counts[(feature_id, system_id)] = counts

    if score_sets is not None:
        for system_id, scores in sorted(score_sets.items()):
            features = feature_ids or sorted({f for _, f in scores})
            for feature_id in features:
                pooled: dict[tuple[str, str], bool] = {}
                for train_pat, test_pat in splits:
                    train_videos = [v for v in scope if video_patient[v] in train_pat
                                    and (v, feature_id) in scores]
                    test_videos = [v for v in scope if video_patient[v] in test_pat
                                   and (v, feature_id) in scores]
                    if not test_videos:
                        continue
                    train_scores = [scores[(v, feature_id)] for v in train_videos]
                    train_labels = [truth[v][feature_id] for v in train_videos]
                    tau = calibrate_threshold(train_scores, train_labels)
                    for v in test_videos:
                        pooled[(v, feature_id)] = scores[(v, feature_id)] >= tau
                scoped = sorted({v for v, _ in pooled})
                if not scoped:
                    continue
                counts = confusion(pooled, truth, scoped, feature_id)
                entries[(feature_id, system_id)] = metrics(counts)
                all_counts[(feature_id, system_id)] = counts

    return MetricsReport(entries=entries, counts=all_counts)


@dataclass(frozen=True)
class StyleComparison:
    """Per-feature F1 deltas between prompt styles, with zero-F1 flags."""

    baseline_style: str
    deltas: Mapping[str, Mapping[str, float]]  # style -> feature -> F1(style) - F1(baseline)
    f1_by_style: Mapping[str, Mapping[str, float]]
    zero_f1: Mapping[str, tuple[str, ...]]  # style -> features where F1 == 0


def compare_prompt_styles(reports_by_style: Mapping[str, MetricsReport],
                          baseline_style: str = "expert") -> StyleComparison:
    """Tabulate F1 differences between styles evaluated on one scope.

    Every style must have been evaluated over the identical
    (feature, system) key set; rows are features (suffixed with the
    system id only when several systems are present).
    """
    if len(reports_by_style) < 2:
        raise ComparisonError("need at least two styles to compare")
    if baseline_style not in reports_by_style:
        raise ComparisonError(f"baseline style {baseline_style!r} not among reports")
    base_keys = frozenset(reports_by_style[baseline_style].entries.keys())
    for style, rep in reports_by_style.items():
        if frozenset(rep.entries.keys()) != base_keys:
            raise ComparisonError(f"style {style!r} evaluated on a different scope")
    systems = {s for _, s in base_keys}
    single = len(systems) == 1

    def row(feature_id: str, system_id: str) -> str:
        return feature_id if single else f"{feature_id}({system_id})"

    f1_by_style = {
        style: {row(f, s): m.f1 for (f, s), m in rep.entries.items()}
        for style, rep in reports_by_style.items()
    }
    base = f1_by_style[baseline_style]
    deltas = {
        style: {r: vals[r] - base[r] for r in sorted(base)}
        for style, vals in f1_by_style.items() if style != baseline_style
    }
    zero = {style: tuple(r for r in sorted(vals) if vals[r] == 0.0)
            for style, vals in f1_by_style.items()}
    return StyleComparison(baseline_style=baseline_style, deltas=deltas,
                           f1_by_style=f1_by_style, zero_f1=zero)
