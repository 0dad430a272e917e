import itertools
import random

import pytest

from semio.catalog import load_default_catalog
from semio.detect import (
    ANSWER_FORMAT_CLAUSE,
    ResultsStore,
    SegmentDetection,
    VideoVerdict,
    aggregate_any_yes,
    build_prompt,
    detection_record,
    parse_response,
    verdict_record,
)
from semio.errors import AggregationError

CATALOG = load_default_catalog()


def _detection(video="v", feature="tonic", index=0, decision="no", justification="", style="expert"):
    return SegmentDetection(video_id=video, feature_id=feature, segment_index=index,
                            decision=decision, justification=justification,
                            raw_response=f"{decision}!", prompt_style=style, system_id="mock:vlm")


# -- build_prompt ------------------------------------------------------------

def test_prompt_with_transcript_block():
    feature = CATALOG.feature("ictal_vocalization")
    bundle = build_prompt(feature, "expert", transcript="help me")
    assert "groaning, moaning, guttural sounds" in bundle.text
    assert ANSWER_FORMAT_CLAUSE in bundle.text
    assert "Secondary evidence" in bundle.text
    assert "help me" in bundle.text
    assert not bundle.fallback


def test_prompt_without_transcript_has_no_block():
    bundle = build_prompt(CATALOG.feature("blank_stare"), "expert")
    assert "Secondary evidence" not in bundle.text


def test_prompt_unknown_style_falls_back():
    feature = CATALOG.feature("arm_flexion")
    bundle = build_prompt(feature, "nonexistent_style")
    assert bundle.fallback
    assert bundle.style_used == "expert"
    assert feature.prompts["expert"] in bundle.text


def test_prompt_empty_transcript_marked():
    bundle = build_prompt(CATALOG.feature("verbal_responsiveness"), "expert", transcript="")
    assert "(empty transcript)" in bundle.text


# -- parse_response ----------------------------------------------------------

def test_parse_leading_yes_with_justification():
    decision, justification = parse_response("Yes, the patient exhibits repetitive lip-smacking.")
    assert decision == "yes"
    assert justification == "the patient exhibits repetitive lip-smacking."


def test_parse_bare_no():
    assert parse_response("No.") == ("no", "")


def test_parse_unrelated_text_unparseable():
    assert parse_response("The weather is nice.") == ("unparseable", "")


def test_parse_keyword_fallback_negation():
    decision, justification = parse_response("The patient does not exhibit oral automatisms.")
    assert decision == "no"
    assert justification == "The patient does not exhibit oral automatisms."


def test_parse_keyword_fallback_positive():
    decision, _ = parse_response("The patient exhibits rhythmic jerking of both arms. More text.")
    assert decision == "yes"


def test_parse_is_case_and_punctuation_tolerant():
    assert parse_response('"YES - clear rhythmic jerking."')[0] == "yes"
    assert parse_response("  no, nothing visible")[0] == "no"


def test_parse_format_contract_closure():
    # anything following the answer-format clause parses, never unparseable
    rng = random.Random(3)
    leads = ["Yes", "No", "yes", "NO", '"Yes"', "Yes,", "No."]
    tails = ["the figure moves.", "", "observable stiffening of both arms.",
             "nothing resembling the feature appears."]
    for _ in range(200):
        text = f"{rng.choice(leads)} {rng.choice(tails)}"
        decision, _ = parse_response(text)
        assert decision in ("yes", "no")


# -- aggregate_any_yes ---------------------------------------------------------

def test_any_yes_basic():
    verdicts = aggregate_any_yes([
        _detection(index=0, decision="no"),
        _detection(index=1, decision="no"),
        _detection(index=2, decision="yes", justification="seen here"),
    ])
    assert verdicts.present
    assert verdicts.supporting_segments == (2,)
    assert verdicts.representative_justification == "seen here"


def test_any_yes_unparseable_counts_as_no():
    verdict = aggregate_any_yes([
        _detection(index=0, decision="no", justification="clean"),
        _detection(index=1, decision="unparseable"),
        _detection(index=2, decision="no"),
    ])
    assert not verdict.present
    assert verdict.supporting_segments == ()
    assert verdict.representative_justification == "clean"


def test_any_yes_all_yes():
    verdict = aggregate_any_yes([_detection(index=i, decision="yes") for i in range(4)])
    assert verdict.present
    assert verdict.supporting_segments == (0, 1, 2, 3)


def test_any_yes_empty_is_error():
    with pytest.raises(AggregationError):
        aggregate_any_yes([])


def test_any_yes_mixed_pairs_rejected():
    with pytest.raises(AggregationError, match="mixed"):
        aggregate_any_yes([_detection(feature="tonic"), _detection(feature="clonic")])


def test_any_yes_equals_or_fold_exhaustive_small():
    for n in range(1, 7):
        for bits in itertools.product([False, True], repeat=n):
            detections = [_detection(index=i, decision="yes" if b else "no")
                          for i, b in enumerate(bits)]
            verdict = aggregate_any_yes(detections)
            assert verdict.present == any(bits)
            assert verdict.supporting_segments == tuple(i for i, b in enumerate(bits) if b)


def test_verdict_invariant():
    with pytest.raises(AggregationError):
        VideoVerdict(video_id="v", feature_id="f", present=True, supporting_segments=(),
                     representative_justification="", prompt_style="expert", system_id="s")


# -- results store -------------------------------------------------------------

def test_store_round_trip(tmp_path):
    store = ResultsStore(tmp_path / "results.jsonl")
    detections = [_detection(index=i, decision="yes" if i % 2 else "no") for i in range(3)]
    verdict = aggregate_any_yes(detections)
    store.append([detection_record(d) for d in detections])
    store.append([verdict_record(verdict)])
    loaded_d, loaded_v, errors = store.load()
    assert loaded_d == sorted(detections, key=lambda d: d.segment_index)
    assert loaded_v == [verdict]
    assert errors == []


def test_store_orders_by_segment_at_read(tmp_path):
    store = ResultsStore(tmp_path / "results.jsonl")
    detections = [_detection(index=i) for i in (2, 0, 1)]
    store.append([detection_record(d) for d in detections])
    loaded, _, _ = store.load()
    assert [d.segment_index for d in loaded] == [0, 1, 2]
