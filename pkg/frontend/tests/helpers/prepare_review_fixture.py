"""Build a small detection run + review export for the UI tests.

Usage: python3 prepare_review_fixture.py <work_dir>
Prints JSON {"manifest": ..., "out": ...} on stdout.
"""

import json
import sys
from pathlib import Path

from semio.catalog import load_default_catalog
from semio.cli import main
from semio.fixtures import FixtureSpec, generate_fixture
from semio.ingest import Manifest, MediaItem, save_manifest

CLIPS = (
    ("ui01", "p1", ("tonic", "blank_stare", "ictal_vocalization")),
    ("ui02", "p2", ("clonic", "oral_automatisms", "arm_flexion")),
    ("ui03", "p3", ("pelvic_thrusting", "closed_eyes", "verbal_responsiveness")),
)


def build(work_dir: Path) -> dict:
    catalog = load_default_catalog()
    media = work_dir / "media"
    out = work_dir / "out"
    items = []
    truth = {}
    for i, (clip_id, patient_id, planted) in enumerate(CLIPS):
        spec = FixtureSpec(clip_id=clip_id, patient_id=patient_id, duration_s=16.0,
                           fps=4.0, planted_features=planted, seed=100 + i,
                           utterance="yes i can hear you" if "verbal_responsiveness" in planted else None)
        generate_fixture(spec, media)
        items.append(MediaItem(video_id=clip_id, patient_id=patient_id,
                               video_path=f"{clip_id}.video.svf",
                               audio_path=f"{clip_id}.audio.wav",
                               fps=4.0, duration_s=16.0, width=160, height=120))
        truth[clip_id] = {fid: fid in planted for fid in catalog.feature_ids}
    manifest_path = media / "manifest.jsonl"
    save_manifest(Manifest(items=tuple(items), truth=truth, root=media), manifest_path)

    base = ["--manifest", str(manifest_path), "--out", str(out)]
    assert main(["segment", *base]) == 0
    assert main(["detect", *base]) == 0
    assert main(["review-export", *base, "--system", "mock:vlm", "--seed", "17"]) == 0
    export = json.loads((out / "review" / "review_sets.json").read_text())
    total = sum(len(rs["samples"]) for rs in export["sets"])
    assert total >= 10, f"need at least 10 review samples, got {total}"
    return {"manifest": str(manifest_path), "out": str(out), "samples": total}


if __name__ == "__main__":
    work = Path(sys.argv[1])
    work.mkdir(parents=True, exist_ok=True)
    print(json.dumps(build(work)))
