import hashlib
import json
from pathlib import Path

import pytest

from semio.cli import main
from semio.config import RunConfig, Seeds, apply_overrides, load_config
from semio.errors import ConfigError
from semio.pipeline import (
    OUT_LAYOUT,
    build_backends,
    load_inputs,
    run_all,
    stage_detect,
    stage_enhance,
    stage_evaluate,
    stage_segment,
    store_path,
)


def _subset_manifest(suite, tmp_path, n=6):
    """First n clips of the session suite, reusing its media files."""
    media_dir, manifest_path = suite
    lines = manifest_path.read_text("utf-8").splitlines()[:n]
    out = tmp_path / "subset.jsonl"
    records = []
    for line in lines:
        rec = json.loads(line)
        rec["video_path"] = str(media_dir / rec["video_path"])
        rec["audio_path"] = str(media_dir / rec["audio_path"])
        records.append(json.dumps(rec, sort_keys=True))
    out.write_text("".join(f"{line}\n" for line in records))
    return out


def _tree_digest(root: Path) -> dict[str, str]:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_full_run_equals_stage_by_stage_bytes(suite, tmp_path):
    manifest_path = _subset_manifest(suite, tmp_path)
    out_a = tmp_path / "full"
    out_b = tmp_path / "staged"

    config_a = RunConfig(manifest=str(manifest_path), out_dir=str(out_a), compare_enhancement=True)
    summary = run_all(config_a)
    assert summary.complete

    config_b = RunConfig(manifest=str(manifest_path), out_dir=str(out_b), compare_enhancement=True)
    manifest, catalog = load_inputs(config_b)
    backends = build_backends(config_b, manifest)
    stage_segment(manifest, config_b)
    stage_enhance(manifest, catalog, config_b, backends)
    stage_detect(manifest, catalog, config_b, backends, enhanced=False)
    stage_detect(manifest, catalog, config_b, backends, enhanced=True)
    reports = stage_evaluate(manifest, catalog, config_b)
    from semio.pipeline import _write_delta_report
    _write_delta_report(config_b, catalog, reports)

    digest_a = _tree_digest(out_a)
    digest_b = _tree_digest(out_b)
    assert digest_a == digest_b


def test_layout_directories_created(noise0_run):
    config, _ = noise0_run
    for sub in OUT_LAYOUT:
        assert (Path(config.out_dir) / sub).is_dir()


def test_compare_enhancement_produces_delta_report(noise0_run):
    config, _ = noise0_run
    delta = Path(config.out_dir) / "reports" / "enhancement_delta.txt"
    assert delta.exists()
    text = delta.read_text("utf-8")
    assert "enhancement effect" in text
    assert "improved on" in text


def test_report_structure_three_tables_twenty_features(noise0_run, catalog):
    config, _ = noise0_run
    text = (Path(config.out_dir) / "reports" / "metrics_expert.txt").read_text("utf-8")
    for category in ("facial", "limb_body", "audio"):
        assert f"== {category} features ==" in text
    assert text.count("-- ") == 20  # one block per catalog feature
    for feature in catalog:
        assert f"({feature.feature_id})" in text


def test_rerun_performs_zero_backend_calls(noise0_run):
    config, _ = noise0_run
    again = run_all(config)
    assert again.inference_calls == 0
    assert again.backends.total_calls() == 0
    assert again.complete


def test_store_is_pure_function_of_config(suite, tmp_path):
    manifest_path = _subset_manifest(suite, tmp_path, n=6)
    digests = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        config = RunConfig(manifest=str(manifest_path), out_dir=str(out))
        run_all(config)
        digests.append(hashlib.sha256(store_path(config).read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_unreachable_backend_marks_incomplete(suite, tmp_path):
    manifest_path = _subset_manifest(suite, tmp_path, n=6)
    config = RunConfig(manifest=str(manifest_path), out_dir=str(tmp_path / "broken"),
                       backends={"vlm": "http", "alm": "mock:alm", "face": "mock:face",
                                 "pose": "mock:pose", "denoise": "mock:denoise", "asr": "mock:asr"},
                       base_urls={"vlm": "http://127.0.0.1:9"},
                       timeout_s=0.2, max_attempts=1, backoff_s=0.0)
    summary = run_all(config)
    assert not summary.complete
    # every visual (video, feature) pair failed; audio pairs went through mocks
    assert all(feature not in ("ictal_vocalization", "verbal_responsiveness")
               for _, feature in summary.incomplete)
    assert len(summary.incomplete) == 6 * 18


# -- config --------------------------------------------------------------------

def test_config_defaults_and_overrides():
    config = RunConfig()
    assert config.seeds == Seeds(folds=13, tn_sampling=17, mock_noise=29)
    updated = apply_overrides(config, manifest="m.jsonl", folds_seed=99,
                              backend_overrides=["vlm=http"])
    assert updated.manifest == "m.jsonl"
    assert updated.seeds.folds == 99
    assert updated.backends["vlm"] == "http"
    assert updated.backends["alm"] == "mock:alm"


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(prompt_style="casual")
    with pytest.raises(ConfigError):
        RunConfig(mock_noise_p=1.5)
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), backend_overrides=["vlm"])
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), backend_overrides=["ghost=mock:ghost"])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"manifest": "m.jsonl", "out_dir": "o",
                                "seeds": {"folds": 3}, "mock_noise_p": 0.2}))
    config = load_config(path)
    assert config.manifest == "m.jsonl"
    assert config.seeds.folds == 3
    assert config.seeds.tn_sampling == 17  # unspecified seeds keep defaults
    assert config.mock_noise_p == 0.2


# -- CLI ------------------------------------------------------------------------

def test_cli_missing_manifest_is_usage_error(tmp_path, capsys):
    code = main(["run", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "manifest" in capsys.readouterr().err


def test_cli_nonexistent_manifest_is_usage_error(tmp_path, capsys):
    code = main(["run", "--manifest", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_unknown_style_rejected_by_argparse(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--manifest", "m", "--style", "casual"])
    assert excinfo.value.code == 2


def test_cli_stagewise_and_report(suite, tmp_path, capsys):
    manifest_path = _subset_manifest(suite, tmp_path, n=6)
    out = str(tmp_path / "cli_out")
    base = ["--manifest", str(manifest_path), "--out", out]
    assert main(["segment", *base]) == 0
    assert main(["detect", *base]) == 0
    assert main(["evaluate", *base]) == 0
    capsys.readouterr()
    assert main(["report", *base, "--reference"]) == 0
    text = capsys.readouterr().out
    assert "facial features" in text
    # AF3 ictal-vocalization reference column: 0.765 / 0.850 / 0.708 / 0.773
    vocalization = text.split("(ictal_vocalization) --")[1].split("\n--")[0]
    for value in ("0.765", "0.850", "0.708", "0.773"):
        assert value in vocalization


def test_cli_run_exit_one_when_backend_down(suite, tmp_path, capsys):
    manifest_path = _subset_manifest(suite, tmp_path, n=6)
    config_path = tmp_path / "broken.json"
    config_path.write_text(json.dumps({
        "backends": {"vlm": "http"}, "base_urls": {"vlm": "http://127.0.0.1:9"},
        "timeout_s": 0.2, "max_attempts": 1, "backoff_s": 0.0}))
    code = main(["run", "--config", str(config_path), "--manifest", str(manifest_path),
                 "--out", str(tmp_path / "broken_out")])
    assert code == 1
    assert "incomplete" in capsys.readouterr().err


def test_cli_report_before_detect_fails(tmp_path, suite, capsys):
    manifest_path = _subset_manifest(suite, tmp_path, n=6)
    code = main(["report", "--manifest", str(manifest_path),
                 "--out", str(tmp_path / "empty_out")])
    assert code == 1
    assert "no verdicts" in capsys.readouterr().err


def test_cli_fixtures_command(tmp_path, capsys):
    code = main(["fixtures", "--out", str(tmp_path / "media"), "--seed", "7"])
    assert code == 0
    assert (tmp_path / "media" / "manifest.jsonl").exists()
