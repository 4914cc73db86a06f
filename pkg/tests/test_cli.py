import json

import pytest

from collagelink.cli import main
from fixture_dataset import EXPECTED_REPORT


def test_ingest(fixture_manifest, capsys):
    assert main(["ingest", str(fixture_manifest)]) == 0
    out = capsys.readouterr().out
    assert "10 posts" in out and "twitter: 5" in out


def test_ingest_bad_manifest(tmp_path, capsys):
    m = tmp_path / "m.jsonl"
    m.write_text('{"post_id": "a"}\n')
    assert main(["ingest", str(m)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_run_report_and_export(fixture_manifest, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--manifest", str(fixture_manifest), "--output-dir", str(out)]) == 0
    text = capsys.readouterr().out
    assert "13 nodes, 13 edges, 5 components" in text
    assert main(["report", str(out)]) == 0
    assert "faces: 16" in capsys.readouterr().out
    edges = (out / "edges.csv").read_bytes()
    dest = tmp_path / "again.csv"
    assert main(["graph-export", "--output-dir", str(out), "--out", str(dest)]) == 0
    assert dest.read_bytes() == edges


def test_config_file_and_flag_precedence(fixture_manifest, tmp_path):
    cfg = tmp_path / "cfg.json"
    # a huge hash threshold collapses most images; the flag restores the default
    cfg.write_text(json.dumps({"hamming-threshold": 64, "manifest": str(fixture_manifest)}))
    assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "a")]) == 0
    kept = json.loads((tmp_path / "a" / "report.json").read_text())["images_kept_after_dedup"]
    assert kept == 1
    assert main(["run", "--config", str(cfg), "--output-dir", str(tmp_path / "b"), "--hamming-threshold", "1.2"]) == 0
    kept = json.loads((tmp_path / "b" / "report.json").read_text())["images_kept_after_dedup"]
    assert kept == EXPECTED_REPORT["images_kept_after_dedup"]


@pytest.mark.parametrize("cfg", ['{"no_such_key": 1}', "[1, 2]", "{bad json"])
def test_bad_config_exits_2(cfg, fixture_manifest, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(cfg)
    assert main(["run", "--config", str(path), "--manifest", str(fixture_manifest),
                 "--output-dir", str(tmp_path / "o")]) == 2


def test_missing_required_options_exit_2(tmp_path):
    assert main(["run", "--output-dir", str(tmp_path)]) == 2
    assert main(["report", str(tmp_path / "nothing.json")]) == 2
    assert main(["graph-export", "--output-dir", str(tmp_path)]) == 2


def test_unknown_backend_is_fatal(fixture_manifest, tmp_path):
    assert main(["run", "--manifest", str(fixture_manifest), "--output-dir", str(tmp_path),
                 "--backend", "nope"]) == 1


def test_disabling_both_link_channels_exits_2(fixture_manifest, tmp_path):
    assert main(["run", "--manifest", str(fixture_manifest), "--output-dir", str(tmp_path),
                 "--no-username-link", "--no-face-link"]) == 2


def test_skip_stage_flag(fixture_manifest, tmp_path):
    assert main(["run", "--manifest", str(fixture_manifest), "--output-dir", str(tmp_path),
                 "--skip-stage", "dedup"]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["images_kept_after_dedup"] == 9
