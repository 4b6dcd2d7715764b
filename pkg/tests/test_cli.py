"""End-to-end command tests on the bundled fixture corpus.

Most tests drive cli.main() in process for speed; the entry point itself
is exercised once through a real subprocess.
"""

import json
import subprocess
import sys

import pytest

from veritrace import cli

MH370_TEXT = ("This image is NOT MH370, this is an image from the incident of "
              "a plane crashed in Sicily on 6Ogos2005 #PrayForMH370")


def write_config(path, fixtures_dir, out_dir, **overrides):
    """Isolated TOML: fixture inputs, throwaway outputs, absolute paths."""
    demo = fixtures_dir / "demo40"
    values = {
        "seed": 7,
        "engine": "fixture",
        "mode": "tweet_plus_image",
        "corpus": demo / "corpus.tsv",
        "evidence": out_dir / "evidence.jsonl",
        "scores": demo / "scores.tsv",
        "output_dir": out_dir,
        "kind": "logreg",
    }
    values.update(overrides)
    path.write_text(
        f'seed = {values["seed"]}\n'
        f'engine = "{values["engine"]}"\n'
        f'mode = "{values["mode"]}"\n\n'
        "[paths]\n"
        f'corpus = "{values["corpus"]}"\n'
        f'evidence = "{values["evidence"]}"\n'
        f'scores = "{values["scores"]}"\n'
        f'output_dir = "{values["output_dir"]}"\n\n'
        "[similarity]\n"
        'scorer = "external_file"\n\n'
        "[model]\n"
        f'kind = "{values["kind"]}"\n',
        encoding="utf-8",
    )
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, fixtures_dir):
    """Config with evidence imported, features extracted, logreg trained."""
    out = tmp_path_factory.mktemp("pipeline")
    config = write_config(out / "veritrace.toml", fixtures_dir, out)
    demo = fixtures_dir / "demo40"
    assert cli.main(["evidence", "import", "--config", config,
                     "--input", str(demo / "evidence.jsonl")]) == 0
    assert cli.main(["featurize", "--config", config]) == 0
    assert cli.main(["train", "--config", config]) == 0
    return {"config": config, "out": out, "demo": demo}


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------


def test_ingest_prints_event_table(pipeline, capsys):
    assert cli.main(["ingest", "--config", pipeline["config"]]) == 0
    out = capsys.readouterr().out
    assert "planted-signal" in out
    assert "40 image posts" in out
    assert "1 events" in out


def test_evidence_import_populates_store(pipeline):
    store_path = pipeline["out"] / "evidence.jsonl"
    assert store_path.exists()
    assert len(store_path.read_text(encoding="utf-8").splitlines()) == 40


def test_evidence_fetch_replays_canned_responses(tmp_path, fixtures_dir, capsys):
    out = tmp_path / "out"
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, out)
    demo = fixtures_dir / "demo40"
    rc = cli.main(["evidence", "fetch", "--config", config,
                   "--image-map", str(demo / "image_map.tsv"),
                   "--fixtures-dir", str(demo / "replay")])
    assert rc == 0
    assert "40 images fetched via fixture" in capsys.readouterr().out
    fetched = sorted(json.loads(l)["image_id"] for l in
                     (out / "evidence.jsonl").read_text().splitlines())
    canonical = sorted(json.loads(l)["image_id"] for l in
                       (demo / "evidence.jsonl").read_text().splitlines())
    assert fetched == canonical


def test_featurize_writes_csv_and_snapshot(pipeline):
    csv_path = pipeline["out"] / "features.csv"
    assert csv_path.exists()
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "post_id,uns_query,uns_titles,db_query,db_titles,s,label"
    assert len(lines) == 41
    snapshot = json.loads((pipeline["out"] / "featurize_config.json").read_text())
    assert snapshot["command"] == "featurize"
    assert snapshot["config"]["seed"] == 7


def test_train_writes_model(pipeline):
    model = json.loads((pipeline["out"] / "model_logreg.json").read_text())
    assert model["kind"] == "logreg" and model["seed"] == 7


def test_eval_reports_metrics(pipeline, capsys):
    assert cli.main(["eval", "--config", pipeline["config"]]) == 0
    out = capsys.readouterr().out
    assert "fake" in out and "weighted" in out
    payload = json.loads((pipeline["out"] / "metrics_logreg.json").read_text())
    assert payload["counts"]["total"] == 8  # 20% of 40
    assert payload["metadata"]["model"] == "logreg"


def test_verify_explains_decision(pipeline, tmp_path, fixtures_dir, capsys):
    mh = fixtures_dir / "mh370"
    out = tmp_path / "out"
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, out,
                          corpus=mh / "corpus.tsv", evidence=mh / "evidence.jsonl",
                          scores=mh / "scores.tsv")
    rc = cli.main(["verify", "--config", config,
                   "--model-file", str(pipeline["out"] / "model_logreg.json"),
                   "--text", MH370_TEXT, "--image-id", "mh370-img-01"])
    assert rc == 0
    out_text = capsys.readouterr().out
    assert "decision: fake" in out_text
    assert "uns=1 db=0" in out_text
    assert "s=1.030 context_mismatch" in out_text
    assert "s=2.125" in out_text
    assert "both_fake" in out_text


def test_verify_abstain_message_for_unknown_image(pipeline, capsys):
    rc = cli.main(["verify", "--config", pipeline["config"],
                   "--text", "some text", "--image-id", "no-such-image"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "no evidence titles stored" in out


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


def test_missing_seed_is_bad_input(tmp_path, fixtures_dir):
    config = tmp_path / "cfg.toml"
    config.write_text('engine = "fixture"\n', encoding="utf-8")
    assert cli.main(["ingest", "--config", str(config)]) == 1


def test_unknown_config_key_is_bad_input(tmp_path):
    config = tmp_path / "cfg.toml"
    config.write_text("seed = 1\nbogus_key = 2\n", encoding="utf-8")
    assert cli.main(["ingest", "--config", str(config)]) == 1


def test_unknown_model_kind_is_bad_input(pipeline):
    assert cli.main(["train", "--config", pipeline["config"],
                     "--model", "perceptron"]) == 1


def test_verify_without_text_is_bad_input(pipeline):
    assert cli.main(["verify", "--config", pipeline["config"],
                     "--image-id", "x"]) == 1


def test_bad_subcommand_is_bad_input():
    assert cli.main(["frobnicate", "--seed", "1"]) == 1


def test_eval_without_model_is_missing_artifact(tmp_path, fixtures_dir):
    out = tmp_path / "out"
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, out)
    demo = fixtures_dir / "demo40"
    assert cli.main(["evidence", "import", "--config", config,
                     "--input", str(demo / "evidence.jsonl")]) == 0
    assert cli.main(["featurize", "--config", config]) == 0
    assert cli.main(["eval", "--config", config]) == 2


def test_featurize_without_evidence_is_missing_artifact(tmp_path, fixtures_dir):
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, tmp_path / "out")
    assert cli.main(["featurize", "--config", config]) == 2


def test_train_without_features_is_missing_artifact(tmp_path, fixtures_dir):
    out = tmp_path / "out"
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, out)
    demo = fixtures_dir / "demo40"
    assert cli.main(["evidence", "import", "--config", config,
                     "--input", str(demo / "evidence.jsonl")]) == 0
    assert cli.main(["train", "--config", config]) == 2


# ---------------------------------------------------------------------------
# Flags and determinism
# ---------------------------------------------------------------------------


def test_seed_flag_overrides_config(tmp_path, fixtures_dir):
    out = tmp_path / "out"
    config = write_config(tmp_path / "cfg.toml", fixtures_dir, out)
    demo = fixtures_dir / "demo40"
    assert cli.main(["evidence", "import", "--config", config,
                     "--input", str(demo / "evidence.jsonl")]) == 0
    assert cli.main(["featurize", "--config", config, "--seed", "9"]) == 0
    snapshot = json.loads((out / "featurize_config.json").read_text())
    assert snapshot["config"]["seed"] == 9


def test_train_eval_twice_is_byte_identical(tmp_path, fixtures_dir):
    demo = fixtures_dir / "demo40"
    artifacts = []
    for run in ("a", "b"):
        out = tmp_path / run
        config = write_config(tmp_path / f"cfg_{run}.toml", fixtures_dir, out)
        assert cli.main(["evidence", "import", "--config", config,
                         "--input", str(demo / "evidence.jsonl")]) == 0
        assert cli.main(["featurize", "--config", config]) == 0
        assert cli.main(["train", "--config", config]) == 0
        assert cli.main(["eval", "--config", config]) == 0
        artifacts.append((
            (out / "model_logreg.json").read_bytes(),
            (out / "metrics_logreg.json").read_bytes(),
            (out / "features.csv").read_bytes(),
        ))
    assert artifacts[0] == artifacts[1]


def test_entry_point_subprocess(repo_root):
    proc = subprocess.run(
        [sys.executable, "-m", "veritrace.cli", "--version"],
        capture_output=True, text=True, cwd=str(repo_root),
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("veritrace ")

    proc = subprocess.run(
        [sys.executable, "-m", "veritrace.cli", "ingest"],
        capture_output=True, text=True, cwd=str(repo_root),
    )
    assert proc.returncode == 1  # no seed anywhere
    assert "error:" in proc.stderr
