"""Command-line interface tests driven through click's CliRunner."""
import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

import pinview.cli as cli_module
from pinview.cli import main
from pinview.gaze import EYE_FEATURE_NAMES
from pinview.service import Settings
from pinview.service.store import Store


@pytest.fixture()
def runner():
    return CliRunner()


def write_images(directory, names, size=48):
    import cv2

    rng = np.random.default_rng(7)
    directory.mkdir(parents=True, exist_ok=True)
    for name in names:
        img = rng.integers(0, 255, size=(size, size, 3), dtype=np.uint8)
        assert cv2.imwrite(str(directory / f"{name}.png"), img)


def write_training_csv(path, n=30, seed=0):
    rng = np.random.default_rng(seed)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(EYE_FEATURE_NAMES) + ["label"])
        for k in range(n):
            label = k % 2
            row = rng.normal(loc=2.0 * label, size=19)
            writer.writerow([f"{v:.6f}" for v in row] + [label])


# ------------------------------------------------------------------- ingest


def test_ingest_builds_a_stored_corpus(runner, tmp_path):
    src = tmp_path / "pics"
    write_images(src, ["b2", "a1", "c3"])
    (src / "labels.json").write_text(json.dumps({"a1": ["boats"]}))
    data_dir = tmp_path / "store"

    result = runner.invoke(main, ["ingest", str(src),
                                  "--data-dir", str(data_dir),
                                  "--name", "demo"])
    assert result.exit_code == 0, result.output
    assert "ingested 3 images (0 skipped)" in result.output

    corpus = Store(data_dir).load_corpus("demo")
    assert corpus.ids == ["a1", "b2", "c3"]
    assert corpus.labels_of("a1") == ("boats",)
    assert corpus.record("a1").source.endswith("a1.png")


def test_ingest_reports_skipped_files(runner, tmp_path):
    src = tmp_path / "pics"
    write_images(src, ["ok"])
    (src / "broken.png").write_text("not an image at all")
    with pytest.warns(UserWarning, match="skipped"):
        result = runner.invoke(main, ["ingest", str(src),
                                      "--data-dir", str(tmp_path / "s")])
    assert result.exit_code == 0, result.output
    assert "ingested 1 images (1 skipped)" in result.output
    assert "unreadable" in result.stderr


def test_ingest_attaches_feature_tables(runner, tmp_path):
    src = tmp_path / "pics"
    write_images(src, ["x1"])
    table = tmp_path / "extra.tsv"
    values = ",".join(str(v) for v in range(12))
    table.write_text(f"x1\tdct_grid\t{values}\n")
    result = runner.invoke(main, ["ingest", str(src),
                                  "--data-dir", str(tmp_path / "s"),
                                  "--features", str(table)])
    assert result.exit_code == 0, result.output
    assert "attached 1 feature rows" in result.output
    corpus = Store(tmp_path / "s").load_corpus("pics")
    assert np.array_equal(corpus.feature_vector("x1", "dct_grid"),
                          np.arange(12.0))


def test_ingest_bad_feature_table_fails_cleanly(runner, tmp_path):
    src = tmp_path / "pics"
    write_images(src, ["x1"])
    table = tmp_path / "mangled.tsv"
    table.write_text("only-two\tfields\n")
    result = runner.invoke(main, ["ingest", str(src),
                                  "--data-dir", str(tmp_path / "s"),
                                  "--features", str(table)])
    assert result.exit_code == 1
    assert "expected 3 tab-separated fields" in result.stderr


# ---------------------------------------------------------- train-relevance


def test_train_relevance_saves_a_predictor(runner, tmp_path):
    csv_path = tmp_path / "train.csv"
    write_training_csv(csv_path)
    data_dir = tmp_path / "store"
    result = runner.invoke(main, ["train-relevance", str(csv_path),
                                  "--data-dir", str(data_dir),
                                  "--corpus", "demo",
                                  "--alpha", "2.0",
                                  "--default-unviewed", "0.1"])
    assert result.exit_code == 0, result.output
    assert "trained on 30 rows" in result.output
    predictor = Store(data_dir).load_predictor("demo")
    assert predictor is not None
    assert predictor.alpha == 2.0
    assert predictor.default_unviewed == 0.1


def test_train_relevance_rejects_single_class_table(runner, tmp_path):
    csv_path = tmp_path / "bad.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(EYE_FEATURE_NAMES) + ["label"])
        for _ in range(10):
            writer.writerow([0.1] * 19 + [1])
    result = runner.invoke(main, ["train-relevance", str(csv_path),
                                  "--data-dir", str(tmp_path / "s"),
                                  "--corpus", "demo"])
    assert result.exit_code == 1
    assert "class" in result.stderr


# --------------------------------------------------------------- simulate


def test_simulate_writes_result_json(runner, tmp_path):
    out = tmp_path / "result.json"
    result = runner.invoke(main, [
        "simulate", "--modality", "random", "--sessions", "1",
        "--rounds", "2", "--seed", "4", "--category", "cat00",
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert f"wrote {out}" in result.output
    assert "macro MAP:" in result.stderr
    payload = json.loads(out.read_text())
    assert payload["modality"] == "random"
    assert set(payload["per_category"]) == {"cat00"}
    assert 0.0 <= payload["map"] <= 1.0


def test_simulate_runs_against_a_stored_corpus(runner, tmp_path):
    data_dir = tmp_path / "store"
    made = runner.invoke(main, ["make-synthetic", "--data-dir", str(data_dir),
                                "--name", "little", "--images", "60",
                                "--seed", "3"])
    assert made.exit_code == 0, made.output
    result = runner.invoke(main, [
        "simulate", "--data-dir", str(data_dir), "--corpus", "little",
        "--modality", "full", "--sessions", "1", "--rounds", "2",
        "--seed", "4", "--category", "cat01",
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output[:result.output.rindex("}") + 1])
    assert payload["modality"] == "full"
    assert set(payload["per_category"]) == {"cat01"}


# ----------------------------------------------------------- make-synthetic


def test_make_synthetic_stores_corpus_and_predictor(runner, tmp_path):
    data_dir = tmp_path / "store"
    result = runner.invoke(main, ["make-synthetic",
                                  "--data-dir", str(data_dir),
                                  "--name", "gen", "--images", "60",
                                  "--seed", "5", "--render-assets"])
    assert result.exit_code == 0, result.output
    assert "wrote 60 images (10 categories)" in result.output
    store = Store(data_dir)
    corpus = store.load_corpus("gen")
    assert len(corpus) == 60
    assert store.load_predictor("gen") is not None
    pngs = list((store.corpus_dir("gen") / "assets").glob("*.png"))
    assert len(pngs) == 60
    # Sources must resolve against the corpus directory (the asset
    # endpoint's convention), not against whatever CWD ran the command.
    for image_id in corpus.ids:
        source = corpus.record(image_id).source
        assert source == f"assets/{image_id}.png"
        assert (store.corpus_dir("gen") / source).is_file()


# -------------------------------------------------------------------- serve


def test_serve_resolves_settings_before_launch(runner, tmp_path, monkeypatch):
    captured = {}

    def fake_serve(settings, host="127.0.0.1"):
        captured["settings"] = settings
        captured["host"] = host

    monkeypatch.setattr(cli_module, "serve_app", fake_serve)
    result = runner.invoke(main, ["serve", "--data-dir", str(tmp_path),
                                  "--port", "9123", "--host", "0.0.0.0"])
    assert result.exit_code == 0, result.output
    assert f"serving {tmp_path} on 0.0.0.0:9123" in result.output
    assert isinstance(captured["settings"], Settings)
    assert captured["settings"].data_dir == tmp_path
    assert captured["settings"].port == 9123
    assert captured["host"] == "0.0.0.0"


def test_help_lists_all_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("ingest", "train-relevance", "simulate",
                    "make-synthetic", "serve"):
        assert command in result.output
